// Copyright 2026 The ARCA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "arca/embed.hpp"
#include "arca/error.hpp"
#include "support.hpp"

using namespace arca;
using namespace arca::embed;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

double big_cosine(std::span<const float> a, std::span<const float> b) {
  Big ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += Big(a[i]) * Big(b[i]);
    aa += Big(a[i]) * Big(a[i]);
    bb += Big(b[i]) * Big(b[i]);
  }
  return static_cast<double>(ab / (sqrt(aa) * sqrt(bb)));
}

class VectorProvider final : public EmbeddingProvider {
 public:
  explicit VectorProvider(std::vector<float> v) : v_(std::move(v)) {}
  std::vector<float> raw_embed(std::string_view) const override { return v_; }
  std::size_t dimension() const override { return 4; }
  std::string tag() const override { return "fixed"; }

 private:
  std::vector<float> v_;
};

}  // namespace

TEST_CASE("tokenize lowercases alphanumeric runs") {
  CHECK(tokenize("OOM-killed: Pod_7 at 10.0.0.1!") ==
        std::vector<std::string>{"oom", "killed", "pod", "7", "at", "10", "0", "0", "1"});
  CHECK(tokenize("  ...  ").empty());
}

TEST_CASE("offline embedding is unit norm, deterministic and seed dependent") {
  const auto a = offline_embed("memory leak in the geo service", 256, 1);
  const auto b = offline_embed("memory leak in the geo service", 256, 1);
  const auto c = offline_embed("memory leak in the geo service", 256, 2);
  CHECK(a.components == b.components);
  CHECK(a.components != c.components);
  CHECK(a.dim() == 256);
  CHECK(a.provider_tag == "offline-hash:256:1");
  double n = 0;
  for (float x : a.components) n += double(x) * x;
  CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(offline_embed(" \n\t", 256, 1), Error);
}

TEST_CASE("similar texts are closer than unrelated ones") {
  const auto a = offline_embed("container OOM killed after memory leak in handler", 1024, 3);
  const auto b = offline_embed("memory leak in handler, container was OOM killed", 1024, 3);
  const auto c = offline_embed("upstream timeout while calling the rate endpoint", 1024, 3);
  CHECK(cosine(a, b) > cosine(a, c));
  CHECK(cosine(a, a) == doctest::Approx(1.0));
}

TEST_CASE("cosine matches a 50-digit oracle") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const std::size_t dim = 1 + rng() % 300;
    std::normal_distribution<float> nd;
    std::vector<float> a(dim), b(dim);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    CHECK(std::abs(cosine(a, b) - big_cosine(a, b)) <= 1e-12);
  }
  const std::vector<float> x = {1, 2}, y = {1, 2, 3};
  CHECK_THROWS_AS(cosine(x, y), Error);
}

TEST_CASE("embed validates provider output") {
  const VectorProvider good({3, 0, 4, 0});
  const auto e = embed::embed("hello", good);
  CHECK(e.components == std::vector<float>{0.6f, 0.0f, 0.8f, 0.0f});
  CHECK(e.provider_tag == "fixed");

  auto code_of = [](const EmbeddingProvider& p) {
    try {
      embed::embed("hello", p);
    } catch (const Error& err) {
      return err.code();
    }
    return Errc::kIo;
  };
  CHECK(code_of(VectorProvider({1, 2, 3})) == Errc::kDimensionMismatch);
  CHECK(code_of(VectorProvider({0, 0, 0, 0})) == Errc::kZeroVector);
  CHECK(code_of(VectorProvider({1, std::nanf(""), 0, 0})) == Errc::kNonFiniteInput);
  CHECK_THROWS_AS(embed::embed("   ", good), Error);
}

TEST_CASE("embed_batch keeps input order") {
  const OfflineEmbeddingProvider p(128, 4);
  const auto texts = testing::topic_texts(300, 2);
  const auto batch = embed_batch(texts, p);
  REQUIRE(batch.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); i += 37) CHECK(batch[i].components == embed::embed(texts[i], p).components);
}
