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

#include <fstream>
#include <random>

#include <json.hpp>

#include "arca/error.hpp"
#include "arca/kb.hpp"
#include "support.hpp"

using namespace arca;
using namespace arca::kb;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::kIo;
}

telemetry::TelemetryVector tv(double base) {
  telemetry::TelemetryVector v;
  for (std::size_t i = 0; i < v.components.size(); ++i) v.components[i] = base + 0.25 * static_cast<double>(i);
  return v;
}

KnowledgeBase sample_kb(std::size_t n, std::size_t dim) {
  KnowledgeBase kb(dim);
  const auto texts = testing::topic_texts(n, 17);
  const embed::OfflineEmbeddingProvider p(dim, 5);
  for (std::size_t i = 0; i < n; ++i) {
    BugDescription d;
    d.incident_text = texts[i];
    d.resolution_text = "restart " + std::to_string(i);
    if (i % 3 == 0) d.labels = Labels{"MEM_LEAK", "BUG-" + std::to_string(i + 1)};
    std::optional<telemetry::TelemetryVector> t;
    if (i % 4 != 1) t = tv(static_cast<double>(i % 11));
    kb.insert_ticket("BUG-" + std::to_string(i), d, embed::embed(texts[i], p), t);
  }
  return kb;
}

}  // namespace

TEST_CASE("insert round trip per store") {
  KnowledgeBase kb(32);
  BugDescription d{"disk full on node 3", "expanded volume", "storage", std::nullopt};
  const auto e = embed::offline_embed("disk full", 32, 1);
  kb.insert_ticket("B1", d, e, tv(2.0));
  kb.insert_ticket("B2", {"no telemetry", std::nullopt, std::nullopt, std::nullopt}, e, std::nullopt);
  CHECK(kb.size() == 2);
  CHECK(kb.telemetry_count() == 1);
  CHECK(kb.description("B1") == d);
  CHECK(kb.embedding("B1").components == e.components);
  REQUIRE(kb.telemetry("B1") != nullptr);
  CHECK(*kb.telemetry("B1") == tv(2.0));
  CHECK(kb.telemetry("B2") == nullptr);
  CHECK(kb.ids() == std::vector<BugId>{"B1", "B2"});
}

TEST_CASE("insert errors") {
  KnowledgeBase kb(16);
  const auto e = embed::offline_embed("x y", 16, 1);
  kb.insert_ticket("A", {"t", {}, {}, {}}, e, std::nullopt);
  CHECK(code_of([&] { kb.insert_ticket("A", {"t", {}, {}, {}}, e, std::nullopt); }) == Errc::kDuplicateId);
  CHECK(code_of([&] { kb.insert_ticket("B", {"t", {}, {}, {}}, embed::offline_embed("x", 8, 1), std::nullopt); }) ==
        Errc::kDimensionMismatch);
  CHECK(code_of([&] { kb.insert_ticket("", {"t", {}, {}, {}}, e, std::nullopt); }) == Errc::kInvalidArgument);
  CHECK(code_of([&] { kb.insert_ticket("C", {"", {}, {}, {}}, e, std::nullopt); }) == Errc::kInvalidArgument);
  CHECK(code_of([&] { kb.description("nope"); }) == Errc::kUnknownId);
  CHECK(code_of([&] { kb.search(e.view(), 1, 1); }) == Errc::kNoIndex);
  CHECK(code_of([&] { kb.compute_telemetry_stats(); }) == Errc::kEmptyTelemetryStore);
}

TEST_CASE("index goes stale after inserts") {
  auto kb = sample_kb(30, 32);
  kb.build_index(0, 3);
  CHECK(kb.index().clusters() == 6);
  CHECK_FALSE(kb.index_stale());
  const auto q = kb.embedding("BUG-4");
  CHECK(kb.search(q.view(), 1, 6)[0].id == "BUG-4");
  kb.insert_ticket("late", {"late ticket", {}, {}, {}}, q, std::nullopt);
  CHECK(kb.index_stale());
  CHECK(code_of([&] { kb.search(q.view(), 1, 1); }) == Errc::kStaleIndex);
  kb.build_index(0, 3);
  CHECK(kb.search(q.view(), 50, kb.index().clusters()).size() == 31);
}

TEST_CASE("telemetry stats") {
  KnowledgeBase kb(8);
  const auto e = embed::offline_embed("a", 8, 1);
  kb.insert_ticket("x", {"t", {}, {}, {}}, e, tv(1.0));
  auto s = kb.compute_telemetry_stats();
  CHECK(s.mean == tv(1.0).components);
  for (double sd : s.stddev) CHECK(sd == 0.0);
  CHECK(s.scale(0) == 1.0);

  kb.insert_ticket("y", {"t", {}, {}, {}}, e, tv(3.0));
  s = kb.compute_telemetry_stats();
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    CHECK(s.mean[i] == doctest::Approx(2.0 + 0.25 * static_cast<double>(i)));
    CHECK(s.stddev[i] == doctest::Approx(1.0));
  }
  CHECK(kb.compute_telemetry_stats() == s);
}

TEST_CASE("save and load preserve ranked results exactly") {
  testing::TempDir dir("kb");
  auto kb = sample_kb(1000, 48);
  kb.build_index(0, 11);
  kb.save(dir.path());
  const auto back = KnowledgeBase::load(dir.path());
  CHECK(back.size() == kb.size());
  CHECK(back.telemetry_count() == kb.telemetry_count());
  CHECK(back.ids() == kb.ids());
  CHECK(back.telemetry_stats() == kb.telemetry_stats());
  for (const auto& id : kb.ids()) {
    CHECK(back.description(id) == kb.description(id));
    const auto* a = kb.telemetry(id);
    const auto* b = back.telemetry(id);
    CHECK((a == nullptr) == (b == nullptr));
    if (a && b) CHECK(*a == *b);
  }
  const auto qs = testing::embed_set(testing::topic_texts(20, 404), 48, 5);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t np : {std::size_t{1}, std::size_t{8}, kb.index().clusters()}) {
      CHECK(kb.search(qs.row(i), 100, np) == back.search(qs.row(i), 100, np));
    }
  }
}

TEST_CASE("empty knowledge base round trip") {
  testing::TempDir dir("kb-empty");
  KnowledgeBase kb(12);
  kb.save(dir.path());
  const auto back = KnowledgeBase::load(dir.path());
  CHECK(back.size() == 0);
  CHECK(back.dimension() == 12);
  CHECK_FALSE(back.has_index());
}

TEST_CASE("corruption and version checks") {
  testing::TempDir dir("kb-bad");
  auto kb = sample_kb(40, 16);
  kb.build_index(0, 1);
  kb.save(dir.path());
  namespace fs = std::filesystem;

  const auto emb = dir.path() / "embeddings.f32";
  const auto size = fs::file_size(emb);
  fs::resize_file(emb, size - 4);
  CHECK(code_of([&] { KnowledgeBase::load(dir.path()); }) == Errc::kCorruptStore);
  kb.save(dir.path());
  CHECK_NOTHROW(KnowledgeBase::load(dir.path()));

  {
    std::fstream f(dir.path() / "descriptions.ndjson", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('#');
  }
  CHECK(code_of([&] { KnowledgeBase::load(dir.path()); }) == Errc::kCorruptStore);
  kb.save(dir.path());

  nlohmann::json m;
  {
    std::ifstream in(dir.path() / "manifest.json");
    in >> m;
  }
  m["format_version"] = kFormatVersion + 1;
  {
    std::ofstream out(dir.path() / "manifest.json");
    out << m.dump();
  }
  CHECK(code_of([&] { KnowledgeBase::load(dir.path()); }) == Errc::kVersionMismatch);

  fs::remove(dir.path() / "manifest.json");
  CHECK(code_of([&] { KnowledgeBase::load(dir.path()); }) == Errc::kCorruptStore);
}
