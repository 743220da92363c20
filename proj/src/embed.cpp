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

#include "arca/embed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "arca/error.hpp"
#include "arca/hash.hpp"
#include "arca/kernels.hpp"

namespace arca::embed {

namespace {

bool token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

void normalize_into(const std::vector<double>& acc, std::vector<float>& out) {
  double ss = 0.0;
  for (double v : acc) ss += v * v;
  const double norm = std::sqrt(ss);
  out.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!token_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::string tok;
    while (i < text.size() && token_char(static_cast<unsigned char>(text[i]))) {
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::pair<std::size_t, int> hash_token(std::string_view token, std::size_t dim, std::uint64_t seed) {
  const std::uint64_t h = mix64(fnv1a64(token) ^ mix64(seed));
  return {static_cast<std::size_t>(h % dim), (h >> 63) != 0 ? -1 : 1};
}

EmbeddingVector offline_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) throw Error(Errc::kInvalidArgument, "offline embedding dimension must be >= 8");
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(Errc::kEmptyText, "text has no tokens");
  std::vector<double> acc(dim, 0.0);
  for (const auto& t : tokens) {
    auto [bucket, sign] = hash_token(t, dim, seed);
    acc[bucket] += sign;
  }
  if (std::all_of(acc.begin(), acc.end(), [](double v) { return v == 0.0; })) {
    // every token cancelled against another in its bucket
    acc[fnv1a64(text) % dim] = 1.0;
  }
  EmbeddingVector v;
  normalize_into(acc, v.components);
  v.provider_tag = "offline-hash:" + std::to_string(dim) + ":" + std::to_string(seed);
  return v;
}

OfflineEmbeddingProvider::OfflineEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 8) throw Error(Errc::kInvalidArgument, "offline embedding dimension must be >= 8");
}

std::vector<float> OfflineEmbeddingProvider::raw_embed(std::string_view text) const {
  return offline_embed(text, dim_, seed_).components;
}

std::string OfflineEmbeddingProvider::tag() const {
  return "offline-hash:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEndpoint endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {}

std::vector<float> RemoteEmbeddingProvider::raw_embed(std::string_view text) const {
  const nlohmann::json body = {{"model", endpoint_.model},
                               {"input", std::string(text)},
                               {"dimensions", dim_}};
  const nlohmann::json reply = post_json(endpoint_, "/embeddings", body);
  try {
    return reply.at("data").at(0).at("embedding").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProviderUnavailable, std::string("unexpected embeddings reply: ") + e.what());
  }
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(Errc::kEmptyText, "cannot embed empty text");
  }
  std::vector<float> raw = provider.raw_embed(text);
  if (raw.size() != provider.dimension()) {
    throw Error(Errc::kDimensionMismatch, "provider returned " + std::to_string(raw.size()) +
                                              " components, expected " +
                                              std::to_string(provider.dimension()));
  }
  std::vector<double> acc(raw.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw Error(Errc::kNonFiniteInput, "non-finite embedding component");
    acc[i] = raw[i];
    ss += acc[i] * acc[i];
  }
  if (ss == 0.0) throw Error(Errc::kZeroVector, "provider returned the zero vector");
  EmbeddingVector v;
  normalize_into(acc, v.components);
  v.provider_tag = provider.tag();
  return v;
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbeddingProvider& provider) {
  std::vector<EmbeddingVector> out(texts.size());
  std::exception_ptr failure;
  std::mutex mu;
  const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = embed(texts[static_cast<std::size_t>(i)], provider);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch, "cosine of vectors with different dimensions");
  }
  const double ab = kernels::dot(a, b);
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(Errc::kZeroVector, "cosine with a zero vector");
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.view(), b.view()); }

}  // namespace arca::embed
