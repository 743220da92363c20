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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arca/llm.hpp"

namespace arca::embed {

inline constexpr std::size_t kDefaultDimension = 3072;

/// Unit-norm dense vector tagged with the provider that produced it.
struct EmbeddingVector {
  std::vector<float> components;
  std::string provider_tag;

  std::size_t dim() const { return components.size(); }
  std::span<const float> view() const { return components; }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Raw provider output; embed() validates and normalizes it.
  virtual std::vector<float> raw_embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string tag() const = 0;
  virtual bool remote() const { return false; }
};

/// Embed non-empty text. Throws EmptyText, DimensionMismatch,
/// NonFiniteInput, or whatever the provider throws (ProviderUnavailable).
EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

/// Parallel over texts; output order matches input order.
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbeddingProvider& provider);

/// Lowercased maximal runs of alphanumerics (bytes >= 0x80 count as
/// alphanumeric so UTF-8 words stay whole).
std::vector<std::string> tokenize(std::string_view text);

/// Bucket in [0, dim) and sign in {-1, +1} of one token.
std::pair<std::size_t, int> hash_token(std::string_view token, std::size_t dim,
                                       std::uint64_t seed);

/// Signed feature hashing of token counts, L2-normalized.
EmbeddingVector offline_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class OfflineEmbeddingProvider final : public EmbeddingProvider {
 public:
  OfflineEmbeddingProvider(std::size_t dim, std::uint64_t seed);
  std::vector<float> raw_embed(std::string_view text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string tag() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// OpenAI-compatible /embeddings endpoint.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(RemoteEndpoint endpoint, std::size_t dim);
  std::vector<float> raw_embed(std::string_view text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string tag() const override { return "remote:" + endpoint_.model; }
  bool remote() const override { return true; }

 private:
  RemoteEndpoint endpoint_;
  std::size_t dim_;
};

/// dot(a,b) / (|a||b|), clamped to [-1, 1]. Throws DimensionMismatch.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace arca::embed
