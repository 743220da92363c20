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
#include <vector>

#include "arca/kernels.hpp"

namespace arca::ann {

struct SearchHit {
  std::string id;
  double score = 0.0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Result order: score descending, then id ascending.
bool ranks_before(const SearchHit& a, const SearchHit& b);

/// Unit-norm float rows with a parallel id list.
struct VectorSet {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<float> data;  // ids.size() x dim, row-major

  std::size_t size() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  kernels::MatrixView view() const { return {data.data(), ids.size(), dim}; }
  void append(std::string id, std::span<const float> v);
};

/// ceil(sqrt(n)), at least 1.
std::size_t default_clusters(std::size_t n);
/// max(1, ceil(clusters / 4)).
std::size_t default_nprobe(std::size_t clusters);

inline constexpr int kMaxKMeansIterations = 50;
inline constexpr double kCentroidTolerance = 1e-6;

/// Inverted-file index: spherical k-means centroids, then exhaustive cosine
/// over the members of the probed clusters. Immutable after build.
class AnnIndex {
 public:
  /// k-means++ seeding, at most 50 Lloyd iterations or until no centroid
  /// moves by 1e-6. Throws TooFewVectors when clusters > vectors.
  static AnnIndex build(const VectorSet& vectors, std::size_t clusters, std::uint64_t seed);

  /// Rebuild the inverted lists from persisted centroids and assignments.
  static AnnIndex restore(const VectorSet& vectors, std::vector<float> centroids,
                          std::vector<std::int32_t> assignments, std::uint64_t seed);

  /// Top-k over the nprobe best clusters. Throws EmptyIndex.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                std::size_t nprobe) const;

  std::size_t clusters() const { return clusters_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return assignments_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<float>& centroids() const { return centroids_; }
  /// Cluster of each vector, in the row order of the VectorSet used to build.
  const std::vector<std::int32_t>& assignments() const { return assignments_; }
  std::size_t list_size(std::size_t cluster) const { return lists_[cluster].ids.size(); }
  const std::vector<std::string>& list_ids(std::size_t cluster) const { return lists_[cluster].ids; }

 private:
  struct InvertedList {
    std::vector<std::string> ids;
    std::vector<float> data;
  };

  void fill_lists(const VectorSet& vectors);

  std::size_t dim_ = 0;
  std::size_t clusters_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<float> centroids_;
  std::vector<std::int32_t> assignments_;
  std::vector<InvertedList> lists_;
};

/// Brute-force cosine over every vector; same ordering contract as search.
std::vector<SearchHit> exact_search(const VectorSet& vectors, std::span<const float> query,
                                    std::size_t k);

/// |approx ∩ exact| / |exact|.
double recall(std::span<const SearchHit> approx, std::span<const SearchHit> exact);

}  // namespace arca::ann
