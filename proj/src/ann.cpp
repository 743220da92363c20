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

#include "arca/ann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include "arca/error.hpp"

namespace arca::ann {

namespace {

void normalize_rows(std::vector<double>& sums, std::size_t dim, std::span<const std::size_t> counts,
                    std::vector<float>& centroids) {
  const std::size_t c_count = counts.size();
  for (std::size_t c = 0; c < c_count; ++c) {
    if (counts[c] == 0) continue;
    double ss = 0.0;
    for (std::size_t j = 0; j < dim; ++j) ss += sums[c * dim + j] * sums[c * dim + j];
    if (ss == 0.0) continue;  // opposite members cancelled; keep the old centroid
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t j = 0; j < dim; ++j) centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] * inv);
  }
}

std::vector<float> kmeanspp_init(const VectorSet& v, std::size_t clusters, std::mt19937_64& rng) {
  const std::size_t n = v.size(), d = v.dim;
  std::vector<float> centroids(clusters * d);
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  std::vector<double> scores(n);
  std::vector<char> taken(n, 0);

  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < clusters; ++c) {
    taken[pick] = 1;
    std::copy_n(v.data.begin() + static_cast<std::ptrdiff_t>(pick * d), d,
                centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    if (c + 1 == clusters) break;
    kernels::score_rows(v.view(), v.row(pick), scores);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::max(best[i], scores[i]);
      // squared chord distance to the nearest chosen centroid, up to a factor 2
      if (!taken[i]) total += std::max(0.0, 1.0 - best[i]);
    }
    if (total <= 0.0) {
      // remaining points duplicate chosen centroids; take the first untaken
      pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
      continue;
    }
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    pick = n;
    std::size_t last_untaken = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      last_untaken = i;
      r -= std::max(0.0, 1.0 - best[i]);
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_untaken;
  }
  return centroids;
}

std::vector<SearchHit> top_k(std::vector<SearchHit> hits, std::size_t k) {
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), ranks_before);
  hits.resize(keep);
  return hits;
}

void check_query(std::size_t dim, std::span<const float> query, std::size_t k) {
  if (query.size() != dim) {
    throw Error(Errc::kDimensionMismatch, "query has " + std::to_string(query.size()) +
                                              " components, index has " + std::to_string(dim));
  }
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be >= 1");
}

}  // namespace

bool ranks_before(const SearchHit& a, const SearchHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

void VectorSet::append(std::string id, std::span<const float> v) {
  if (v.size() != dim) {
    throw Error(Errc::kDimensionMismatch, "vector has " + std::to_string(v.size()) +
                                              " components, set has " + std::to_string(dim));
  }
  ids.push_back(std::move(id));
  data.insert(data.end(), v.begin(), v.end());
}

std::size_t default_clusters(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

std::size_t default_nprobe(std::size_t clusters) {
  return std::max<std::size_t>(1, (clusters + 3) / 4);
}

AnnIndex AnnIndex::build(const VectorSet& vectors, std::size_t clusters, std::uint64_t seed) {
  if (clusters == 0) throw Error(Errc::kInvalidArgument, "cluster count must be >= 1");
  if (vectors.size() < clusters || vectors.size() == 0) {
    throw Error(Errc::kTooFewVectors, std::to_string(vectors.size()) + " vectors for " +
                                          std::to_string(clusters) + " clusters");
  }
  const std::size_t n = vectors.size(), d = vectors.dim;
  std::mt19937_64 rng(seed);
  std::vector<float> centroids = kmeanspp_init(vectors, clusters, rng);

  std::vector<std::int32_t> assign(n);
  std::vector<double> best(n);
  std::vector<double> sums(clusters * d);
  std::vector<std::size_t> counts(clusters);
  for (int it = 0; it < kMaxKMeansIterations; ++it) {
    kernels::assign_nearest(vectors.view(), {centroids.data(), clusters, d}, assign, best);
    kernels::accumulate_clusters(vectors.view(), assign, clusters, sums, counts);

    // Re-seed empty clusters with the points farthest from their centroid.
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return best[a] < best[b]; });
      }
    }
    std::size_t next_far = 0;
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      const std::size_t p = order[next_far++ % n];
      std::fill_n(sums.begin() + static_cast<std::ptrdiff_t>(c * d), d, 0.0);
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] = vectors.data[p * d + j];
      counts[c] = 1;
    }

    std::vector<float> next = centroids;
    normalize_rows(sums, d, counts, next);
    double movement = 0.0;
    for (std::size_t c = 0; c < clusters; ++c) {
      double dd = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = static_cast<double>(next[c * d + j]) - centroids[c * d + j];
        dd += diff * diff;
      }
      movement = std::max(movement, std::sqrt(dd));
    }
    centroids = std::move(next);
    if (movement < kCentroidTolerance) break;
  }
  kernels::assign_nearest(vectors.view(), {centroids.data(), clusters, d}, assign, best);

  AnnIndex index;
  index.dim_ = d;
  index.clusters_ = clusters;
  index.seed_ = seed;
  index.centroids_ = std::move(centroids);
  index.assignments_ = std::move(assign);
  index.fill_lists(vectors);
  return index;
}

AnnIndex AnnIndex::restore(const VectorSet& vectors, std::vector<float> centroids,
                           std::vector<std::int32_t> assignments, std::uint64_t seed) {
  if (vectors.dim == 0 || centroids.size() % vectors.dim != 0 || centroids.empty()) {
    throw Error(Errc::kCorruptStore, "centroid matrix does not match the vector dimension");
  }
  if (assignments.size() != vectors.size()) {
    throw Error(Errc::kCorruptStore, "assignment table does not cover the vector store");
  }
  AnnIndex index;
  index.dim_ = vectors.dim;
  index.clusters_ = centroids.size() / vectors.dim;
  for (auto a : assignments) {
    if (a < 0 || static_cast<std::size_t>(a) >= index.clusters_) {
      throw Error(Errc::kCorruptStore, "assignment out of range");
    }
  }
  index.seed_ = seed;
  index.centroids_ = std::move(centroids);
  index.assignments_ = std::move(assignments);
  index.fill_lists(vectors);
  return index;
}

void AnnIndex::fill_lists(const VectorSet& vectors) {
  lists_.assign(clusters_, {});
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto& list = lists_[static_cast<std::size_t>(assignments_[i])];
    list.ids.push_back(vectors.ids[i]);
    const auto r = vectors.row(i);
    list.data.insert(list.data.end(), r.begin(), r.end());
  }
}

std::vector<SearchHit> AnnIndex::search(std::span<const float> query, std::size_t k,
                                        std::size_t nprobe) const {
  if (assignments_.empty()) throw Error(Errc::kEmptyIndex, "index holds no vectors");
  check_query(dim_, query, k);
  if (nprobe == 0 || nprobe > clusters_) {
    throw Error(Errc::kInvalidArgument, "nprobe must be in [1, " + std::to_string(clusters_) + "]");
  }
  std::vector<double> cscore(clusters_);
  kernels::score_rows({centroids_.data(), clusters_, dim_}, query, cscore);
  std::vector<std::size_t> order(clusters_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (cscore[a] != cscore[b]) return cscore[a] > cscore[b];
                      return a < b;
                    });

  std::vector<SearchHit> hits;
  std::vector<double> scores;
  for (std::size_t p = 0; p < nprobe; ++p) {
    const InvertedList& list = lists_[order[p]];
    if (list.ids.empty()) continue;
    scores.resize(list.ids.size());
    kernels::score_rows({list.data.data(), list.ids.size(), dim_}, query, scores);
    for (std::size_t i = 0; i < list.ids.size(); ++i) hits.push_back({list.ids[i], scores[i]});
  }
  return top_k(std::move(hits), k);
}

std::vector<SearchHit> exact_search(const VectorSet& vectors, std::span<const float> query,
                                    std::size_t k) {
  if (vectors.size() == 0) throw Error(Errc::kEmptyIndex, "no vectors to search");
  check_query(vectors.dim, query, k);
  std::vector<double> scores(vectors.size());
  kernels::score_rows(vectors.view(), query, scores);
  std::vector<SearchHit> hits;
  hits.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) hits.push_back({vectors.ids[i], scores[i]});
  return top_k(std::move(hits), k);
}

double recall(std::span<const SearchHit> approx, std::span<const SearchHit> exact) {
  if (exact.empty()) return 1.0;
  std::unordered_set<std::string> found;
  for (const auto& h : approx) found.insert(h.id);
  std::size_t hit = 0;
  for (const auto& h : exact) hit += found.count(h.id);
  return static_cast<double>(hit) / static_cast<double>(exact.size());
}

}  // namespace arca::ann
