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

#include "arca/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace arca::kernels {

double dot(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

namespace {

inline void nearest_one(MatrixView centroids, std::span<const float> p,
                        std::int32_t& assign, double& best) {
  std::int32_t arg = 0;
  double top = dot(p, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows; ++c) {
    const double s = dot(p, centroids.row(c));
    if (s > top) {
      top = s;
      arg = static_cast<std::int32_t>(c);
    }
  }
  assign = arg;
  best = top;
}

void accumulate_range(MatrixView points, std::span<const std::int32_t> assign,
                      std::size_t c0, std::size_t c1, std::span<double> sums,
                      std::span<std::size_t> counts) {
  const std::size_t d = points.cols;
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto c = static_cast<std::size_t>(assign[i]);
    if (c < c0 || c >= c1) continue;
    double* dst = sums.data() + c * d;
    const float* src = points.data + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += static_cast<double>(src[j]);
    ++counts[c];
  }
}

}  // namespace

namespace serial {

void score_rows(MatrixView m, std::span<const float> query,
                std::span<double> out) {
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = dot(m.row(i), query);
}

void assign_nearest(MatrixView points, MatrixView centroids,
                    std::span<std::int32_t> assign, std::span<double> best) {
  for (std::size_t i = 0; i < points.rows; ++i) {
    nearest_one(centroids, points.row(i), assign[i], best[i]);
  }
}

void accumulate_clusters(MatrixView points, std::span<const std::int32_t> assign,
                         std::size_t num_clusters, std::span<double> sums,
                         std::span<std::size_t> counts) {
  std::fill(sums.begin(), sums.end(), 0.0);
  std::fill(counts.begin(), counts.end(), std::size_t{0});
  accumulate_range(points, assign, 0, num_clusters, sums, counts);
}

}  // namespace serial

void score_rows(MatrixView m, std::span<const float> query,
                std::span<double> out) {
  const auto n = static_cast<std::int64_t>(m.rows);
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = dot(m.row(static_cast<std::size_t>(i)), query);
  }
}

void assign_nearest(MatrixView points, MatrixView centroids,
                    std::span<std::int32_t> assign, std::span<double> best) {
  const auto n = static_cast<std::int64_t>(points.rows);
#pragma omp parallel for schedule(static) if (n > 64)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    nearest_one(centroids, points.row(k), assign[k], best[k]);
  }
}

void accumulate_clusters(MatrixView points, std::span<const std::int32_t> assign,
                         std::size_t num_clusters, std::span<double> sums,
                         std::span<std::size_t> counts) {
  std::fill(sums.begin(), sums.end(), 0.0);
  std::fill(counts.begin(), counts.end(), std::size_t{0});
  // Each thread owns a contiguous centroid range and walks the points in
  // order, so per-centroid summation order matches the serial kernel.
#pragma omp parallel
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto rank = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t c0 = num_clusters * rank / nt;
    const std::size_t c1 = num_clusters * (rank + 1) / nt;
    accumulate_range(points, assign, c0, c1, sums, counts);
  }
}

}  // namespace arca::kernels
