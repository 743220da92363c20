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

// Dense float kernels behind the vector search layer. Every kernel has a
// serial reference in arca::kernels::serial and an OpenMP version with the
// same signature in arca::kernels. Both produce bit-identical output: work is
// split across rows (or centroid ranges), never across a reduction.
namespace arca::kernels {

/// Row-major view over `rows` vectors of `cols` floats.
struct MatrixView {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const float> row(std::size_t i) const {
    return {data + i * cols, cols};
  }
};

/// Inner product accumulated in double, left to right.
double dot(std::span<const float> a, std::span<const float> b);

namespace serial {

void score_rows(MatrixView m, std::span<const float> query,
                std::span<double> out);

// For each point, index of the highest-scoring centroid (lowest index wins
// ties) and that score.
void assign_nearest(MatrixView points, MatrixView centroids,
                    std::span<std::int32_t> assign, std::span<double> best);

// sums is C x cols, counts is C; both are overwritten.
void accumulate_clusters(MatrixView points, std::span<const std::int32_t> assign,
                         std::size_t num_clusters, std::span<double> sums,
                         std::span<std::size_t> counts);

}  // namespace serial

void score_rows(MatrixView m, std::span<const float> query,
                std::span<double> out);

void assign_nearest(MatrixView points, MatrixView centroids,
                    std::span<std::int32_t> assign, std::span<double> best);

void accumulate_clusters(MatrixView points, std::span<const std::int32_t> assign,
                         std::size_t num_clusters, std::span<double> sums,
                         std::span<std::size_t> counts);

}  // namespace arca::kernels
