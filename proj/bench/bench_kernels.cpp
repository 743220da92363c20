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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "arca/ann.hpp"
#include "arca/embed.hpp"
#include "arca/kernels.hpp"

namespace {

using namespace arca;

std::vector<float> random_unit_rows(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  std::vector<float> m(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double norm = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      m[r * dim + c] = nd(rng);
      norm += double(m[r * dim + c]) * m[r * dim + c];
    }
    for (std::size_t c = 0; c < dim; ++c) m[r * dim + c] = static_cast<float>(m[r * dim + c] / std::sqrt(norm));
  }
  return m;
}

void BM_ScoreRows(benchmark::State& state, bool parallel) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 256;
  const auto data = random_unit_rows(rows, dim, 1);
  const auto q = random_unit_rows(1, dim, 2);
  std::vector<double> out(rows);
  const kernels::MatrixView m{data.data(), rows, dim};
  for (auto _ : state) {
    if (parallel) kernels::score_rows(m, q, out);
    else kernels::serial::score_rows(m, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_AssignNearest(benchmark::State& state, bool parallel) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 256, clusters = 100;
  const auto data = random_unit_rows(rows, dim, 3);
  const auto cent = random_unit_rows(clusters, dim, 4);
  std::vector<std::int32_t> assign(rows);
  std::vector<double> best(rows);
  const kernels::MatrixView p{data.data(), rows, dim}, c{cent.data(), clusters, dim};
  for (auto _ : state) {
    if (parallel) kernels::assign_nearest(p, c, assign, best);
    else kernels::serial::assign_nearest(p, c, assign, best);
    benchmark::DoNotOptimize(assign.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_IndexSearch(benchmark::State& state) {
  const std::size_t n = 10000, dim = 256;
  ann::VectorSet vs;
  vs.dim = dim;
  const auto data = random_unit_rows(n, dim, 5);
  for (std::size_t i = 0; i < n; ++i) vs.append("v" + std::to_string(i), {data.data() + i * dim, dim});
  const auto index = ann::AnnIndex::build(vs, 100, 7);
  const auto q = random_unit_rows(1, dim, 6);
  const auto nprobe = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(index.search(q, 100, nprobe));
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScoreRows, serial, false)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(BM_ScoreRows, openmp, true)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(BM_AssignNearest, serial, false)->Arg(10000);
BENCHMARK_CAPTURE(BM_AssignNearest, openmp, true)->Arg(10000);
BENCHMARK(BM_IndexSearch)->Arg(1)->Arg(25)->Arg(100);

BENCHMARK_MAIN();
