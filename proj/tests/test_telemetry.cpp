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

#include <cmath>
#include <random>

#include "arca/error.hpp"
#include "arca/telemetry.hpp"

using namespace arca;
using namespace arca::telemetry;

namespace {

TelemetrySeries series(Counter c, std::vector<std::pair<double, double>> pts) {
  TelemetrySeries s;
  s.counter = c;
  for (auto [t, v] : pts) s.samples.push_back({t, v});
  return s;
}

// Brute force, written from the definition: mean of successive differences
// over the column range; population std by a second pass.
std::array<double, 21> oracle(const AlignedMatrix& m) {
  std::array<double, 21> out{};
  const std::size_t n = m.rows();
  for (std::size_t c = 0; c < 7; ++c) {
    long double sum = 0, lo = m.values[0][c], hi = lo;
    for (std::size_t r = 0; r < n; ++r) {
      sum += m.values[r][c];
      lo = std::min<long double>(lo, m.values[r][c]);
      hi = std::max<long double>(hi, m.values[r][c]);
    }
    const long double mean = sum / n;
    long double ss = 0;
    for (std::size_t r = 0; r < n; ++r) ss += (m.values[r][c] - mean) * (m.values[r][c] - mean);
    long double diffs = 0;
    for (std::size_t r = 1; r < n; ++r) diffs += m.values[r][c] - m.values[r - 1][c];
    const long double grad = (n < 2 || hi == lo) ? 0.0L : (diffs / (n - 1)) / (hi - lo);
    out[c * 3] = static_cast<double>(grad);
    out[c * 3 + 1] = static_cast<double>(mean);
    out[c * 3 + 2] = static_cast<double>(std::sqrt(ss / n));
  }
  return out;
}

}  // namespace

TEST_CASE("counter names round-trip") {
  for (Counter c : kAllCounters) CHECK(parse_counter(counter_name(c)) == c);
  CHECK_FALSE(parse_counter("gpu_util").has_value());
}

TEST_CASE("align interpolates onto a uniform grid and masks imputed cells") {
  std::vector<TelemetrySeries> in = {series(Counter::kCpuUtil, {{0, 10}, {10, 30}}),
                                     series(Counter::kMemUtil, {{5, 50}, {10, 60}})};
  const auto m = align(in, 5.0);
  REQUIRE(m.rows() == 3);
  CHECK(m.grid == std::vector<double>{0, 5, 10});
  CHECK(m.values[1][0] == 20.0);  // interpolated
  CHECK(m.mask[1][0]);
  CHECK_FALSE(m.mask[0][0]);
  CHECK(m.values[0][1] == 50.0);  // leading edge takes the nearest value
  CHECK(m.mask[0][1]);
  CHECK_FALSE(m.mask[1][1]);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(m.values[r][static_cast<std::size_t>(Counter::kSocketErrors)] == 0.0);
    CHECK(m.mask[r][static_cast<std::size_t>(Counter::kSocketErrors)]);
  }
}

TEST_CASE("align rejects bad input") {
  std::vector<TelemetrySeries> none = {series(Counter::kCpuUtil, {})};
  CHECK_THROWS_AS(align(none, 1.0), Error);
  try {
    align(none, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kAllSeriesEmpty);
  }
  std::vector<TelemetrySeries> nan = {series(Counter::kCpuUtil, {{0, std::nan("")}})};
  try {
    align(nan, 1.0);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNonFiniteInput);
  }
  std::vector<TelemetrySeries> back = {series(Counter::kCpuUtil, {{1, 1}, {1, 2}})};
  CHECK_THROWS_AS(align(back, 1.0), Error);
  std::vector<TelemetrySeries> dup = {series(Counter::kCpuUtil, {{1, 1}}), series(Counter::kCpuUtil, {{2, 1}})};
  CHECK_THROWS_AS(align(dup, 1.0), Error);
  CHECK_THROWS_AS(align(std::vector<TelemetrySeries>{series(Counter::kCpuUtil, {{0, 1}})}, 0.0), Error);
}

TEST_CASE("vectorize: a single row has zero gradient and std") {
  std::vector<TelemetrySeries> in = {series(Counter::kCpuUtil, {{3, 42}})};
  const auto v = vectorize(align(in, 1.0));
  CHECK(v.components.size() == 21);
  CHECK(v.grad(Counter::kCpuUtil) == 0.0);
  CHECK(v.mean(Counter::kCpuUtil) == 42.0);
  CHECK(v.stddev(Counter::kCpuUtil) == 0.0);
}

TEST_CASE("vectorize: a linear ramp has gradient 1/(T-1)") {
  std::vector<TelemetrySeries> in = {series(Counter::kMemUtil, {{0, 0}, {4, 8}})};
  const auto v = vectorize(align(in, 1.0));
  CHECK(v.grad(Counter::kMemUtil) == doctest::Approx(0.25));
  CHECK(v.mean(Counter::kMemUtil) == doctest::Approx(4.0));
  CHECK(v.stddev(Counter::kMemUtil) == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("vectorize agrees with the brute-force oracle on random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    AlignedMatrix m;
    const std::size_t n = 1 + rng() % 50;
    for (std::size_t r = 0; r < n; ++r) {
      m.grid.push_back(static_cast<double>(r));
      AlignedMatrix::Row row{};
      for (auto& x : row) x = std::uniform_real_distribution<double>(-100, 100)(rng);
      if (trial % 7 == 0) row[2] = 5.0;  // constant column
      m.values.push_back(row);
      m.mask.push_back({});
    }
    const auto got = vectorize(m);
    const auto want = oracle(m);
    for (std::size_t i = 0; i < 21; ++i) CHECK(std::abs(got.components[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("telemetry_similarity is a cosine of z-scores") {
  TelemetryVector a, b;
  for (std::size_t i = 0; i < 21; ++i) {
    a.components[i] = static_cast<double>(i);
    b.components[i] = static_cast<double>(2 * i);
  }
  NormalizationStats st;  // zero means, zero stds -> scale 1
  CHECK(telemetry_similarity(a, b, st) == doctest::Approx(1.0));
  CHECK(telemetry_similarity(a, a, st) == doctest::Approx(1.0));
  const std::vector<TelemetryVector> both = {a, b};
  const auto stats = compute_stats(both);
  CHECK(telemetry_similarity(a, b, stats) == doctest::Approx(-1.0));

  TelemetryVector z;
  try {
    telemetry_similarity(z, a, st);
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kZeroVector);
  }
}

TEST_CASE("compute_stats uses population moments") {
  TelemetryVector a, b;
  a.components[0] = 1.0;
  b.components[0] = 3.0;
  const std::vector<TelemetryVector> v = {a, b};
  const auto st = compute_stats(v);
  CHECK(st.mean[0] == 2.0);
  CHECK(st.stddev[0] == 1.0);
  CHECK(st.scale(1) == 1.0);
  CHECK_THROWS_AS(compute_stats(std::vector<TelemetryVector>{}), Error);
}

TEST_CASE("CSV and JSON ingestion round-trip") {
  std::vector<TelemetrySeries> in = {series(Counter::kCpuUtil, {{0.1, 1.0 / 3.0}, {5.2, 2.5}}),
                                     series(Counter::kSocketErrors, {{1.0, 0.0}})};
  const auto csv = to_csv(in);
  const auto back = parse_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].samples[0].value == 1.0 / 3.0);
  CHECK(back[1].counter == Counter::kSocketErrors);
  const auto j = to_json(in);
  const auto back2 = parse_json(j);
  CHECK(back2[0].samples[1].timestamp == 5.2);
  CHECK_THROWS_AS(parse_csv("time,counter,value\n1,cpu_util,2\n"), Error);
  CHECK_THROWS_AS(parse_csv("timestamp,counter,value\n1,gpu,2\n"), Error);
  CHECK_THROWS_AS(parse_csv("timestamp,counter,value\n1,cpu_util,abc\n"), Error);
  // out-of-order rows are sorted
  const auto sorted = parse_csv("timestamp,counter,value\n5,cpu_util,2\n1,cpu_util,1\n");
  CHECK(sorted[0].samples[0].timestamp == 1.0);
}
