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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace arca::telemetry {

/// Canonical container counters. Column order in AlignedMatrix and block
/// order in TelemetryVector follow this enumeration.
enum class Counter : std::uint8_t {
  kCpuUtil,
  kMemUtil,
  kNetRxBytes,
  kNetTxBytes,
  kBlkIoOps,
  kOpLatencyAvg,
  kSocketErrors,
};

inline constexpr std::size_t kCounterCount = 7;
inline constexpr std::size_t kFeaturesPerCounter = 3;
inline constexpr std::size_t kVectorSize = kCounterCount * kFeaturesPerCounter;

inline constexpr std::array<Counter, kCounterCount> kAllCounters = {
    Counter::kCpuUtil,    Counter::kMemUtil,      Counter::kNetRxBytes,
    Counter::kNetTxBytes, Counter::kBlkIoOps,     Counter::kOpLatencyAvg,
    Counter::kSocketErrors};

std::string_view counter_name(Counter c);
std::optional<Counter> parse_counter(std::string_view name);

struct Sample {
  double timestamp = 0.0;  // seconds
  double value = 0.0;
};

struct TelemetrySeries {
  Counter counter = Counter::kCpuUtil;
  std::vector<Sample> samples;
  std::string unit;
};

struct AlignedMatrix {
  using Row = std::array<double, kCounterCount>;
  using MaskRow = std::array<bool, kCounterCount>;

  std::vector<double> grid;
  std::vector<Row> values;
  std::vector<MaskRow> mask;  // true where the cell was imputed

  std::size_t rows() const { return grid.size(); }
};

/// 7 counters x {normalized gradient, mean, population std}, counter-major.
struct TelemetryVector {
  std::array<double, kVectorSize> components{};

  static constexpr std::size_t index(Counter c, std::size_t feature) {
    return static_cast<std::size_t>(c) * kFeaturesPerCounter + feature;
  }
  double grad(Counter c) const { return components[index(c, 0)]; }
  double mean(Counter c) const { return components[index(c, 1)]; }
  double stddev(Counter c) const { return components[index(c, 2)]; }

  friend bool operator==(const TelemetryVector&, const TelemetryVector&) = default;
};

/// Per-dimension population statistics over a knowledge base's vectors.
struct NormalizationStats {
  std::array<double, kVectorSize> mean{};
  std::array<double, kVectorSize> stddev{};

  // Divisor used for z-scores: stddev, or 1 where stddev is 0.
  double scale(std::size_t i) const { return stddev[i] == 0.0 ? 1.0 : stddev[i]; }

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// Resample every series onto a shared uniform grid by linear interpolation.
/// Counters without a series are zero-filled; edge gaps take the nearest
/// observed value. All of those cells are masked.
AlignedMatrix align(std::span<const TelemetrySeries> series_set, double grid_step);

TelemetryVector vectorize(const AlignedMatrix& m);

/// Cosine similarity of the z-scored vectors. Throws ZeroVector when either
/// normalized vector is all zeros.
double telemetry_similarity(const TelemetryVector& a, const TelemetryVector& b,
                            const NormalizationStats& stats);

NormalizationStats compute_stats(std::span<const TelemetryVector> vectors);

// Ingestion: CSV with header `timestamp,counter,value`, or a JSON array of
// {timestamp, counter, value}. Rows are grouped by counter and sorted by time.
std::vector<TelemetrySeries> parse_csv(std::string_view text);
std::vector<TelemetrySeries> parse_json(const nlohmann::json& rows);
std::string to_csv(std::span<const TelemetrySeries> series_set);
nlohmann::json to_json(std::span<const TelemetrySeries> series_set);

}  // namespace arca::telemetry
