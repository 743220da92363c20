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

#include "arca/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "arca/error.hpp"

namespace arca::telemetry {

namespace {

constexpr std::array<std::string_view, kCounterCount> kNames = {
    "cpu_util",     "mem_util",       "net_rx_bytes", "net_tx_bytes",
    "blk_io_ops",   "op_latency_avg", "socket_errors"};

void validate(const TelemetrySeries& s) {
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const Sample& p = s.samples[i];
    if (!std::isfinite(p.timestamp) || !std::isfinite(p.value)) {
      throw Error(Errc::kNonFiniteInput,
                  std::string("non-finite sample in ") + std::string(counter_name(s.counter)));
    }
    if (i > 0 && !(p.timestamp > s.samples[i - 1].timestamp)) {
      throw Error(Errc::kInvalidArgument,
                  std::string("timestamps not strictly increasing in ") +
                      std::string(counter_name(s.counter)));
    }
  }
}

// Value of a sorted series at time t, and whether it had to be imputed.
std::pair<double, bool> sample_at(const std::vector<Sample>& s, double t, double tol) {
  if (t <= s.front().timestamp) {
    return {s.front().value, s.front().timestamp - t > tol};
  }
  if (t >= s.back().timestamp) {
    return {s.back().value, t - s.back().timestamp > tol};
  }
  auto hi = std::lower_bound(s.begin(), s.end(), t,
                             [](const Sample& p, double x) { return p.timestamp < x; });
  if (std::abs(hi->timestamp - t) <= tol) return {hi->value, false};
  auto lo = hi - 1;
  if (std::abs(t - lo->timestamp) <= tol) return {lo->value, false};
  const double w = (t - lo->timestamp) / (hi->timestamp - lo->timestamp);
  return {lo->value + w * (hi->value - lo->value), true};
}

}  // namespace

std::string_view counter_name(Counter c) { return kNames[static_cast<std::size_t>(c)]; }

std::optional<Counter> parse_counter(std::string_view name) {
  for (std::size_t i = 0; i < kCounterCount; ++i) {
    if (kNames[i] == name) return static_cast<Counter>(i);
  }
  return std::nullopt;
}

AlignedMatrix align(std::span<const TelemetrySeries> series_set, double grid_step) {
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) {
    throw Error(Errc::kInvalidArgument, "grid_step must be positive");
  }
  std::array<const TelemetrySeries*, kCounterCount> by_counter{};
  double start = std::numeric_limits<double>::infinity();
  double end = -std::numeric_limits<double>::infinity();
  for (const TelemetrySeries& s : series_set) {
    auto& slot = by_counter[static_cast<std::size_t>(s.counter)];
    if (slot != nullptr) {
      throw Error(Errc::kInvalidArgument,
                  "duplicate series for " + std::string(counter_name(s.counter)));
    }
    validate(s);
    slot = &s;
    if (!s.samples.empty()) {
      start = std::min(start, s.samples.front().timestamp);
      end = std::max(end, s.samples.back().timestamp);
    }
  }
  if (!std::isfinite(start)) throw Error(Errc::kAllSeriesEmpty, "no samples in any series");

  const double tol = grid_step * 1e-9;
  const auto steps = static_cast<std::size_t>(std::floor((end - start) / grid_step + 1e-9));
  AlignedMatrix m;
  m.grid.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) m.grid.push_back(start + static_cast<double>(i) * grid_step);
  m.values.assign(m.grid.size(), AlignedMatrix::Row{});
  m.mask.assign(m.grid.size(), AlignedMatrix::MaskRow{});

  for (std::size_t c = 0; c < kCounterCount; ++c) {
    const TelemetrySeries* s = by_counter[c];
    const bool missing = s == nullptr || s->samples.empty();
    for (std::size_t r = 0; r < m.grid.size(); ++r) {
      if (missing) {
        m.values[r][c] = 0.0;
        m.mask[r][c] = true;
        continue;
      }
      auto [v, imputed] = sample_at(s->samples, m.grid[r], tol);
      m.values[r][c] = v;
      m.mask[r][c] = imputed;
    }
  }
  return m;
}

TelemetryVector vectorize(const AlignedMatrix& m) {
  const std::size_t rows = m.rows();
  if (rows == 0 || m.values.size() != rows) {
    throw Error(Errc::kInvalidArgument, "vectorize needs at least one row");
  }
  TelemetryVector out;
  const double n = static_cast<double>(rows);
  for (std::size_t c = 0; c < kCounterCount; ++c) {
    double sum = 0.0;
    double lo = m.values[0][c];
    double hi = lo;
    for (const auto& row : m.values) {
      sum += row[c];
      lo = std::min(lo, row[c]);
      hi = std::max(hi, row[c]);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& row : m.values) {
      const double d = row[c] - mean;
      ss += d * d;
    }
    double grad = 0.0;
    if (rows > 1 && hi > lo) {
      // mean of successive differences telescopes to (last - first) / (T - 1)
      grad = (m.values[rows - 1][c] - m.values[0][c]) / (n - 1.0) / (hi - lo);
    }
    const auto counter = static_cast<Counter>(c);
    out.components[TelemetryVector::index(counter, 0)] = grad;
    out.components[TelemetryVector::index(counter, 1)] = mean;
    out.components[TelemetryVector::index(counter, 2)] = std::sqrt(ss / n);
  }
  return out;
}

double telemetry_similarity(const TelemetryVector& a, const TelemetryVector& b,
                            const NormalizationStats& stats) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < kVectorSize; ++i) {
    const double za = (a.components[i] - stats.mean[i]) / stats.scale(i);
    const double zb = (b.components[i] - stats.mean[i]) / stats.scale(i);
    ab += za * zb;
    aa += za * za;
    bb += zb * zb;
  }
  if (aa == 0.0 || bb == 0.0) {
    throw Error(Errc::kZeroVector, "normalized telemetry vector is all zeros");
  }
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

NormalizationStats compute_stats(std::span<const TelemetryVector> vectors) {
  if (vectors.empty()) throw Error(Errc::kEmptyTelemetryStore, "no telemetry vectors");
  NormalizationStats st;
  const double n = static_cast<double>(vectors.size());
  for (std::size_t i = 0; i < kVectorSize; ++i) {
    double sum = 0.0;
    for (const auto& v : vectors) sum += v.components[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : vectors) {
      const double d = v.components[i] - mean;
      ss += d * d;
    }
    st.mean[i] = mean;
    st.stddev[i] = std::sqrt(ss / n);
  }
  return st;
}

namespace {

std::vector<TelemetrySeries> group_rows(
    std::vector<std::tuple<double, Counter, double>> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return std::get<0>(x) < std::get<0>(y);
  });
  std::map<Counter, TelemetrySeries> grouped;
  for (const auto& [t, c, v] : rows) {
    auto& s = grouped[c];
    s.counter = c;
    s.samples.push_back({t, v});
  }
  std::vector<TelemetrySeries> out;
  for (auto& [c, s] : grouped) {
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line_no) {
  std::string tmp(trim(field));
  try {
    std::size_t used = 0;
    const double v = std::stod(tmp, &used);
    if (used != tmp.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::kInvalidArgument,
                "bad number '" + tmp + "' on line " + std::to_string(line_no));
  }
}

}  // namespace

std::vector<TelemetrySeries> parse_csv(std::string_view text) {
  std::vector<std::tuple<double, Counter, double>> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "timestamp,counter,value") {
        throw Error(Errc::kInvalidArgument, "telemetry CSV header must be timestamp,counter,value");
      }
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error(Errc::kInvalidArgument, "expected 3 fields on line " + std::to_string(line_no));
    }
    const auto counter = parse_counter(trim(line.substr(c1 + 1, c2 - c1 - 1)));
    if (!counter) {
      throw Error(Errc::kInvalidArgument, "unknown counter on line " + std::to_string(line_no));
    }
    const double t = parse_number(line.substr(0, c1), line_no);
    const double v = parse_number(line.substr(c2 + 1), line_no);
    rows.emplace_back(t, *counter, v);
  }
  return group_rows(std::move(rows));
}

std::vector<TelemetrySeries> parse_json(const nlohmann::json& rows) {
  if (!rows.is_array()) throw Error(Errc::kInvalidArgument, "telemetry JSON must be an array");
  std::vector<std::tuple<double, Counter, double>> out;
  for (const auto& r : rows) {
    if (!r.is_object() || !r.contains("timestamp") || !r.contains("counter") ||
        !r.contains("value") || !r["timestamp"].is_number() || !r["value"].is_number() ||
        !r["counter"].is_string()) {
      throw Error(Errc::kInvalidArgument, "telemetry row needs timestamp, counter, value");
    }
    const auto counter = parse_counter(r["counter"].get<std::string>());
    if (!counter) throw Error(Errc::kInvalidArgument, "unknown counter " + r["counter"].dump());
    out.emplace_back(r["timestamp"].get<double>(), *counter, r["value"].get<double>());
  }
  return group_rows(std::move(out));
}

std::string to_csv(std::span<const TelemetrySeries> series_set) {
  std::vector<std::tuple<double, std::size_t, double>> rows;
  for (const auto& s : series_set) {
    for (const auto& p : s.samples) rows.emplace_back(p.timestamp, static_cast<std::size_t>(s.counter), p.value);
  }
  std::sort(rows.begin(), rows.end());
  std::ostringstream os;
  os.precision(17);
  os << "timestamp,counter,value\n";
  for (const auto& [t, c, v] : rows) os << t << ',' << kNames[c] << ',' << v << '\n';
  return os.str();
}

nlohmann::json to_json(std::span<const TelemetrySeries> series_set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : series_set) {
    for (const auto& p : s.samples) {
      arr.push_back({{"timestamp", p.timestamp},
                     {"counter", std::string(counter_name(s.counter))},
                     {"value", p.value}});
    }
  }
  return arr;
}

}  // namespace arca::telemetry
