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

#include "arca/corpus.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "arca/error.hpp"
#include "arca/hash.hpp"
#include "arca/llm.hpp"

namespace arca::corpus {

namespace fs = std::filesystem;
using telemetry::Counter;

namespace {

struct AppSpec {
  std::string_view app;
  std::array<std::string_view, 6> services;
  std::array<std::string_view, 6> callbacks;  // parallel to services
  std::array<std::string_view, 6> endpoints;
};

constexpr std::array<AppSpec, 3> kApps = {{
    {"hotel-reservation",
     {"geo", "rate", "search", "profile", "reservation", "recommendation"},
     {"NearbyHandler", "GetRatesHandler", "SearchHotelsHandler", "GetProfilesHandler",
      "MakeReservationHandler", "GetRecommendationsHandler"},
     {"/hotels/nearby", "/rates", "/search", "/profiles", "/reservation", "/recommendations"}},
    {"social-network",
     {"compose-post", "home-timeline", "user-timeline", "social-graph", "url-shorten", "media"},
     {"ComposePostCallback", "ReadHomeTimelineCallback", "ReadUserTimelineCallback",
      "FollowCallback", "ShortenUrlCallback", "UploadMediaCallback"},
     {"/wrk2-api/post/compose", "/wrk2-api/home-timeline/read", "/wrk2-api/user-timeline/read",
      "/wrk2-api/user/follow", "/wrk2-api/url/shorten", "/wrk2-api/media/upload"}},
    {"media-microservices",
     {"movie-info", "cast-info", "review-storage", "rating", "user-review", "plot"},
     {"ReadMovieInfoHandler", "ReadCastInfoHandler", "StoreReviewHandler", "UploadRatingHandler",
      "ReadUserReviewsHandler", "ReadPlotHandler"},
     {"/movie-info/read", "/cast-info/read", "/review/store", "/rating/upload", "/user-review/read",
      "/plot/read"}},
}};

// Suffixes appended to callback names so configs sharing a service still
// differ ("NearbyHandler" -> "NearbyHandlerV2").
constexpr std::array<std::string_view, 8> kCallbackVariants = {"", "V2", "Async", "Batch", "Cached", "Legacy", "Internal", "Stream"};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::string hex_token(std::uint64_t v, int digits) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[v & 0xF];
    v >>= 4;
  }
  return s;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string iso_time(double epoch_s) {
  using namespace std::chrono;
  const auto whole = static_cast<std::int64_t>(std::floor(epoch_s));
  const int millis = static_cast<int>((epoch_s - static_cast<double>(whole)) * 1000.0);
  const sys_days day{days{whole / 86400}};
  const year_month_day ymd{day};
  const std::int64_t sod = whole % 86400;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60),
                millis);
  return buf;
}

bool has_cpu_fault(const FaultConfig& f) { return f.cpu_work_ms > 0.0 || f.request_ramp_rate > 0.0; }
bool has_leak(const FaultConfig& f) { return f.leak_bytes_per_req > 0.0; }
bool has_delay(const FaultConfig& f) { return f.delay_ms_mean > 0.0; }

// Per-second state of the simulated service.
struct Tick {
  double rps = 0, served = 0, queue = 0, cpu = 0, mem_mb = 0, latency = 0;
  double rx = 0, tx = 0, blk = 0, sock_err = 0, sleep_ms = 0;
  int timeouts = 0;
};

constexpr int kSleepDraws = 10;

class LogWriter {
 public:
  LogWriter(double start_epoch) : start_(start_epoch) {}
  void line(double t, std::string_view level, std::string_view source, const std::string& msg) {
    out_ += iso_time(start_ + t);
    out_.push_back(' ');
    out_ += level;
    out_.push_back(' ');
    out_ += source;
    out_ += ": ";
    out_ += msg;
    out_.push_back('\n');
    ++lines_;
  }
  std::size_t lines() const { return lines_; }
  std::string take() { return std::move(out_); }

 private:
  double start_;
  std::string out_;
  std::size_t lines_ = 0;
};

}  // namespace

std::string_view category_name(FaultCategory c) {
  switch (c) {
    case FaultCategory::kCpuOverload: return "CPU_OVERLOAD";
    case FaultCategory::kMemLeak: return "MEM_LEAK";
    case FaultCategory::kNetDelay: return "NET_DELAY";
    case FaultCategory::kMixedCpuMem: return "MIXED_CPU_MEM";
  }
  return "UNKNOWN";
}

std::optional<FaultCategory> parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

void validate(const FaultConfig& f) {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::kInvalidArgument, std::string(what) + " must be positive");
  };
  positive(f.duration_s, "duration_s");
  positive(f.base_rps, "base_rps");
  positive(f.base_cpu_ms, "base_cpu_ms");
  positive(f.mem_limit_mb, "mem_limit_mb");
  positive(f.queue_bound, "queue_bound");
  positive(f.sample_period_s, "sample_period_s");
  if (f.cores < 1) throw Error(Errc::kInvalidArgument, "cores must be >= 1");
  for (double v : {f.cpu_work_ms, f.request_ramp_rate, f.leak_bytes_per_req, f.delay_ms_mean, f.delay_ms_jitter}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::kInvalidArgument, "fault intensities must be >= 0");
  }
  // A fault-free baseline (see without_fault) is valid for any category.
  if (!has_cpu_fault(f) && !has_leak(f) && !has_delay(f)) return;
  switch (f.category) {
    case FaultCategory::kCpuOverload:
      positive(f.cpu_work_ms, "cpu_work_ms");
      positive(f.request_ramp_rate, "request_ramp_rate");
      break;
    case FaultCategory::kMemLeak:
      positive(f.leak_bytes_per_req, "leak_bytes_per_req");
      break;
    case FaultCategory::kNetDelay:
      positive(f.delay_ms_mean, "delay_ms_mean");
      break;
    case FaultCategory::kMixedCpuMem:
      positive(f.cpu_work_ms, "cpu_work_ms");
      positive(f.leak_bytes_per_req, "leak_bytes_per_req");
      break;
  }
}

FaultConfig without_fault(const FaultConfig& f) {
  FaultConfig g = f;
  g.cpu_work_ms = 0.0;
  g.request_ramp_rate = 0.0;
  g.leak_bytes_per_req = 0.0;
  g.delay_ms_mean = 0.0;
  g.delay_ms_jitter = 0.0;
  return g;
}

FaultConfig make_config(FaultCategory category, int config_id, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FaultConfig f;
  f.category = category;
  f.config_id = config_id;
  f.seed = seed;
  const AppSpec& app = kApps[rng() % kApps.size()];
  const std::size_t svc = rng() % app.services.size();
  f.app = std::string(app.app);
  f.service = std::string(app.services[svc]);
  f.callback = std::string(app.callbacks[svc]) + std::string(kCallbackVariants[rng() % kCallbackVariants.size()]);
  f.endpoint = std::string(app.endpoints[svc]);
  f.container = f.app.substr(0, f.app.find('-')) + "-" + f.service + "-" + hex_token(rng(), 6);
  f.duration_s = std::round(uniform(rng, 240.0, 360.0));
  f.base_rps = std::round(uniform(rng, 40.0, 120.0));
  f.mem_base_mb = std::round(uniform(rng, 64.0, 160.0));
  f.mem_limit_mb = std::array<double, 3>{256.0, 384.0, 512.0}[rng() % 3];
  f.base_cpu_ms = uniform(rng, 1.0, 3.0);

  switch (category) {
    case FaultCategory::kCpuOverload:
      f.cpu_work_ms = std::round(uniform(rng, 6.0, 30.0));
      f.request_ramp_rate = uniform(rng, 0.3, 2.0);
      break;
    case FaultCategory::kMemLeak:
      f.leak_bytes_per_req = 1024.0 * std::round(uniform(rng, 12.0, 64.0));
      break;
    case FaultCategory::kNetDelay:
      f.delay_ms_mean = std::round(uniform(rng, 80.0, 800.0));
      f.delay_ms_jitter = std::round(f.delay_ms_mean * uniform(rng, 0.3, 0.9));
      break;
    case FaultCategory::kMixedCpuMem:
      f.cpu_work_ms = std::round(uniform(rng, 6.0, 24.0));
      f.request_ramp_rate = uniform(rng, 0.2, 1.2);
      f.leak_bytes_per_req = 1024.0 * std::round(uniform(rng, 8.0, 40.0));
      break;
  }
  return f;
}

SimulatedRun simulate_run(const FaultConfig& f, int run_index) {
  validate(f);
  const std::uint64_t run_seed = derive_seed(f.seed, static_cast<std::uint64_t>(run_index) + 1);
  // Independent streams so that the metric noise and sleep draws do not
  // depend on which fault lines get logged.
  std::mt19937_64 metric_rng(derive_seed(run_seed, 1));
  std::mt19937_64 sleep_rng(derive_seed(run_seed, 2));
  std::mt19937_64 sample_rng(derive_seed(run_seed, 3));
  std::mt19937_64 log_rng(derive_seed(run_seed, 4));

  const double start_epoch = 1718000000.0 + f.config_id * 7919.0 + run_index * 3600.0;
  LogWriter log(start_epoch);
  const std::string frontend = f.app + "-frontend";
  const std::string ip = "10.0." + std::to_string(f.seed % 250 + 1) + "." + std::to_string((f.seed >> 8) % 250 + 1);
  const double cpu_ms = f.base_cpu_ms + f.cpu_work_ms;
  const double capacity = f.cores * 1000.0 / cpu_ms;

  std::vector<Tick> ticks;
  double queue = 0.0, leaked_mb = 0.0, mem_prev = 0.0;
  std::string crash;
  const int duration = static_cast<int>(f.duration_s);
  int t = 0;
  for (; t < duration; ++t) {
    const double time = static_cast<double>(t);
    Tick k;
    // fixed draw order per tick
    const double n_rps = normal(metric_rng), n_cpu = normal(metric_rng), n_mem = normal(metric_rng);
    const double n_rx = normal(metric_rng), n_tx = normal(metric_rng), n_blk = normal(metric_rng);
    const double n_lat = normal(metric_rng), n_err = normal(metric_rng);
    std::array<double, kSleepDraws> sleeps{};
    for (double& s : sleeps) s = std::uniform_real_distribution<double>(-1.0, 1.0)(sleep_rng);

    // the load generator ramps up over the warmup period
    const double load = std::min(1.0, 0.1 + 0.9 * time / f.warmup_s);
    k.rps = std::max(1.0, load * f.base_rps * (1.0 + 0.04 * n_rps) + f.request_ramp_rate * time);
    const double demand = k.rps + queue;
    k.served = std::min(demand, capacity);
    queue = demand - k.served;
    k.queue = queue;
    k.cpu = std::clamp(k.served * cpu_ms / (f.cores * 10.0) + 0.8 * n_cpu, 0.0, 100.0);

    double sleep_sum = 0.0;
    for (double s : sleeps) {
      const double ms = has_delay(f) ? std::max(0.0, f.delay_ms_mean + f.delay_ms_jitter * s) : 0.0;
      sleep_sum += ms;
      if (ms > f.timeout_ms) ++k.timeouts;
    }
    k.sleep_ms = sleep_sum / kSleepDraws;
    const double cold_start = 25.0 * std::exp(-time / 6.0);
    k.latency = std::max(0.5, 6.0 + cold_start + cpu_ms + queue / capacity * 1000.0 + k.sleep_ms + 0.4 * n_lat);

    leaked_mb += k.served * f.leak_bytes_per_req / (1024.0 * 1024.0);
    if (time < f.warmup_s) {
      k.mem_mb = f.mem_base_mb * (0.6 + 0.4 * time / f.warmup_s) + 1.5 * n_mem;
    } else if (has_leak(f)) {
      // leaked memory is never returned, so RSS only grows after warmup
      k.mem_mb = std::max(mem_prev, f.mem_base_mb + leaked_mb);
    } else {
      k.mem_mb = f.mem_base_mb + 1.5 * n_mem;
    }
    mem_prev = k.mem_mb;

    const double rejected = queue > f.queue_bound * 0.5 ? k.rps * 0.2 : 0.0;
    // stray resets only show up once something is already failing
    const double failing = k.timeouts * k.served / kSleepDraws + rejected;
    k.sock_err = failing > 0.0 ? std::max(0.0, failing * (1.0 + 0.05 * n_err)) : 0.0;
    k.rx = std::max(0.0, k.served * 820.0 * (1.0 + 0.03 * n_rx));
    k.tx = std::max(0.0, k.served * 2400.0 * (1.0 + 0.03 * n_tx));

    // ---- log lines for this tick
    const int n_access = 1 + static_cast<int>(log_rng() % 2);
    for (int a = 0; a < n_access; ++a) {
      int status = 200;
      if (rejected > 0.0 && log_rng() % 3 == 0) status = 503;
      if (k.timeouts > 0 && log_rng() % 2 == 0) status = 504;
      const double lat = std::max(0.3, k.latency * (0.7 + 0.6 * std::uniform_real_distribution<double>(0, 1)(log_rng)));
      log.line(time + 0.1 + 0.4 * a, "INFO", f.service,
               std::string(log_rng() % 4 == 0 ? "POST " : "GET ") + f.endpoint + " status=" + std::to_string(status) +
                   " latency=" + fmt("%.1f", lat) + "ms bytes=" + std::to_string(1200 + log_rng() % 2400) +
                   " req_id=" + hex_token(log_rng(), 16));
    }
    if (t % 5 == 0) {
      log.line(time + 0.6, "INFO", frontend, "heartbeat ok uptime=" + std::to_string(t) + "s");
      log.line(time + 0.65, "INFO", "consul", "service " + f.service + " passing health check on " + ip + ":8080");
    }
    if (t % 10 == 0) {
      log.line(time + 0.7, "INFO", f.service,
               "stats rps=" + fmt("%.1f", k.rps) + " cpu=" + fmt("%.1f", k.cpu) + "% mem=" + fmt("%.1f", k.mem_mb) +
                   "MB queue=" + std::to_string(static_cast<long>(queue)) + " latency_avg=" + fmt("%.1f", k.latency) + "ms");
    }
    switch (log_rng() % 10) {
      case 0:
        log.line(time + 0.8, "INFO", "mongodb-" + f.service,
                 "connection accepted from " + ip + ":" + std::to_string(40000 + log_rng() % 20000) + " #" +
                     std::to_string(log_rng() % 100000) + " (" + std::to_string(5 + log_rng() % 40) +
                     " connections now open)");
        break;
      case 1:
        log.line(time + 0.8, "DEBUG", "memcached-" + f.service, "get key " + hex_token(log_rng(), 8) + " hit");
        break;
      case 2:
        log.line(time + 0.8, "INFO", "jaeger-agent", "flushed " + std::to_string(10 + log_rng() % 90) + " spans");
        break;
      default:
        break;
    }
    if (has_cpu_fault(f)) {
      if (k.cpu > 90.0 && t % 3 == 0) {
        log.line(time + 0.85, "WARN", f.service,
                 "cpu throttled " + std::to_string(20 + log_rng() % 200) + "ms in " + f.callback +
                     " (cfs quota exceeded) container=" + f.container);
      }
      if (queue > f.queue_bound * 0.1 && t % 5 == 0) {
        log.line(time + 0.9, "WARN", f.service,
                 "request queue length " + std::to_string(static_cast<long>(queue)) + " exceeds soft limit " +
                     std::to_string(static_cast<long>(f.queue_bound * 0.1)) + " in " + f.callback);
      }
      if (rejected > 0.0 && t % 2 == 0) {
        log.line(time + 0.92, "ERROR", f.service, "rejecting request on " + f.endpoint + ": queue full");
      }
    }
    if (has_leak(f) && time >= f.warmup_s) {
      if (t % 15 == 0) {
        log.line(time + 0.87, "DEBUG", f.service,
                 "gc cycle heap=" + fmt("%.1f", k.mem_mb) + "MB freed=" + std::to_string(log_rng() % 512) + "KB");
      }
      if (k.mem_mb / f.mem_limit_mb > 0.7 && t % 10 == 0) {
        log.line(time + 0.88, "WARN", f.service,
                 "rss " + fmt("%.0f", k.mem_mb) + "MB approaching limit " + fmt("%.0f", f.mem_limit_mb) +
                     "MB in container " + f.container + " after " + f.callback + " allocations of " +
                     fmt("%.0f", f.leak_bytes_per_req) + " bytes");
      }
    }
    if (has_delay(f)) {
      if (k.sleep_ms > 200.0 && log_rng() % 2 == 0) {
        log.line(time + 0.93, "WARN", f.service,
                 "slow invocation of " + f.callback + " took " + fmt("%.0f", k.sleep_ms + cpu_ms) +
                     "ms (threshold 200ms) container=" + f.container);
      }
      if (k.timeouts > 0) {
        log.line(time + 0.95, "ERROR", frontend,
                 "upstream " + f.service + " timed out after " + fmt("%.0f", f.timeout_ms) + "ms calling " +
                     f.endpoint + " via " + f.callback);
      }
    }
    // access logging and swap dominate block I/O
    const double swap = has_leak(f) ? 0.02 * std::max(0.0, k.mem_mb - f.mem_base_mb) : 0.0;
    k.blk = std::max(0.0, (1.0 + 0.04 * k.served + swap) * (1.0 + 0.03 * n_blk));
    ticks.push_back(k);

    // ---- crash conditions
    if (has_leak(f) && k.mem_mb > f.mem_limit_mb) {
      crash = "oom";
      log.line(time + 0.96, "ERROR", f.service,
               "failed to allocate " + fmt("%.0f", f.leak_bytes_per_req) + " bytes in " + f.callback +
                   ": cannot allocate memory");
      log.line(time + 0.97, "FATAL", "kernel",
               "Out of memory: Killed process " + std::to_string(1000 + f.seed % 30000) + " (" + f.service +
                   ") total-vm:" + std::to_string(static_cast<long>(k.mem_mb * 1024 * 1.6)) +
                   "kB, anon-rss:" + std::to_string(static_cast<long>(k.mem_mb * 1024)) + "kB");
      log.line(time + 0.98, "ERROR", "dockerd", "container " + f.container + " exited with code 137 (OOMKilled)");
      break;
    }
    if (queue > f.queue_bound) {
      crash = "overload";
      log.line(time + 0.96, "ERROR", f.service,
               "request queue overflow (" + std::to_string(static_cast<long>(queue)) + " > " +
                   fmt("%.0f", f.queue_bound) + ") on " + f.endpoint);
      log.line(time + 0.97, "FATAL", f.service, "watchdog timeout: " + f.callback + " unresponsive for 30s, aborting");
      log.line(time + 0.98, "ERROR", "dockerd", "container " + f.container + " exited with code 134");
      break;
    }
  }
  const double end_time = crash.empty() ? static_cast<double>(duration - 1) : static_cast<double>(t);
  if (crash.empty()) {
    log.line(end_time + 0.99, "INFO", frontend, "workload generator finished after " + std::to_string(duration) + "s");
  }

  // ---- telemetry samples: each counter on its own jittered clock
  std::vector<telemetry::TelemetrySeries> series;
  for (Counter c : telemetry::kAllCounters) {
    telemetry::TelemetrySeries s;
    s.counter = c;
    for (double base = 0.0; base <= end_time; base += f.sample_period_s) {
      const double jitter = std::uniform_real_distribution<double>(0.0, 0.4 * f.sample_period_s)(sample_rng);
      const bool drop = std::uniform_real_distribution<double>(0.0, 1.0)(sample_rng) < 0.03;
      const double ts = std::min(base + jitter, end_time);
      if ((drop && !s.samples.empty()) || (!s.samples.empty() && start_epoch + ts <= s.samples.back().timestamp)) continue;
      const Tick& k = ticks[std::min(ticks.size() - 1, static_cast<std::size_t>(ts))];
      double v = 0.0;
      switch (c) {
        case Counter::kCpuUtil: v = k.cpu; break;
        case Counter::kMemUtil: v = 100.0 * k.mem_mb / f.mem_limit_mb; break;
        case Counter::kNetRxBytes: v = k.rx; break;
        case Counter::kNetTxBytes: v = k.tx; break;
        case Counter::kBlkIoOps: v = k.blk; break;
        case Counter::kOpLatencyAvg: v = k.latency; break;
        case Counter::kSocketErrors: v = k.sock_err; break;
      }
      s.samples.push_back({start_epoch + ts, v});
    }
    s.unit = c == Counter::kCpuUtil || c == Counter::kMemUtil ? "percent"
             : c == Counter::kOpLatencyAvg                    ? "ms"
             : c == Counter::kNetRxBytes || c == Counter::kNetTxBytes ? "bytes/s"
                                                                      : "count/s";
    series.push_back(std::move(s));
  }

  SimulatedRun run;
  run.fault = f;
  run.run_index = run_index;
  run.end_time_s = end_time;
  run.ticket.raw_log = log.take();
  run.ticket.telemetry = std::move(series);
  run.ticket.crash_reason = crash;
  run.ticket.labels.fault_category = std::string(category_name(f.category));
  run.ticket.labels.config_id = f.config_id;
  run.ticket.labels.run_index = run_index;
  return run;
}

// ---- descriptions ------------------------------------------------------------

namespace {

struct SeriesSummary {
  double first = 0, last = 0, peak = 0, mean = 0;
};

SeriesSummary summarize(const SimulatedRun& run, Counter c) {
  SeriesSummary s;
  for (const auto& series : run.ticket.telemetry) {
    if (series.counter != c || series.samples.empty()) continue;
    s.first = series.samples.front().value;
    s.last = series.samples.back().value;
    double sum = 0.0;
    for (const auto& p : series.samples) {
      s.peak = std::max(s.peak, p.value);
      sum += p.value;
    }
    s.mean = sum / static_cast<double>(series.samples.size());
  }
  return s;
}

template <std::size_t N>
std::string_view pick(std::mt19937_64& rng, const std::array<std::string_view, N>& bank) {
  return bank[rng() % N];
}

std::string mitigation(const FaultConfig& f) {
  switch (f.category) {
    case FaultCategory::kCpuOverload:
      return "move the CPU-intensive work out of " + f.callback + " (or make it asynchronous), cap the request rate for " +
             f.endpoint + " at the gateway and scale out the " + f.service + " replicas";
    case FaultCategory::kMemLeak:
      return "free the buffer allocated in " + f.callback + " after every request, then restart container " +
             f.container + " to reclaim the leaked memory";
    case FaultCategory::kNetDelay:
      return "remove the random sleep from " + f.callback + ", and add a client-side timeout and retry budget for " +
             f.endpoint + " in " + f.app + "-frontend";
    case FaultCategory::kMixedCpuMem:
      return "free the per-request allocation and move the CPU-heavy computation out of " + f.callback +
             ", then restart container " + f.container + " and cap the request rate for " + f.endpoint;
  }
  return {};
}

}  // namespace

std::string root_cause(const FaultConfig& f) {
  switch (f.category) {
    case FaultCategory::kCpuOverload:
      return "the issue is caused by a CPU-intensive computation (about " + fmt("%.0f", f.cpu_work_ms) +
             " ms) performed before every request in the call back function " + f.callback +
             " while the request rate keeps increasing";
    case FaultCategory::kMemLeak:
      return "the issue is caused by a memory allocation of " + fmt("%.0f", f.leak_bytes_per_req) +
             " bytes in every invocation of the call back function " + f.callback + " that is never freed";
    case FaultCategory::kNetDelay:
      return "the issue is caused by a random delay (mean " + fmt("%.0f", f.delay_ms_mean) +
             " ms) in every invocation of the call back function " + f.callback;
    case FaultCategory::kMixedCpuMem:
      return "the issue is caused by both a memory allocation of " + fmt("%.0f", f.leak_bytes_per_req) +
             " bytes that is never freed and a long-running computation (about " + fmt("%.0f", f.cpu_work_ms) +
             " ms) in every invocation of the call back function " + f.callback;
  }
  return {};
}

std::string resolution_text(const SimulatedRun& run) {
  const FaultConfig& f = run.fault;
  std::string crash = run.ticket.crash_reason == "oom"        ? "The container was OOM-killed. "
                      : run.ticket.crash_reason == "overload" ? "The service crashed from overload. "
                                                              : "";
  return "Diagnosis: " + crash + "In " + f.app + "/" + f.service + ", " + root_cause(f) +
         ".\nMitigation: " + mitigation(f) + ".";
}

std::string OfflineDescriber::describe(const SimulatedRun& run) const {
  const FaultConfig& f = run.fault;
  std::mt19937_64 rng(derive_seed(f.seed, 100 + static_cast<std::uint64_t>(run.run_index)));
  static constexpr std::array<std::string_view, 4> kOpen = {
      "We are seeing problems with", "Incident report for", "Users started complaining about",
      "On-call was paged for"};
  static constexpr std::array<std::string_view, 3> kCpu = {
      "requests slowed down and were eventually rejected as CPU utilization saturated and the service was throttled",
      "the service became overloaded: CPU pinned near 100% and the request queue kept growing",
      "CPU saturation and throttling caused an overload with growing queues and rejected requests"};
  static constexpr std::array<std::string_view, 3> kMem = {
      "memory usage kept growing until the container ran out of memory",
      "resident memory climbed steadily and the process was killed for out of memory",
      "a steady memory growth ended with an OOM kill of the container"};
  static constexpr std::array<std::string_view, 3> kNet = {
      "latency spikes and upstream timeouts made responses very slow",
      "responses became slow with frequent timeouts and high latency",
      "slow responses, high latency and intermittent timeouts were observed"};
  static constexpr std::array<std::string_view, 3> kMixed = {
      "memory kept growing while CPU saturated, ending in either an out of memory kill or an overload",
      "both CPU saturation and a memory growth were observed before the crash",
      "the service was overloaded on CPU and leaked memory at the same time"};

  std::string symptom;
  switch (f.category) {
    case FaultCategory::kCpuOverload: symptom = std::string(pick(rng, kCpu)); break;
    case FaultCategory::kMemLeak: symptom = std::string(pick(rng, kMem)); break;
    case FaultCategory::kNetDelay: symptom = std::string(pick(rng, kNet)); break;
    case FaultCategory::kMixedCpuMem: symptom = std::string(pick(rng, kMixed)); break;
  }
  const auto cpu = summarize(run, Counter::kCpuUtil);
  const auto mem = summarize(run, Counter::kMemUtil);
  const auto lat = summarize(run, Counter::kOpLatencyAvg);
  const auto err = summarize(run, Counter::kSocketErrors);

  std::string text = std::string(pick(rng, kOpen)) + " " + f.service + " in " + f.app + " (endpoint " + f.endpoint +
                     ", container " + f.container + "): " + symptom + ".";
  text += " Metrics: CPU went from " + fmt("%.0f", cpu.first) + "% to " + fmt("%.0f", cpu.last) + "% (peak " +
          fmt("%.0f", cpu.peak) + "%), memory from " + fmt("%.0f", mem.first) + "% to " + fmt("%.0f", mem.last) +
          "% of the limit, average latency " + fmt("%.0f", lat.mean) + " ms (peak " + fmt("%.0f", lat.peak) +
          " ms), socket errors peaked at " + fmt("%.0f", err.peak) + "/s.";
  if (run.ticket.crash_reason == "oom") {
    text += " The logs end with an out-of-memory kill (exit code 137) after " + fmt("%.0f", run.end_time_s) + " s.";
  } else if (run.ticket.crash_reason == "overload") {
    text += " The logs end with a request queue overflow and a watchdog abort after " + fmt("%.0f", run.end_time_s) +
            " s.";
  } else {
    text += " The run did not crash within " + fmt("%.0f", f.duration_s) + " s.";
  }
  text += " Root cause: " + root_cause(f) + ". Mitigation: " + mitigation(f) + ".";
  return text;
}

LlmDescriber::LlmDescriber(std::shared_ptr<LanguageModel> model) : model_(std::move(model)) {}

std::string LlmDescriber::tag() const { return "llm-describer:" + (model_ ? model_->tag() : std::string("none")); }

std::string LlmDescriber::build_prompt(const SimulatedRun& run) const {
  const auto cpu = summarize(run, Counter::kCpuUtil);
  const auto mem = summarize(run, Counter::kMemUtil);
  const auto lat = summarize(run, Counter::kOpLatencyAvg);
  std::string tail;
  {
    const std::string& log = run.ticket.raw_log;
    std::size_t pos = log.size();
    for (int lines = 0; lines < 12 && pos > 0; ++lines) {
      pos = log.rfind('\n', pos - 2);
      if (pos == std::string::npos) {
        pos = 0;
        break;
      }
      ++pos;
    }
    tail = log.substr(pos);
  }
  return "Write a human readable bug report for an incident in the " + run.fault.app + " microservice application (service " +
         run.fault.service + "). Describe the bug by summarizing the performance metric readings and the logs, and "
         "include a mitigation plan. Root cause: " + root_cause(run.fault) + ".\nMetrics: cpu " + fmt("%.0f", cpu.first) +
         "% -> " + fmt("%.0f", cpu.last) + "%, memory " + fmt("%.0f", mem.first) + "% -> " + fmt("%.0f", mem.last) +
         "%, mean latency " + fmt("%.0f", lat.mean) + " ms.\nLast log lines:\n" + tail;
}

std::string LlmDescriber::describe(const SimulatedRun& run) const {
  if (!model_) throw Error(Errc::kProviderUnavailable, "no language model configured for the describer");
  return model_->complete(build_prompt(run)).text;
}

std::string describe_ticket(const SimulatedRun& run, const Describer& describer) {
  return describer.describe(run);
}

std::vector<BugTicket> generate_corpus(int n_configs_per_category, std::uint64_t seed) {
  return generate_corpus(n_configs_per_category, seed, OfflineDescriber{});
}

std::vector<BugTicket> generate_corpus(int n, std::uint64_t seed, const Describer& describer) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "need at least one config per category");
  const std::size_t configs = kCategoryCount * static_cast<std::size_t>(n);
  std::vector<BugTicket> tickets(configs * 2);

  // Opaque ids: a seeded permutation so that id order says nothing about pairing.
  std::vector<std::size_t> perm(tickets.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 id_rng(derive_seed(seed, 0xB06));
  std::shuffle(perm.begin(), perm.end(), id_rng);
  auto id_of = [&](std::size_t slot) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "BUG-%05zu", perm[slot] + 1);
    return std::string(buf);
  };

  const auto total = static_cast<std::int64_t>(configs);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ci = 0; ci < total; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const FaultCategory cat = kAllCategories[c / static_cast<std::size_t>(n)];
    const int config_id = static_cast<int>(c);
    const FaultConfig f = make_config(cat, config_id, derive_seed(seed, 1000 + c));
    for (int r = 0; r < 2; ++r) {
      SimulatedRun run = simulate_run(f, r);
      BugTicket& t = tickets[c * 2 + static_cast<std::size_t>(r)];
      t = std::move(run.ticket);
      run.ticket = t;  // describer reads ticket contents
      t.id = id_of(c * 2 + static_cast<std::size_t>(r));
      t.labels.closest_bug_id = id_of(c * 2 + static_cast<std::size_t>(1 - r));
      t.description = describe_ticket(run, describer);
      t.resolution = resolution_text(run);
    }
  }
  return tickets;
}

kb::BugDescription BugTicket::to_description() const {
  kb::BugDescription d;
  d.incident_text = description;
  if (!resolution.empty()) d.resolution_text = resolution;
  d.labels = kb::Labels{labels.fault_category, labels.closest_bug_id};
  return d;
}

// ---- corpus directory ------------------------------------------------------------

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot write " + p.string());
  os << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void write_corpus(const fs::path& dir, const std::vector<BugTicket>& tickets) {
  fs::create_directories(dir);
  for (const auto& t : tickets) {
    const fs::path td = dir / t.id;
    fs::create_directories(td);
    write_text(td / "description.txt", t.description + "\n");
    write_text(td / "resolution.txt", t.resolution + "\n");
    write_text(td / "log.txt", t.raw_log);
    write_text(td / "telemetry.csv", telemetry::to_csv(t.telemetry));
    const nlohmann::json labels = {{"id", t.id},
                                   {"fault_category", t.labels.fault_category},
                                   {"closest_bug_id", t.labels.closest_bug_id},
                                   {"config_id", t.labels.config_id},
                                   {"run_index", t.labels.run_index},
                                   {"crash_reason", t.crash_reason}};
    write_text(td / "labels.json", labels.dump(2) + "\n");
  }
}

BugTicket read_ticket(const fs::path& td) {
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
  };
  BugTicket t;
  t.id = td.filename().string();
  t.description = strip(read_text(td / "description.txt"));
  if (fs::exists(td / "resolution.txt")) t.resolution = strip(read_text(td / "resolution.txt"));
  if (fs::exists(td / "log.txt")) t.raw_log = read_text(td / "log.txt");
  if (fs::exists(td / "telemetry.csv")) t.telemetry = telemetry::parse_csv(read_text(td / "telemetry.csv"));
  if (fs::exists(td / "labels.json")) {
    try {
      const auto j = nlohmann::json::parse(read_text(td / "labels.json"));
      t.id = j.value("id", t.id);
      t.labels.fault_category = j.value("fault_category", "");
      t.labels.closest_bug_id = j.value("closest_bug_id", "");
      t.labels.config_id = j.value("config_id", 0);
      t.labels.run_index = j.value("run_index", 0);
      t.crash_reason = j.value("crash_reason", "");
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kInvalidArgument, "bad labels.json in " + td.string() + ": " + e.what());
    }
  }
  return t;
}

std::vector<BugTicket> read_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, "corpus directory not found: " + dir.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "description.txt")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<BugTicket> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(read_ticket(d));
  return out;
}

std::vector<std::pair<std::string, std::string>> generate_labeled_logs(int per_label, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 6> kAnomalies = {
      "data TLB error interrupt", "machine check interrupt (bit=0x1d): L2 dcache unit data parity error",
      "ciod: failed to read message prefix on control stream (CioStream socket to 172.16.96.116:33569",
      "rts: kernel terminated for reason 1004rts: bad message header", "instruction cache parity error corrected",
      "Lustre mount FAILED : bglio11 : block_id : location"};
  static constexpr std::array<std::string_view, 4> kNodes = {"R02-M1-N0-C:J12-U11", "R11-M0-N4-I:J18-U01",
                                                             "R63-M1-L2-U00-B", "R35-M0-NF-C:J05-U01"};
  std::vector<std::pair<std::string, std::string>> out;
  for (int label = 0; label < 2; ++label) {
    for (int i = 0; i < per_label; ++i) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(label * 100000 + i)));
      LogWriter log(1117838570.0 + i * 3600.0);
      const int lines = 80 + static_cast<int>(rng() % 80);
      for (int l = 0; l < lines; ++l) {
        const double t = l * 2.0;
        const std::string node(kNodes[rng() % kNodes.size()]);
        switch (rng() % 4) {
          case 0: log.line(t, "INFO", "kernel", "generating core." + std::to_string(rng() % 9000)); break;
          case 1: log.line(t, "INFO", "mmcs", node + " idoproxy communication heartbeat ok"); break;
          case 2: log.line(t, "INFO", "kernel", "CE sym " + std::to_string(rng() % 32) + ", at 0x" + hex_token(rng(), 8) + ", mask 0x" + hex_token(rng(), 2)); break;
          default: log.line(t, "INFO", "app", "job " + std::to_string(rng() % 100000) + " step completed on " + node); break;
        }
        if (label == 1 && rng() % 6 == 0) {
          log.line(t + 0.5, rng() % 2 ? "FATAL" : "ERROR", "kernel", std::string(kAnomalies[rng() % kAnomalies.size()]));
        }
      }
      out.emplace_back(log.take(), label == 1 ? "anomaly" : "normal");
    }
  }
  return out;
}

}  // namespace arca::corpus
