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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arca/kb.hpp"
#include "arca/telemetry.hpp"

namespace arca {
class LanguageModel;
}

namespace arca::corpus {

enum class FaultCategory : std::uint8_t { kCpuOverload, kMemLeak, kNetDelay, kMixedCpuMem };

inline constexpr std::size_t kCategoryCount = 4;
inline constexpr FaultCategory kAllCategories[kCategoryCount] = {
    FaultCategory::kCpuOverload, FaultCategory::kMemLeak, FaultCategory::kNetDelay,
    FaultCategory::kMixedCpuMem};

std::string_view category_name(FaultCategory c);
std::optional<FaultCategory> parse_category(std::string_view name);

/// One injected-fault experiment. Both runs of a config share every field.
struct FaultConfig {
  FaultCategory category = FaultCategory::kCpuOverload;
  int config_id = 0;
  std::uint64_t seed = 0;

  std::string app;        // e.g. hotel-reservation
  std::string service;    // e.g. geo
  std::string callback;   // handler that carries the injected fault
  std::string endpoint;   // HTTP route served by the callback
  std::string container;  // container name, stable per config

  double duration_s = 300.0;
  double base_rps = 60.0;
  double base_cpu_ms = 2.0;  // CPU cost per request without faults
  int cores = 2;

  double cpu_work_ms = 0.0;        // extra CPU work before each request
  double request_ramp_rate = 0.0;  // requests/s added every second
  double leak_bytes_per_req = 0.0;
  double delay_ms_mean = 0.0;  // random sleep in the callback
  double delay_ms_jitter = 0.0;

  double mem_base_mb = 96.0;
  double mem_limit_mb = 512.0;
  double queue_bound = 4000.0;  // CPU overload crash threshold
  double timeout_ms = 1000.0;
  double warmup_s = 20.0;
  double sample_period_s = 5.0;
};

/// Checks FaultConfig invariants; throws InvalidArgument. A config with every
/// fault intensity at zero is a valid baseline.
void validate(const FaultConfig& f);

struct TicketLabels {
  std::string fault_category;
  std::string closest_bug_id;
  int config_id = 0;
  int run_index = 0;
};

struct BugTicket {
  std::string id;
  std::string description;
  std::string resolution;
  std::string raw_log;
  std::vector<telemetry::TelemetrySeries> telemetry;
  TicketLabels labels;
  std::string crash_reason;  // empty when the run reached its duration

  kb::BugDescription to_description() const;
};

struct SimulatedRun {
  BugTicket ticket;  // description/resolution/id filled by generate_corpus
  FaultConfig fault;
  int run_index = 0;
  double end_time_s = 0.0;
};

/// Deterministic in (f, run_index).
SimulatedRun simulate_run(const FaultConfig& f, int run_index);

/// Same (app, service, callback, seed) with every fault intensity zeroed.
FaultConfig without_fault(const FaultConfig& f);

/// Draw a jittered config for a category.
FaultConfig make_config(FaultCategory category, int config_id, std::uint64_t seed);

class Describer {
 public:
  virtual ~Describer() = default;
  virtual std::string describe(const SimulatedRun& run) const = 0;
  virtual std::string tag() const = 0;
};

/// Seeded template banks; paraphrases vary with the run so paired tickets
/// read alike but not identically.
class OfflineDescriber final : public Describer {
 public:
  std::string describe(const SimulatedRun& run) const override;
  std::string tag() const override { return "offline-describer"; }
};

/// Bug-report writer backed by a language model; the prompt carries the
/// root cause and a summary of the metrics and log.
class LlmDescriber final : public Describer {
 public:
  explicit LlmDescriber(std::shared_ptr<LanguageModel> model);
  std::string describe(const SimulatedRun& run) const override;
  std::string tag() const override;
  std::string build_prompt(const SimulatedRun& run) const;

 private:
  std::shared_ptr<LanguageModel> model_;
};

std::string describe_ticket(const SimulatedRun& run, const Describer& describer);

/// Root cause sentence for a config ("the issue is caused by ...").
std::string root_cause(const FaultConfig& f);
/// Closing post: diagnosis plus the mitigation that resolved it.
std::string resolution_text(const SimulatedRun& run);

/// 4 categories x n configs x 2 runs. Ids are opaque (BUG-xxxxx, shuffled);
/// each ticket's closest_bug_id is the other run of its config.
std::vector<BugTicket> generate_corpus(int n_configs_per_category, std::uint64_t seed,
                                       const Describer& describer);
std::vector<BugTicket> generate_corpus(int n_configs_per_category, std::uint64_t seed);

/// One subdirectory per ticket: description.txt, resolution.txt, log.txt,
/// telemetry.csv, labels.json.
void write_corpus(const std::filesystem::path& dir, const std::vector<BugTicket>& tickets);
std::vector<BugTicket> read_corpus(const std::filesystem::path& dir);
BugTicket read_ticket(const std::filesystem::path& ticket_dir);

/// Labeled raw logs for the log-clustering harness: "normal" request-serving
/// logs and "anomaly" logs carrying hardware/kernel failure bursts.
std::vector<std::pair<std::string, std::string>> generate_labeled_logs(int per_label,
                                                                       std::uint64_t seed);

}  // namespace arca::corpus
