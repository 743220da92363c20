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
#include <utility>
#include <vector>

#include "arca/corpus.hpp"
#include "arca/kb.hpp"
#include "arca/pipeline.hpp"

namespace arca::eval {

using corpus::BugTicket;

struct Split {
  std::vector<BugTicket> build;
  std::vector<BugTicket> test;
};

/// Disjoint build/test sets where every test ticket's closest bug lands in
/// the build set. Deterministic in seed. Throws InfeasibleSplit.
Split split_corpus(std::span<const BugTicket> corpus, std::size_t build_n, std::size_t test_n,
                   std::uint64_t seed);

pipeline::IncidentQuery query_for(const BugTicket& t);

/// Telemetry vector of a ticket's series; nullopt when it has none.
std::optional<telemetry::TelemetryVector> ticket_vector(const BugTicket& t, double grid_step);

/// Process, embed and insert every ticket, then build the index.
kb::KnowledgeBase build_kb(std::span<const BugTicket> tickets, const pipeline::PipelineConfig& config,
                           const pipeline::Providers& providers, std::size_t clusters, std::uint64_t index_seed);

/// Fraction of test tickets whose closest bug survives triage and
/// refinement.
double eval_triage(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::size_t k,
                   const pipeline::PipelineConfig& config, const pipeline::Providers& providers);

struct QueryOutcome {
  std::string ticket_id;
  std::string expected;
  std::string chosen;
  bool in_triage = false;
  std::size_t prompt_candidates = 0;
  double cost = 0.0;
  double seconds = 0.0;
};

struct SystemEval {
  double triage_accuracy = 0.0;
  double system_accuracy = 0.0;
  double mean_cost = 0.0;
  double mean_seconds = 0.0;
  std::vector<QueryOutcome> outcomes;  // test.size() x repeats, query-major
};

/// Runs answer_incident for every test ticket `repeats` times.
SystemEval eval_system(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::size_t k,
                       const pipeline::PipelineConfig& config, const pipeline::Providers& providers,
                       int repeats);

struct PerK {
  std::size_t k = 0;
  double triage_accuracy = 0.0;
  double system_accuracy = 0.0;
  double mean_cost = 0.0;
  double mean_seconds = 0.0;
};

struct EvalReport {
  double triage_accuracy = 0.0;  // at the configured K
  double system_accuracy = 0.0;
  std::vector<PerK> per_k;  // sorted by K
  int repeats = 1;
};

EvalReport run_eval(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::vector<std::size_t> ks,
                    const pipeline::PipelineConfig& config, const pipeline::Providers& providers, int repeats);

struct ModalityRow {
  std::string mode;  // telemetry-only, log-only, log+telemetry
  double accuracy = 0.0;
  double mean_cost = 0.0;
  double mean_seconds = 0.0;
};

/// Telemetry-only ranks the whole store by telemetry similarity; log-only
/// skips refinement; log+telemetry is the full pipeline.
std::vector<ModalityRow> eval_modalities(const kb::KnowledgeBase& kb, std::span<const BugTicket> test,
                                         std::size_t k, const pipeline::PipelineConfig& config,
                                         const pipeline::Providers& providers);

struct ClusteringReport {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// precision/recall/F1 from confusion counts; 0 where a denominator is 0.
ClusteringReport clustering_report(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Leave-one-out k-nearest-neighbour vote over processed-log embeddings.
/// Throws DegenerateLabels when fewer than two labels appear or the positive
/// label is absent.
ClusteringReport eval_log_clustering(std::span<const std::pair<std::string, std::string>> labeled_logs,
                                     std::size_t k_neighbors, const logproc::FeatureExtractor& extractor,
                                     const embed::EmbeddingProvider& embedder,
                                     const std::string& positive_label = "anomaly",
                                     const logproc::DigestOptions& digest = {});

}  // namespace arca::eval
