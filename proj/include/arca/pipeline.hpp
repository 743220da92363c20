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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arca/embed.hpp"
#include "arca/kb.hpp"
#include "arca/llm.hpp"
#include "arca/logproc.hpp"
#include "arca/telemetry.hpp"

namespace arca::pipeline {

struct IncidentQuery {
  std::string description;
  std::string raw_log;
  std::vector<telemetry::TelemetrySeries> telemetry;
};

/// Throws InvalidArgument on an empty description or when neither a log nor
/// telemetry is present.
void validate(const IncidentQuery& q);

enum class TriageStage { kLogOnly, kRefined };
std::string_view stage_name(TriageStage s);

struct TriageCandidate {
  kb::BugId id;
  double log_score = 0.0;
  std::optional<double> telemetry_score;

  friend bool operator==(const TriageCandidate&, const TriageCandidate&) = default;
};

struct TriageSet {
  std::vector<TriageCandidate> candidates;
  TriageStage stage = TriageStage::kLogOnly;

  friend bool operator==(const TriageSet&, const TriageSet&) = default;
};

/// One provider call (remote or offline) made while answering a query.
struct ProvenanceEntry {
  std::string stage;
  std::string provider_tag;
  bool remote = false;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  double wall_seconds = 0.0;
  std::string note;
};

/// Operator-editable prompt text. The generator template understands the
/// placeholders {incident}, {bug_id}, {bug_description} and {resolution}.
struct Prompts {
  std::string log_extraction;
  std::string judge_instruction;
  std::string cot_exemplars;
  std::string generator_template;

  static Prompts defaults();
};

struct Price {
  double input_per_token = 0.0;
  double output_per_token = 0.0;
};

/// Per-token prices keyed by provider tag; unknown tags use the fallback.
struct PriceTable {
  std::map<std::string, Price> by_provider;
  Price fallback;

  Price price_for(const std::string& provider_tag) const;
};

struct CostReport {
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  double estimated_cost = 0.0;
  std::vector<std::pair<std::string, double>> stage_seconds;  // in execution order
  double total_seconds = 0.0;
};

CostReport cost_of(std::span<const ProvenanceEntry> provenance, const PriceTable& prices);

struct PromptBundle {
  std::string prompt;
  std::vector<TriageCandidate> included;  // rank order; prompt numbers them from 1
  std::size_t token_estimate = 0;
  std::size_t token_budget = 0;
};

struct JudgeVerdict {
  kb::BugId chosen;
  std::string rationale;
  int candidates_considered = 0;
};

struct MitigationPlan {
  std::string plan_text;
  kb::BugId source_bug;
  std::vector<ProvenanceEntry> provenance;
};

/// Providers used by a query. Null judge/generator selects the offline ones.
struct Providers {
  std::shared_ptr<const logproc::FeatureExtractor> extractor;
  std::shared_ptr<const embed::EmbeddingProvider> embedder;
  std::shared_ptr<const LanguageModel> judge;
  std::shared_ptr<const LanguageModel> generator;

  /// Rule-based extractor, offline embedder, offline judge and generator.
  static Providers offline(std::size_t dim, std::uint64_t seed);
};

struct PipelineConfig {
  std::size_t k = 300;
  std::size_t nprobe = 0;  // 0 selects the index default
  double retain_fraction = 0.8;
  std::size_t token_budget = 30000;
  double grid_step = 5.0;
  double chars_per_token = 4.0;
  logproc::DigestOptions digest;
  Prompts prompts = Prompts::defaults();
  PriceTable prices;
};

/// Log -> digest text -> embedding -> ANN top-K. Appends one provenance entry
/// per provider call when `provenance` is given.
TriageSet triage(const kb::KnowledgeBase& kb, const IncidentQuery& q, std::size_t k, std::size_t nprobe,
                 const logproc::FeatureExtractor& extractor, const embed::EmbeddingProvider& embedder,
                 const logproc::DigestOptions& digest = {},
                 std::vector<ProvenanceEntry>* provenance = nullptr);

/// Number kept by refinement: ceil(retain * n), at least 1 when n > 0.
std::size_t retained_count(std::size_t n, double retain_fraction);

/// Score candidates by telemetry similarity and keep the best
/// retained_count(). Candidates without stored telemetry rank last. A query
/// without telemetry returns the input unchanged.
TriageSet refine_with_telemetry(const kb::KnowledgeBase& kb, const TriageSet& ts,
                                std::span<const telemetry::TelemetrySeries> q_telemetry,
                                double retain_fraction, double grid_step = 5.0);

/// Query-side telemetry vector; nullopt when there is no usable telemetry.
std::optional<telemetry::TelemetryVector> query_vector(std::span<const telemetry::TelemetrySeries> series,
                                                       double grid_step);

struct CandidateText {
  TriageCandidate candidate;
  std::string description;
};

/// Instruction, exemplars, incident, then numbered candidates in rank order
/// while the estimate stays within budget. Throws BudgetTooSmall.
PromptBundle assemble_judge_prompt(const IncidentQuery& q, std::span<const CandidateText> candidates,
                                   std::size_t token_budget, const Prompts& prompts,
                                   const TokenEstimator& estimator);
PromptBundle assemble_judge_prompt(const IncidentQuery& q, const TriageSet& ts, const kb::KnowledgeBase& kb,
                                   std::size_t token_budget, const Prompts& prompts,
                                   const TokenEstimator& estimator);

/// Candidate number from the reply's final non-empty line `ANSWER: <n>`;
/// nullopt when absent or outside [1, count].
std::optional<std::size_t> parse_answer(std::string_view reply, std::size_t count);

/// Mean of the available modality scores.
double combined_score(const TriageCandidate& c);

JudgeVerdict offline_judge(const PromptBundle& bundle);

/// Remote judge with one retry on an unparseable reply, then the offline
/// judge. Null model selects the offline judge directly.
JudgeVerdict judge(const PromptBundle& bundle, const LanguageModel* model, const TokenEstimator& estimator,
                   std::vector<ProvenanceEntry>* provenance = nullptr);

std::string fill_generator_prompt(const Prompts& prompts, const IncidentQuery& q, const kb::BugId& id,
                                  const kb::BugDescription& bug);

/// Throws MissingResolution, ProviderUnavailable.
MitigationPlan generate_plan(const IncidentQuery& q, const JudgeVerdict& verdict, const kb::KnowledgeBase& kb,
                             const LanguageModel* generator, const Prompts& prompts,
                             const TokenEstimator& estimator);

struct QueryResult {
  MitigationPlan plan;
  TriageSet triage;  // after refinement
  std::size_t log_only_count = 0;
  JudgeVerdict verdict;
  std::size_t prompt_tokens = 0;
  std::size_t prompt_candidates = 0;
  CostReport cost;
};

/// triage -> refine -> assemble -> judge -> generate. Errors carry the
/// failing stage.
QueryResult answer_incident(const kb::KnowledgeBase& kb, const IncidentQuery& q, const PipelineConfig& config,
                            const Providers& providers);

}  // namespace arca::pipeline
