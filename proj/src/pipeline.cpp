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

#include "arca/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "arca/error.hpp"

namespace arca::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string score_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

constexpr std::string_view kAnswerTrailer =
    "Reason step by step about the symptoms, the metrics and the log evidence, then finish with a final "
    "line of the form ANSWER: <n> where <n> is the number of the closest candidate.\n";

}  // namespace

void validate(const IncidentQuery& q) {
  if (blank(q.description)) throw Error(Errc::kInvalidArgument, "query description is empty");
  if (blank(q.raw_log) && q.telemetry.empty()) {
    throw Error(Errc::kInvalidArgument, "query needs a raw log or telemetry");
  }
}

std::string_view stage_name(TriageStage s) { return s == TriageStage::kLogOnly ? "LOG_ONLY" : "REFINED"; }

Prompts Prompts::defaults() {
  Prompts p;
  p.log_extraction =
      "You are helping an SRE triage an incident. Read the application log below and list the lines that best "
      "identify what went wrong: errors, crashes, resource exhaustion, timeouts and anything unusual compared "
      "with normal request handling. Copy each line verbatim, one per line, most important first. Do not add "
      "commentary.";
  p.judge_instruction =
      "You are an experienced site reliability engineer. A new incident has been reported. Below it is a "
      "numbered list of prior bug reports retrieved from the knowledge base. Find the prior bug whose "
      "description most closely fits the new incident: the same failing component, the same kind of resource "
      "problem and the same symptoms in metrics and logs.";
  p.cot_exemplars =
      "Example 1\n"
      "New incident: checkout latency rose to several seconds and the frontend logged upstream timeouts; CPU "
      "and memory stayed flat.\n"
      "Candidates: [1] memory of the cart service grew until an OOM kill. [2] random delays in the payment "
      "callback caused timeouts at the frontend.\n"
      "Reasoning: the new incident shows latency and timeouts without resource growth. Candidate 1 is a memory "
      "problem, which does not match the flat memory. Candidate 2 has the same symptom pattern.\n"
      "ANSWER: 2\n\n"
      "Example 2\n"
      "New incident: the geo service was killed with exit code 137 after its memory climbed steadily.\n"
      "Candidates: [1] CPU saturation in the rate service with a growing request queue. [2] an allocation "
      "that is never freed in the geo handler led to an out-of-memory kill.\n"
      "Reasoning: exit code 137 and steady memory growth point to a leak. Candidate 2 names the same service "
      "and the same failure.\n"
      "ANSWER: 2\n";
  p.generator_template =
      "You are an SRE assistant. A new incident was reported:\n{incident}\n\n"
      "The closest prior incident is {bug_id}:\n{bug_description}\n\n"
      "It was resolved as follows:\n{resolution}\n\n"
      "Explain briefly why the prior incident matches, then propose a step-by-step mitigation plan for the new "
      "incident. Do not run any commands; the plan is for a human operator.";
  return p;
}

Price PriceTable::price_for(const std::string& provider_tag) const {
  const auto it = by_provider.find(provider_tag);
  return it == by_provider.end() ? fallback : it->second;
}

CostReport cost_of(std::span<const ProvenanceEntry> provenance, const PriceTable& prices) {
  CostReport r;
  for (const auto& p : provenance) {
    r.tokens_in += p.tokens_in;
    r.tokens_out += p.tokens_out;
    const Price price = prices.price_for(p.provider_tag);
    r.estimated_cost += static_cast<double>(p.tokens_in) * price.input_per_token +
                        static_cast<double>(p.tokens_out) * price.output_per_token;
  }
  return r;
}

Providers Providers::offline(std::size_t dim, std::uint64_t seed) {
  Providers p;
  p.extractor = std::make_shared<logproc::RuleBasedExtractor>();
  p.embedder = std::make_shared<embed::OfflineEmbeddingProvider>(dim, seed);
  return p;
}

// ---- triage --------------------------------------------------------------------

TriageSet triage(const kb::KnowledgeBase& kb, const IncidentQuery& q, std::size_t k, std::size_t nprobe,
                 const logproc::FeatureExtractor& extractor, const embed::EmbeddingProvider& embedder,
                 const logproc::DigestOptions& digest, std::vector<ProvenanceEntry>* provenance) {
  if (k == 0) throw Error(Errc::kInvalidArgument, "K must be >= 1");
  auto t0 = Clock::now();
  const logproc::ProcessedLog processed = logproc::process_log(q.raw_log, extractor, digest);
  if (provenance) {
    ProvenanceEntry e{"extract", processed.extractor_tag, extractor.remote() && !processed.fell_back, 0, 0,
                      seconds_since(t0), processed.fell_back ? "extractor failed; rule-based fallback" : ""};
    provenance->push_back(std::move(e));
  }
  t0 = Clock::now();
  const embed::EmbeddingVector v = embed::embed(processed.text, embedder);
  if (provenance) {
    provenance->push_back({"embed", embedder.tag(), embedder.remote(),
                           embedder.remote() ? estimate_tokens(processed.text) : 0, 0, seconds_since(t0), ""});
  }
  const std::size_t probes = nprobe == 0 ? (kb.has_index() ? ann::default_nprobe(kb.index().clusters()) : 1) : nprobe;
  TriageSet ts;
  ts.stage = TriageStage::kLogOnly;
  for (auto& hit : kb.search(v.view(), k, probes)) {
    ts.candidates.push_back({std::move(hit.id), hit.score, std::nullopt});
  }
  return ts;
}

std::size_t retained_count(std::size_t n, double retain_fraction) {
  if (!(retain_fraction > 0.0) || retain_fraction > 1.0) {
    throw Error(Errc::kInvalidArgument, "retain_fraction must be in (0, 1]");
  }
  if (n == 0) return 0;
  const double x = retain_fraction * static_cast<double>(n);
  const double nearest = std::round(x);
  // 0.7 * 10 is 7.000000000000001 in binary; treat it as 7.
  const double kept = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(kept), 1, n);
}

std::optional<telemetry::TelemetryVector> query_vector(std::span<const telemetry::TelemetrySeries> series,
                                                       double grid_step) {
  if (series.empty()) return std::nullopt;
  try {
    return telemetry::vectorize(telemetry::align(series, grid_step));
  } catch (const Error& e) {
    if (e.code() == Errc::kAllSeriesEmpty) return std::nullopt;
    throw;
  }
}

TriageSet refine_with_telemetry(const kb::KnowledgeBase& kb, const TriageSet& ts,
                                std::span<const telemetry::TelemetrySeries> q_telemetry, double retain_fraction,
                                double grid_step) {
  const std::size_t keep = retained_count(ts.candidates.size(), retain_fraction);
  const auto qv = query_vector(q_telemetry, grid_step);
  if (!qv) {
    spdlog::debug("telemetry refinement skipped: query has no telemetry");
    return ts;
  }
  telemetry::NormalizationStats stats;
  if (kb.telemetry_stats()) {
    stats = *kb.telemetry_stats();
  } else if (kb.telemetry_count() > 0) {
    stats = kb::compute_telemetry_stats(kb);
  } else {
    spdlog::debug("telemetry refinement skipped: knowledge base has no telemetry");
    return ts;
  }

  TriageSet out;
  out.stage = TriageStage::kRefined;
  out.candidates = ts.candidates;
  for (auto& c : out.candidates) {
    c.telemetry_score.reset();
    if (const auto* tv = kb.telemetry(c.id)) {
      try {
        c.telemetry_score = telemetry::telemetry_similarity(*qv, *tv, stats);
      } catch (const Error& e) {
        if (e.code() != Errc::kZeroVector) throw;
      }
    }
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const TriageCandidate& a, const TriageCandidate& b) {
                     if (a.telemetry_score.has_value() != b.telemetry_score.has_value()) {
                       return a.telemetry_score.has_value();
                     }
                     if (a.telemetry_score && *a.telemetry_score != *b.telemetry_score) {
                       return *a.telemetry_score > *b.telemetry_score;
                     }
                     if (a.log_score != b.log_score) return a.log_score > b.log_score;
                     return a.id < b.id;
                   });
  out.candidates.resize(keep);
  return out;
}

// ---- judge prompt ------------------------------------------------------------------

PromptBundle assemble_judge_prompt(const IncidentQuery& q, std::span<const CandidateText> candidates,
                                   std::size_t token_budget, const Prompts& prompts,
                                   const TokenEstimator& estimator) {
  std::string head = prompts.judge_instruction + "\n\n";
  if (!prompts.cot_exemplars.empty()) head += "Worked examples:\n" + prompts.cot_exemplars + "\n";
  head += "NEW INCIDENT:\n" + q.description + "\n\nCANDIDATES:\n";
  const std::string tail = "\n" + std::string(kAnswerTrailer);

  PromptBundle b;
  b.token_budget = token_budget;
  std::string body;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string block = "[" + std::to_string(i + 1) + "] " + candidates[i].candidate.id + "\n" +
                        candidates[i].description + "\n\n";
    const std::size_t est = estimator(head + body + block + tail);
    if (est > token_budget) break;
    body += block;
    b.included.push_back(candidates[i].candidate);
  }
  if (b.included.empty()) {
    throw Error(Errc::kBudgetTooSmall, "token budget " + std::to_string(token_budget) +
                                           " leaves no room for a candidate (scaffold " +
                                           std::to_string(estimator(head + tail)) + " tokens)");
  }
  b.prompt = head + body + tail;
  b.token_estimate = estimator(b.prompt);
  return b;
}

PromptBundle assemble_judge_prompt(const IncidentQuery& q, const TriageSet& ts, const kb::KnowledgeBase& kb,
                                   std::size_t token_budget, const Prompts& prompts,
                                   const TokenEstimator& estimator) {
  std::vector<CandidateText> texts;
  texts.reserve(ts.candidates.size());
  for (const auto& c : ts.candidates) texts.push_back({c, kb.description(c.id).incident_text});
  return assemble_judge_prompt(q, texts, token_budget, prompts, estimator);
}

// ---- judge ---------------------------------------------------------------------------

std::optional<std::size_t> parse_answer(std::string_view reply, std::size_t count) {
  std::size_t end = reply.size();
  while (end > 0) {
    const std::size_t start = reply.rfind('\n', end - 1);
    const std::size_t from = start == std::string_view::npos ? 0 : start + 1;
    std::string_view line = reply.substr(from, end - from);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) {
      constexpr std::string_view kPrefix = "ANSWER:";
      if (!line.starts_with(kPrefix)) return std::nullopt;
      line.remove_prefix(kPrefix.size());
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      if (line.empty() || line.size() > 9) return std::nullopt;
      std::size_t n = 0;
      for (char c : line) {
        if (c < '0' || c > '9') return std::nullopt;
        n = n * 10 + static_cast<std::size_t>(c - '0');
      }
      if (n < 1 || n > count) return std::nullopt;
      return n;
    }
    if (start == std::string_view::npos) break;
    end = start;
  }
  return std::nullopt;
}

double combined_score(const TriageCandidate& c) {
  return c.telemetry_score ? 0.5 * (c.log_score + *c.telemetry_score) : c.log_score;
}

JudgeVerdict offline_judge(const PromptBundle& bundle) {
  if (bundle.included.empty()) throw Error(Errc::kInvalidArgument, "judge needs at least one candidate");
  std::size_t best = 0;
  for (std::size_t i = 1; i < bundle.included.size(); ++i) {
    if (combined_score(bundle.included[i]) > combined_score(bundle.included[best])) best = i;
  }
  const TriageCandidate& c = bundle.included[best];
  JudgeVerdict v;
  v.chosen = c.id;
  v.candidates_considered = static_cast<int>(bundle.included.size());
  v.rationale = "Candidate " + std::to_string(best + 1) + " (" + c.id + ") has the highest combined score " +
                score_text(combined_score(c)) + " (log " + score_text(c.log_score);
  if (c.telemetry_score) v.rationale += ", telemetry " + score_text(*c.telemetry_score);
  v.rationale += ") among " + std::to_string(bundle.included.size()) + " candidates.";
  if (bundle.included.size() > 1) {
    std::size_t second = best == 0 ? 1 : 0;
    for (std::size_t i = 0; i < bundle.included.size(); ++i) {
      if (i != best && combined_score(bundle.included[i]) > combined_score(bundle.included[second])) second = i;
    }
    v.rationale += " Runner-up: candidate " + std::to_string(second + 1) + " (" + bundle.included[second].id +
                   ") at " + score_text(combined_score(bundle.included[second])) + ".";
  }
  return v;
}

JudgeVerdict judge(const PromptBundle& bundle, const LanguageModel* model, const TokenEstimator& estimator,
                   std::vector<ProvenanceEntry>* provenance) {
  if (bundle.included.empty()) throw Error(Errc::kInvalidArgument, "judge needs at least one candidate");
  std::string note;
  if (model) {
    for (int attempt = 1; attempt <= 2; ++attempt) {
      const auto t0 = Clock::now();
      const Completion reply = model->complete(bundle.prompt);
      if (provenance) {
        provenance->push_back({"judge", model->tag(), model->remote(), estimator(bundle.prompt),
                               estimator(reply.text), seconds_since(t0), attempt > 1 ? "retry" : ""});
      }
      if (const auto n = parse_answer(reply.text, bundle.included.size())) {
        JudgeVerdict v;
        v.chosen = bundle.included[*n - 1].id;
        v.rationale = reply.text;
        v.candidates_considered = static_cast<int>(bundle.included.size());
        return v;
      }
    }
    spdlog::warn("judge reply had no valid ANSWER line after a retry; using the offline judge");
    note = "unparseable remote verdict; offline fallback";
  }
  const auto t0 = Clock::now();
  JudgeVerdict v = offline_judge(bundle);
  if (provenance) provenance->push_back({"judge", "offline-judge", false, 0, 0, seconds_since(t0), note});
  return v;
}

// ---- generator -------------------------------------------------------------------------

std::string fill_generator_prompt(const Prompts& prompts, const IncidentQuery& q, const kb::BugId& id,
                                  const kb::BugDescription& bug) {
  std::string s = prompts.generator_template;
  replace_all(s, "{incident}", q.description);
  replace_all(s, "{bug_id}", id);
  replace_all(s, "{bug_description}", bug.incident_text);
  replace_all(s, "{resolution}", bug.resolution_text.value_or(""));
  return s;
}

MitigationPlan generate_plan(const IncidentQuery& q, const JudgeVerdict& verdict, const kb::KnowledgeBase& kb,
                             const LanguageModel* generator, const Prompts& prompts,
                             const TokenEstimator& estimator) {
  const kb::BugDescription& bug = kb.description(verdict.chosen);
  if (!bug.resolution_text || blank(*bug.resolution_text)) {
    throw Error(Errc::kMissingResolution, "bug " + verdict.chosen + " has no resolution text");
  }
  MitigationPlan plan;
  plan.source_bug = verdict.chosen;
  const auto t0 = Clock::now();
  if (generator) {
    const std::string prompt = fill_generator_prompt(prompts, q, verdict.chosen, bug);
    const Completion reply = generator->complete(prompt);
    plan.plan_text = reply.text;
    plan.provenance.push_back({"generate", generator->tag(), generator->remote(), estimator(prompt),
                               estimator(reply.text), seconds_since(t0), ""});
    if (blank(plan.plan_text)) {
      throw Error(Errc::kProviderUnavailable, "generator returned an empty plan");
    }
  } else {
    plan.plan_text = "Closest prior incident " + verdict.chosen + "; previously mitigated by: " + *bug.resolution_text;
    plan.provenance.push_back({"generate", "offline-generator", false, 0, 0, seconds_since(t0), ""});
  }
  return plan;
}

// ---- end to end ------------------------------------------------------------------------

QueryResult answer_incident(const kb::KnowledgeBase& kb, const IncidentQuery& q, const PipelineConfig& config,
                            const Providers& providers) {
  const auto start = Clock::now();
  const TokenEstimator estimator = default_token_estimator(config.chars_per_token);
  std::vector<ProvenanceEntry> provenance;
  std::vector<std::pair<std::string, double>> stages;
  QueryResult r;

  auto run_stage = [&](const char* name, auto&& fn) {
    const auto t0 = Clock::now();
    try {
      fn();
    } catch (const Error& e) {
      throw e.stage().empty() ? e.with_stage(name) : e;
    }
    stages.emplace_back(name, std::max(seconds_since(t0), 1e-9));
  };

  validate(q);
  if (!providers.extractor || !providers.embedder) {
    throw Error(Errc::kConfig, "pipeline needs an extractor and an embedder");
  }
  TriageSet ts;
  run_stage("triage", [&] {
    ts = triage(kb, q, config.k, config.nprobe, *providers.extractor, *providers.embedder, config.digest,
                &provenance);
  });
  r.log_only_count = ts.candidates.size();
  run_stage("refine", [&] {
    ts = refine_with_telemetry(kb, ts, q.telemetry, config.retain_fraction, config.grid_step);
  });
  PromptBundle bundle;
  run_stage("assemble", [&] {
    bundle = assemble_judge_prompt(q, ts, kb, config.token_budget, config.prompts, estimator);
  });
  run_stage("judge", [&] { r.verdict = judge(bundle, providers.judge.get(), estimator, &provenance); });
  run_stage("generate", [&] {
    r.plan = generate_plan(q, r.verdict, kb, providers.generator.get(), config.prompts, estimator);
  });
  provenance.insert(provenance.end(), r.plan.provenance.begin(), r.plan.provenance.end());
  r.plan.provenance = std::move(provenance);

  r.triage = std::move(ts);
  r.prompt_tokens = bundle.token_estimate;
  r.prompt_candidates = bundle.included.size();
  r.cost = cost_of(r.plan.provenance, config.prices);
  r.cost.stage_seconds = std::move(stages);
  r.cost.total_seconds = seconds_since(start);
  return r;
}

}  // namespace arca::pipeline
