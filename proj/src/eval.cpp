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

#include "arca/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "arca/error.hpp"
#include "arca/kernels.hpp"

namespace arca::eval {

namespace {

// Runs fn(i) for i in [0, n) across threads; rethrows the first exception.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr first;
  std::mutex mu;
  const auto total = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

double fraction(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

bool contains(const pipeline::TriageSet& ts, const std::string& id) {
  return std::any_of(ts.candidates.begin(), ts.candidates.end(),
                     [&](const pipeline::TriageCandidate& c) { return c.id == id; });
}

}  // namespace

Split split_corpus(std::span<const BugTicket> corpus, std::size_t build_n, std::size_t test_n, std::uint64_t seed) {
  if (build_n + test_n > corpus.size()) {
    throw Error(Errc::kInfeasibleSplit, "build + test exceeds corpus size");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus[i].id, i);

  constexpr int kAttempts = 64;
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<char> in_test(corpus.size(), 0), in_build(corpus.size(), 0);
    std::size_t tests = 0, builds = 0;
    for (std::size_t i : order) {
      if (tests == test_n) break;
      if (in_test[i] || in_build[i]) continue;
      const auto pair = index.find(corpus[i].labels.closest_bug_id);
      if (pair == index.end() || pair->second == i || in_test[pair->second]) continue;
      if (!in_build[pair->second]) {
        if (builds == build_n) continue;
        in_build[pair->second] = 1;
        ++builds;
      }
      in_test[i] = 1;
      ++tests;
    }
    if (tests < test_n) continue;
    for (std::size_t i : order) {
      if (builds == build_n) break;
      if (!in_test[i] && !in_build[i]) {
        in_build[i] = 1;
        ++builds;
      }
    }
    Split s;
    // keep corpus order within each side
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (in_test[i]) s.test.push_back(corpus[i]);
      if (in_build[i]) s.build.push_back(corpus[i]);
    }
    return s;
  }
  throw Error(Errc::kInfeasibleSplit, "no split places every test ticket's closest bug in the build set after " +
                                          std::to_string(kAttempts) + " attempts");
}

pipeline::IncidentQuery query_for(const BugTicket& t) { return {t.description, t.raw_log, t.telemetry}; }

std::optional<telemetry::TelemetryVector> ticket_vector(const BugTicket& t, double grid_step) {
  return pipeline::query_vector(t.telemetry, grid_step);
}

kb::KnowledgeBase build_kb(std::span<const BugTicket> tickets, const pipeline::PipelineConfig& config,
                           const pipeline::Providers& providers, std::size_t clusters, std::uint64_t index_seed) {
  if (!providers.extractor || !providers.embedder) throw Error(Errc::kConfig, "build needs an extractor and embedder");
  std::vector<std::string> texts(tickets.size());
  std::vector<std::optional<telemetry::TelemetryVector>> vectors(tickets.size());
  parallel_for(tickets.size(), [&](std::size_t i) {
    try {
      texts[i] = logproc::process_log(tickets[i].raw_log, *providers.extractor, config.digest).text;
      vectors[i] = ticket_vector(tickets[i], config.grid_step);
    } catch (const Error& e) {
      throw Error(e.code(), "ticket " + tickets[i].id + ": " + e.what());
    }
  });
  const auto embeddings = embed::embed_batch(texts, *providers.embedder);
  kb::KnowledgeBase kb(providers.embedder->dimension());
  for (std::size_t i = 0; i < tickets.size(); ++i) {
    kb.insert_ticket(tickets[i].id, tickets[i].to_description(), embeddings[i], vectors[i]);
  }
  kb.build_index(clusters, index_seed);
  return kb;
}

double eval_triage(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::size_t k,
                   const pipeline::PipelineConfig& config, const pipeline::Providers& providers) {
  std::vector<char> hit(test.size(), 0);
  parallel_for(test.size(), [&](std::size_t i) {
    const auto q = query_for(test[i]);
    auto ts = pipeline::triage(kb, q, k, config.nprobe, *providers.extractor, *providers.embedder, config.digest);
    ts = pipeline::refine_with_telemetry(kb, ts, q.telemetry, config.retain_fraction, config.grid_step);
    hit[i] = contains(ts, test[i].labels.closest_bug_id) ? 1 : 0;
  });
  return fraction(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), test.size());
}

SystemEval eval_system(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::size_t k,
                       const pipeline::PipelineConfig& config, const pipeline::Providers& providers, int repeats) {
  if (repeats < 1) throw Error(Errc::kInvalidArgument, "repeats must be >= 1");
  pipeline::PipelineConfig cfg = config;
  cfg.k = k;
  const std::size_t reps = static_cast<std::size_t>(repeats);
  SystemEval out;
  out.outcomes.resize(test.size() * reps);
  parallel_for(out.outcomes.size(), [&](std::size_t slot) {
    const BugTicket& t = test[slot / reps];
    const auto r = pipeline::answer_incident(kb, query_for(t), cfg, providers);
    QueryOutcome& o = out.outcomes[slot];
    o.ticket_id = t.id;
    o.expected = t.labels.closest_bug_id;
    o.chosen = r.verdict.chosen;
    o.in_triage = contains(r.triage, o.expected);
    o.prompt_candidates = r.prompt_candidates;
    o.cost = r.cost.estimated_cost;
    o.seconds = r.cost.total_seconds;
  });
  std::size_t tri = 0, sys = 0;
  for (const auto& o : out.outcomes) {
    tri += o.in_triage ? 1 : 0;
    sys += o.chosen == o.expected ? 1 : 0;
    out.mean_cost += o.cost;
    out.mean_seconds += o.seconds;
  }
  const double n = std::max<double>(1.0, static_cast<double>(out.outcomes.size()));
  out.triage_accuracy = fraction(tri, out.outcomes.size());
  out.system_accuracy = fraction(sys, out.outcomes.size());
  out.mean_cost /= n;
  out.mean_seconds /= n;
  return out;
}

EvalReport run_eval(const kb::KnowledgeBase& kb, std::span<const BugTicket> test, std::vector<std::size_t> ks,
                    const pipeline::PipelineConfig& config, const pipeline::Providers& providers, int repeats) {
  if (std::find(ks.begin(), ks.end(), config.k) == ks.end()) ks.push_back(config.k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  EvalReport report;
  report.repeats = repeats;
  for (std::size_t k : ks) {
    const SystemEval s = eval_system(kb, test, k, config, providers, repeats);
    report.per_k.push_back({k, s.triage_accuracy, s.system_accuracy, s.mean_cost, s.mean_seconds});
    if (k == config.k) {
      report.triage_accuracy = s.triage_accuracy;
      report.system_accuracy = s.system_accuracy;
    }
  }
  return report;
}

std::vector<ModalityRow> eval_modalities(const kb::KnowledgeBase& kb, std::span<const BugTicket> test,
                                         std::size_t k, const pipeline::PipelineConfig& config,
                                         const pipeline::Providers& providers) {
  const TokenEstimator estimator = default_token_estimator(config.chars_per_token);
  const telemetry::NormalizationStats stats =
      kb.telemetry_stats() ? *kb.telemetry_stats() : kb::compute_telemetry_stats(kb);

  struct Cell {
    bool correct = false;
    double cost = 0.0, seconds = 0.0;
  };
  constexpr std::size_t kModes = 3;
  std::vector<std::array<Cell, kModes>> cells(test.size());

  parallel_for(test.size(), [&](std::size_t i) {
    const auto q = query_for(test[i]);
    const std::string& expected = test[i].labels.closest_bug_id;
    using Clock = std::chrono::steady_clock;
    auto since = [](Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); };
    // judge a candidate set; `seconds` is the time already spent producing it
    auto finish = [&](std::size_t mode, const pipeline::TriageSet& ts, std::vector<pipeline::ProvenanceEntry> prov,
                      double seconds) {
      const auto t0 = Clock::now();
      const auto bundle = pipeline::assemble_judge_prompt(q, ts, kb, config.token_budget, config.prompts, estimator);
      const auto verdict = pipeline::judge(bundle, providers.judge.get(), estimator, &prov);
      cells[i][mode].correct = verdict.chosen == expected;
      cells[i][mode].cost = pipeline::cost_of(prov, config.prices).estimated_cost;
      cells[i][mode].seconds = seconds + since(t0);
    };

    // telemetry-only: whole store ranked by telemetry similarity
    {
      const auto t0 = Clock::now();
      pipeline::TriageSet ts;
      ts.stage = pipeline::TriageStage::kRefined;
      if (const auto qv = ticket_vector(test[i], config.grid_step)) {
        for (const auto& id : kb.ids()) {
          const auto* tv = kb.telemetry(id);
          if (!tv) continue;
          try {
            ts.candidates.push_back({id, 0.0, telemetry::telemetry_similarity(*qv, *tv, stats)});
          } catch (const Error& e) {
            if (e.code() != Errc::kZeroVector) throw;
          }
        }
      }
      std::sort(ts.candidates.begin(), ts.candidates.end(), [](const auto& a, const auto& b) {
        return *a.telemetry_score != *b.telemetry_score ? *a.telemetry_score > *b.telemetry_score : a.id < b.id;
      });
      if (ts.candidates.size() > k) ts.candidates.resize(k);
      if (!ts.candidates.empty()) finish(0, ts, {}, since(t0));
    }
    // log-only and log+telemetry share the triage step
    {
      auto t0 = Clock::now();
      std::vector<pipeline::ProvenanceEntry> prov;
      const auto ts = pipeline::triage(kb, q, k, config.nprobe, *providers.extractor, *providers.embedder,
                                       config.digest, &prov);
      const double triage_s = since(t0);
      finish(1, ts, prov, triage_s);
      t0 = Clock::now();
      const auto refined = pipeline::refine_with_telemetry(kb, ts, q.telemetry, config.retain_fraction,
                                                           config.grid_step);
      finish(2, refined, prov, triage_s + since(t0));
    }
  });

  std::vector<ModalityRow> rows = {{"telemetry-only"}, {"log-only"}, {"log+telemetry"}};
  for (std::size_t m = 0; m < kModes; ++m) {
    std::size_t correct = 0;
    for (const auto& c : cells) {
      correct += c[m].correct ? 1 : 0;
      rows[m].mean_cost += c[m].cost;
      rows[m].mean_seconds += c[m].seconds;
    }
    const double n = std::max<double>(1.0, static_cast<double>(test.size()));
    rows[m].accuracy = fraction(correct, test.size());
    rows[m].mean_cost /= n;
    rows[m].mean_seconds /= n;
  }
  return rows;
}

ClusteringReport clustering_report(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  ClusteringReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

ClusteringReport eval_log_clustering(std::span<const std::pair<std::string, std::string>> labeled_logs,
                                     std::size_t k_neighbors, const logproc::FeatureExtractor& extractor,
                                     const embed::EmbeddingProvider& embedder, const std::string& positive_label,
                                     const logproc::DigestOptions& digest) {
  std::unordered_set<std::string> labels;
  for (const auto& [log, label] : labeled_logs) labels.insert(label);
  if (labels.size() < 2 || !labels.count(positive_label)) {
    throw Error(Errc::kDegenerateLabels, "need at least two labels including '" + positive_label + "'");
  }
  if (k_neighbors == 0 || k_neighbors >= labeled_logs.size()) {
    throw Error(Errc::kInvalidArgument, "k_neighbors must be in [1, n-1]");
  }
  const std::size_t n = labeled_logs.size();
  std::vector<std::string> texts(n);
  parallel_for(n, [&](std::size_t i) { texts[i] = logproc::process_log(labeled_logs[i].first, extractor, digest).text; });
  const auto emb = embed::embed_batch(texts, embedder);

  std::vector<char> predicted_positive(n, 0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> nb;
    nb.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) nb.emplace_back(kernels::dot(emb[i].view(), emb[j].view()), j);
    }
    std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(k_neighbors), nb.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    // Majority vote; a tie goes to the label of the nearest tied neighbour.
    std::map<std::string, std::size_t> votes;
    for (std::size_t r = 0; r < k_neighbors; ++r) ++votes[labeled_logs[nb[r].second].second];
    std::size_t top = 0;
    for (const auto& [label, v] : votes) top = std::max(top, v);
    std::string winner;
    for (std::size_t r = 0; r < k_neighbors; ++r) {
      const std::string& label = labeled_logs[nb[r].second].second;
      if (votes[label] == top) {
        winner = label;
        break;
      }
    }
    predicted_positive[i] = winner == positive_label ? 1 : 0;
  });

  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool actual = labeled_logs[i].second == positive_label;
    if (predicted_positive[i] && actual) ++tp;
    else if (predicted_positive[i]) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return clustering_report(tp, fp, fn, tn);
}

}  // namespace arca::eval
