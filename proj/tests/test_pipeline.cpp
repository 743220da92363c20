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
#include <set>

#include "arca/error.hpp"
#include "arca/pipeline.hpp"
#include "fakes.hpp"
#include "support.hpp"

using namespace arca;
using namespace arca::pipeline;

namespace {

constexpr std::size_t kDim = 256;
constexpr std::uint64_t kSeed = 13;

std::string log_for(const std::string& topic_text, std::size_t i) {
  std::string log;
  for (int h = 0; h < 20; ++h) log += "INFO hb: heartbeat seq=" + std::to_string(h) + "\n";
  log += "ERROR app" + std::to_string(i % 7) + ": " + topic_text + "\n";
  return log;
}

std::vector<telemetry::TelemetrySeries> series(double level, double slope) {
  std::vector<telemetry::TelemetrySeries> out;
  for (auto c : telemetry::kAllCounters) {
    telemetry::TelemetrySeries s;
    s.counter = c;
    const double k = 1.0 + static_cast<double>(c);
    for (int t = 0; t < 12; ++t) {
      s.samples.push_back({5.0 * t, level * k + slope * k * t + 0.3 * std::sin(t * k)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

telemetry::TelemetryVector vec(double level, double slope) {
  const auto s = series(level, slope);
  return telemetry::vectorize(telemetry::align(s, 5.0));
}

struct Fixture {
  kb::KnowledgeBase kb{kDim};
  std::vector<std::string> logs;
  Providers providers = Providers::offline(kDim, kSeed);

  explicit Fixture(std::size_t n) {
    const auto texts = testing::topic_texts(n, 31);
    for (std::size_t i = 0; i < n; ++i) {
      logs.push_back(log_for(texts[i], i));
      const auto p = logproc::process_log(logs.back(), *providers.extractor);
      kb::BugDescription d{"incident " + texts[i], "fix number " + std::to_string(i), std::nullopt, std::nullopt};
      std::optional<telemetry::TelemetryVector> t;
      if (i % 5 != 4) t = vec(static_cast<double>(i % 9), 0.1 * static_cast<double>(i % 4));
      kb.insert_ticket("BUG-" + std::to_string(10000 + i), d, embed::embed(p.text, *providers.embedder), t);
    }
    kb.build_index(0, 3);
  }
};

Fixture& shared_fixture() {
  static Fixture f(300);
  return f;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::kIo;
}

}  // namespace

TEST_CASE("query validation") {
  CHECK(code_of([] { validate({"", "x", {}}); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { validate({"d", "", {}}); }) == Errc::kInvalidArgument);
  CHECK_NOTHROW(validate({"d", "", series(1, 0)}));
  CHECK_NOTHROW(validate({"d", "log", {}}));
}

TEST_CASE("retained count") {
  CHECK(retained_count(300, 0.8) == 240);
  CHECK(retained_count(300, 1.0) == 300);
  CHECK(retained_count(300, 0.1) == 30);
  CHECK(retained_count(7, 0.8) == 6);
  CHECK(retained_count(3, 0.01) == 1);
  CHECK(retained_count(0, 0.5) == 0);
  CHECK(retained_count(10, 0.7) == 7);
  CHECK(code_of([] { retained_count(5, 0.0); }) == Errc::kInvalidArgument);
  CHECK(code_of([] { retained_count(5, 1.5); }) == Errc::kInvalidArgument);
}

TEST_CASE("triage self retrieval and prefix property") {
  auto& f = shared_fixture();
  const std::size_t c = f.kb.index().clusters();
  for (std::size_t i : {0u, 17u, 150u, 299u}) {
    const IncidentQuery q{"desc", f.logs[i], {}};
    const auto ts = triage(f.kb, q, 10, c, *f.providers.extractor, *f.providers.embedder);
    REQUIRE_FALSE(ts.candidates.empty());
    CHECK(ts.candidates[0].id == f.kb.ids()[i]);
    CHECK(ts.candidates[0].log_score == doctest::Approx(1.0));
    CHECK(ts.stage == TriageStage::kLogOnly);
  }
  const IncidentQuery q{"desc", f.logs[42], {}};
  const auto small = triage(f.kb, q, 100, c, *f.providers.extractor, *f.providers.embedder);
  const auto big = triage(f.kb, q, 400, c, *f.providers.extractor, *f.providers.embedder);
  CHECK(small.candidates.size() == 100);
  CHECK(big.candidates.size() == 300);
  for (std::size_t i = 0; i < small.candidates.size(); ++i) CHECK(small.candidates[i] == big.candidates[i]);
  CHECK(code_of([&] { triage(f.kb, {"d", "  \n", {}}, 5, 1, *f.providers.extractor, *f.providers.embedder); }) ==
        Errc::kEmptyLog);
}

TEST_CASE("refinement cardinality and ordering") {
  auto& f = shared_fixture();
  const std::size_t c = f.kb.index().clusters();
  const IncidentQuery q{"desc", f.logs[3], series(3.0, 0.3)};
  const auto ts = triage(f.kb, q, 300, c, *f.providers.extractor, *f.providers.embedder);
  for (double r : {1.0, 0.8, 0.5, 0.1}) {
    const auto out = refine_with_telemetry(f.kb, ts, q.telemetry, r);
    CHECK(out.stage == TriageStage::kRefined);
    CHECK(out.candidates.size() == retained_count(ts.candidates.size(), r));
    std::set<std::string> ids;
    for (const auto& x : out.candidates) CHECK(ids.insert(x.id).second);
    bool missing_seen = false;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
      const auto& x = out.candidates[i];
      CHECK((x.telemetry_score.has_value() == (f.kb.telemetry(x.id) != nullptr)));
      if (!x.telemetry_score) missing_seen = true;
      else CHECK_FALSE(missing_seen);
      if (i > 0 && x.telemetry_score && out.candidates[i - 1].telemetry_score) {
        CHECK(*out.candidates[i - 1].telemetry_score >= *x.telemetry_score);
      }
    }
  }
  const auto same = refine_with_telemetry(f.kb, ts, {}, 0.8);
  CHECK(same == ts);
}

TEST_CASE("telemetry breaks a log tie") {
  kb::KnowledgeBase kb(64);
  const auto e = embed::offline_embed("identical log text", 64, 1);
  kb.insert_ticket("A", {"a", "ra", {}, {}}, e, vec(1.0, 0.0));
  kb.insert_ticket("B", {"b", "rb", {}, {}}, e, vec(6.0, 0.5));
  kb.insert_ticket("C", {"c", "rc", {}, {}}, embed::offline_embed("other", 64, 1), vec(3.0, 0.2));
  kb.build_index(1, 1);
  TriageSet ts;
  ts.candidates = {{"A", 1.0, std::nullopt}, {"B", 1.0, std::nullopt}};
  const auto q = series(6.0, 0.5);
  const auto out = refine_with_telemetry(kb, ts, q, 1.0);
  REQUIRE(out.candidates.size() == 2);
  CHECK(out.candidates[0].id == "B");
  const auto qv = *query_vector(q, 5.0);
  const auto stats = *kb.telemetry_stats();
  CHECK(*out.candidates[0].telemetry_score == doctest::Approx(telemetry::telemetry_similarity(qv, *kb.telemetry("B"), stats)));
  CHECK(*out.candidates[1].telemetry_score == doctest::Approx(telemetry::telemetry_similarity(qv, *kb.telemetry("A"), stats)));
}

TEST_CASE("judge prompt stays within budget") {
  const auto est = default_token_estimator(4.0);
  const Prompts prompts = Prompts::defaults();
  std::mt19937_64 rng(5);
  for (int fixture = 0; fixture < 50; ++fixture) {
    std::vector<CandidateText> cands;
    const std::size_t n = 1 + rng() % 400;
    for (std::size_t i = 0; i < n; ++i) {
      cands.push_back({{"BUG-" + std::to_string(i), 0.5, std::nullopt}, std::string(20 + rng() % 3000, 'x')});
    }
    const std::size_t budget = 2000 + rng() % 30000;
    const auto b = assemble_judge_prompt({"incident text", "log", {}}, cands, budget, prompts, est);
    CHECK(b.token_estimate == est(b.prompt));
    CHECK(b.token_estimate <= budget);
    CHECK(b.included.size() >= 1);
    CHECK(b.included.size() <= n);
    if (b.included.size() < n) {
      // The next candidate would not have fit.
      const auto next = assemble_judge_prompt({"incident text", "log", {}},
                                              std::span(cands).first(b.included.size() + 1), 1u << 30, prompts, est);
      CHECK(next.token_estimate > budget);
    }
  }
  std::vector<CandidateText> three = {{{"A", 0.9, {}}, "short a"}, {{"B", 0.8, {}}, "short b"}, {{"C", 0.7, {}}, "short c"}};
  const auto b = assemble_judge_prompt({"incident", "log", {}}, three, 30000, prompts, est);
  CHECK(b.included.size() == 3);
  CHECK(b.prompt.find("[3] C") != std::string::npos);
  CHECK(b.prompt.find("ANSWER") != std::string::npos);

  std::vector<CandidateText> many;
  for (int i = 0; i < 400; ++i) many.push_back({{"BUG-" + std::to_string(i), 0.1, {}}, std::string(1200, 'y')});
  const auto big = assemble_judge_prompt({"incident", "log", {}}, many, 30000, prompts, est);
  CHECK(big.included.size() < 400);
  CHECK(big.token_estimate <= 30000);
  CHECK(code_of([&] { assemble_judge_prompt({"incident", "log", {}}, many, 50, prompts, est); }) ==
        Errc::kBudgetTooSmall);
}

TEST_CASE("answer parsing") {
  CHECK(parse_answer("thinking...\nANSWER: 7", 10) == 7u);
  CHECK(parse_answer("ANSWER: 7\n\n  \n", 10) == 7u);
  CHECK(parse_answer("ANSWER:3", 3) == 3u);
  CHECK_FALSE(parse_answer("ANSWER: 11", 10));
  CHECK_FALSE(parse_answer("ANSWER: 0", 10));
  CHECK_FALSE(parse_answer("ANSWER: 7\nmore text", 10));
  CHECK_FALSE(parse_answer("answer is 7", 10));
  CHECK_FALSE(parse_answer("ANSWER: 7b", 10));
  CHECK_FALSE(parse_answer("", 10));
}

TEST_CASE("judge paths") {
  const auto est = default_token_estimator(4.0);
  PromptBundle b;
  b.prompt = "prompt body";
  for (int i = 1; i <= 10; ++i) b.included.push_back({"BUG-" + std::to_string(i), 0.1 * i, std::nullopt});
  b.included[2].telemetry_score = 0.99;  // combined (0.3+0.99)/2 = 0.645 < 1.0

  SUBCASE("offline argmax") {
    const auto v = offline_judge(b);
    CHECK(v.chosen == "BUG-10");
    CHECK(v.candidates_considered == 10);
    std::vector<ProvenanceEntry> prov;
    CHECK(judge(b, nullptr, est, &prov).chosen == "BUG-10");
    REQUIRE(prov.size() == 1);
    CHECK_FALSE(prov[0].remote);
    CHECK(prov[0].tokens_in == 0);
  }
  SUBCASE("single candidate and first tie wins") {
    PromptBundle one;
    one.included = {{"ONLY", 0.0, std::nullopt}};
    CHECK(offline_judge(one).chosen == "ONLY");
    PromptBundle tie;
    tie.included = {{"X", 0.5, std::nullopt}, {"Y", 0.4, 0.6}};
    CHECK(offline_judge(tie).chosen == "X");
  }
  SUBCASE("remote answer") {
    testing::FakeModel m([](const std::string&, int) { return std::string("Step 1...\nANSWER: 7"); });
    std::vector<ProvenanceEntry> prov;
    const auto v = judge(b, &m, est, &prov);
    CHECK(v.chosen == "BUG-7");
    CHECK(m.calls() == 1);
    REQUIRE(prov.size() == 1);
    CHECK(prov[0].tokens_in == est(b.prompt));
    CHECK(prov[0].tokens_out == est("Step 1...\nANSWER: 7"));
  }
  SUBCASE("retry then success") {
    testing::FakeModel m([](const std::string&, int n) { return n == 1 ? std::string("no idea") : std::string("ANSWER: 2"); });
    std::vector<ProvenanceEntry> prov;
    CHECK(judge(b, &m, est, &prov).chosen == "BUG-2");
    CHECK(m.calls() == 2);
    CHECK(prov.size() == 2);
  }
  SUBCASE("fallback after two bad replies") {
    testing::FakeModel m([](const std::string&, int) { return std::string("ANSWER: 99"); });
    std::vector<ProvenanceEntry> prov;
    CHECK(judge(b, &m, est, &prov).chosen == "BUG-10");
    CHECK(m.calls() == 2);
    REQUIRE(prov.size() == 3);
    CHECK(prov[2].provider_tag == "offline-judge");
    CHECK_FALSE(prov[2].note.empty());
  }
}

TEST_CASE("plan generation") {
  auto& f = shared_fixture();
  const IncidentQuery q{"new incident", f.logs[0], {}};
  const JudgeVerdict v{f.kb.ids()[5], "r", 1};
  const auto est = default_token_estimator(4.0);
  const auto plan = generate_plan(q, v, f.kb, nullptr, Prompts::defaults(), est);
  CHECK(plan.source_bug == f.kb.ids()[5]);
  CHECK(plan.plan_text.find(*f.kb.description(f.kb.ids()[5]).resolution_text) != std::string::npos);
  REQUIRE(plan.provenance.size() == 1);
  CHECK_FALSE(plan.provenance[0].remote);

  testing::FakeModel gen([](const std::string&, int) { return std::string("do the thing"); });
  const auto remote = generate_plan(q, v, f.kb, &gen, Prompts::defaults(), est);
  CHECK(remote.plan_text == "do the thing");
  REQUIRE(gen.prompts().size() == 1);
  const std::string sent = gen.prompts()[0];
  CHECK(sent == fill_generator_prompt(Prompts::defaults(), q, v.chosen, f.kb.description(v.chosen)));
  CHECK(sent.find("new incident") != std::string::npos);
  CHECK(remote.provenance[0].tokens_in == est(sent));

  kb::KnowledgeBase bare(kDim);
  bare.insert_ticket("NORES", {"x", std::nullopt, {}, {}}, embed::offline_embed("x", kDim, 1), std::nullopt);
  CHECK(code_of([&] { generate_plan(q, {"NORES", "", 1}, bare, nullptr, Prompts::defaults(), est); }) ==
        Errc::kMissingResolution);
  const auto failing = testing::failing_model();
  CHECK(code_of([&] { generate_plan(q, v, f.kb, failing.get(), Prompts::defaults(), est); }) ==
        Errc::kProviderUnavailable);
}

TEST_CASE("cost arithmetic") {
  std::vector<ProvenanceEntry> prov = {{"judge", "m1", true, 1000, 50, 0.1, ""},
                                       {"generate", "m2", true, 200, 300, 0.1, ""},
                                       {"embed", "offline", false, 0, 0, 0.0, ""}};
  PriceTable prices;
  prices.by_provider["m1"] = {1e-5, 3e-5};
  prices.fallback = {2e-6, 4e-6};
  const auto r = cost_of(prov, prices);
  CHECK(r.tokens_in == 1200);
  CHECK(r.tokens_out == 350);
  CHECK(r.estimated_cost == doctest::Approx(1000 * 1e-5 + 50 * 3e-5 + 200 * 2e-6 + 300 * 4e-6));
}

TEST_CASE("offline end to end") {
  auto& f = shared_fixture();
  PipelineConfig cfg;
  cfg.prices.fallback = {1e-6, 2e-6};
  cfg.nprobe = f.kb.index().clusters();
  const IncidentQuery q{"database lock timeout", f.logs[11], series(2.0, 0.3)};
  const auto r = answer_incident(f.kb, q, cfg, f.providers);
  CHECK(r.log_only_count == 300);
  CHECK(r.triage.candidates.size() == 240);
  CHECK(r.prompt_candidates >= 1);
  CHECK(r.prompt_tokens <= cfg.token_budget);
  CHECK_FALSE(r.plan.plan_text.empty());
  CHECK(r.plan.source_bug == r.verdict.chosen);
  for (const auto& p : r.plan.provenance) CHECK_FALSE(p.remote);
  CHECK(r.cost.tokens_in == 0);
  CHECK(r.cost.estimated_cost == 0.0);
  REQUIRE(r.cost.stage_seconds.size() == 5);
  const std::vector<std::string> names = {"triage", "refine", "assemble", "judge", "generate"};
  double sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.cost.stage_seconds[i].first == names[i]);
    CHECK(r.cost.stage_seconds[i].second > 0.0);
    sum += r.cost.stage_seconds[i].second;
  }
  CHECK(sum <= r.cost.total_seconds + 1e-6);

  const auto again = answer_incident(f.kb, q, cfg, f.providers);
  CHECK(again.plan.plan_text == r.plan.plan_text);
  CHECK(again.triage == r.triage);

  PipelineConfig tight = cfg;
  tight.token_budget = 10;
  try {
    answer_incident(f.kb, q, tight, f.providers);
    FAIL("expected BudgetTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kBudgetTooSmall);
    CHECK(e.stage() == "assemble");
  }
}
