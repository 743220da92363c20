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

#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "arca/config.hpp"
#include "arca/corpus.hpp"
#include "arca/error.hpp"
#include "arca/eval.hpp"
#include "arca/json_io.hpp"
#include "arca/service.hpp"
#include "support.hpp"

using namespace arca;
using namespace arca::eval;
using nlohmann::json;

namespace {

constexpr std::size_t kDim = 512;

struct Small {
  std::vector<BugTicket> corpus = corpus::generate_corpus(5, 21);
  pipeline::PipelineConfig config;
  pipeline::Providers providers = pipeline::Providers::offline(kDim, 4);
  Split split;
  std::shared_ptr<kb::KnowledgeBase> kb;

  Small() {
    split = split_corpus(corpus, 24, 16, 9);
    kb = std::make_shared<kb::KnowledgeBase>(build_kb(split.build, config, providers, 0, 5));
    config.nprobe = kb->index().clusters();
  }
};

Small& small() {
  static Small s;
  return s;
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

TEST_CASE("split respects pairing and is deterministic") {
  const auto corpus = corpus::generate_corpus(5, 3);
  const auto s = split_corpus(corpus, 20, 20, 1);
  CHECK(s.build.size() == 20);
  CHECK(s.test.size() == 20);
  std::set<std::string> build_ids;
  for (const auto& t : s.build) build_ids.insert(t.id);
  for (const auto& t : s.test) {
    CHECK(build_ids.count(t.id) == 0);
    CHECK(build_ids.count(t.labels.closest_bug_id) == 1);
  }
  const auto again = split_corpus(corpus, 20, 20, 1);
  for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].id == s.test[i].id);

  CHECK(code_of([&] { split_corpus(corpus, 10, 25, 1); }) == Errc::kInfeasibleSplit);
  CHECK(code_of([&] { split_corpus(corpus, 30, 20, 1); }) == Errc::kInfeasibleSplit);
}

TEST_CASE("exhaustive triage always finds the closest bug") {
  auto& s = small();
  auto cfg = s.config;
  cfg.retain_fraction = 1.0;
  CHECK(eval_triage(*s.kb, s.split.test, s.kb->size(), cfg, s.providers) == 1.0);
}

TEST_CASE("triage accuracy is monotone in K under exact search") {
  auto& s = small();
  auto cfg = s.config;
  cfg.retain_fraction = 1.0;
  double prev = 0.0;
  for (std::size_t k : {1u, 2u, 4u, 8u, 16u, 24u}) {
    const double a = eval_triage(*s.kb, s.split.test, k, cfg, s.providers);
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("system accuracy never exceeds triage accuracy") {
  auto& s = small();
  const auto r = eval_system(*s.kb, s.split.test, 10, s.config, s.providers, 3);
  CHECK(r.outcomes.size() == s.split.test.size() * 3);
  CHECK(r.system_accuracy <= r.triage_accuracy);
  for (std::size_t q = 0; q < s.split.test.size(); ++q) {
    CHECK(r.outcomes[3 * q].chosen == r.outcomes[3 * q + 1].chosen);
    CHECK(r.outcomes[3 * q].chosen == r.outcomes[3 * q + 2].chosen);
    if (r.outcomes[3 * q].chosen == r.outcomes[3 * q].expected) CHECK(r.outcomes[3 * q].in_triage);
  }
  auto cfg = s.config;
  cfg.k = 8;
  const auto report = run_eval(*s.kb, s.split.test, {16, 4, 8}, cfg, s.providers, 1);
  REQUIRE(report.per_k.size() == 3);
  CHECK(report.per_k[0].k == 4);
  CHECK(report.per_k[2].k == 16);
  CHECK(report.triage_accuracy == report.per_k[1].triage_accuracy);
  // The configured K is always reported.
  CHECK(run_eval(*s.kb, s.split.test, {4}, cfg, s.providers, 1).per_k.size() == 2);
  for (const auto& p : report.per_k) CHECK(p.system_accuracy <= p.triage_accuracy);
}

TEST_CASE("modality rows") {
  auto& s = small();
  const auto rows = eval_modalities(*s.kb, s.split.test, 10, s.config, s.providers);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mode == "telemetry-only");
  CHECK(rows[1].mode == "log-only");
  CHECK(rows[2].mode == "log+telemetry");
  for (const auto& r : rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }
}

TEST_CASE("clustering report identities") {
  const auto r = clustering_report(8, 2, 4, 6);
  CHECK(r.precision == doctest::Approx(0.8));
  CHECK(r.recall == doctest::Approx(8.0 / 12.0));
  CHECK(r.f1 == doctest::Approx(2 * r.precision * r.recall / (r.precision + r.recall)));
  const auto zero = clustering_report(0, 0, 5, 5);
  CHECK(zero.precision == 0.0);
  CHECK(zero.f1 == 0.0);

  const auto logs = corpus::generate_labeled_logs(12, 5);
  const logproc::RuleBasedExtractor ex;
  const embed::OfflineEmbeddingProvider emb(1024, 2);
  const auto c = eval_log_clustering(logs, 3, ex, emb);
  CHECK(c.tp + c.fp + c.fn + c.tn == logs.size());
  CHECK(c.f1 == 1.0);

  std::vector<std::pair<std::string, std::string>> one_label(logs.begin(), logs.begin() + 3);
  for (auto& [_, label] : one_label) label = "normal";
  CHECK(code_of([&] { eval_log_clustering(one_label, 1, ex, emb); }) == Errc::kDegenerateLabels);
}

TEST_CASE("service handlers") {
  auto& s = small();
  service::Service svc(s.kb, s.config, s.providers);

  const auto h = svc.handle_health();
  CHECK(h.status == 200);
  CHECK(h.body["tickets"] == s.kb->size());
  CHECK(h.body["indexed"] == true);

  CHECK(svc.handle_query(R"({"description": "", "raw_log": "ERROR x: y"})").status == 400);
  CHECK(svc.handle_query("not json").status == 400);
  CHECK(svc.handle_query(R"({"description": "d", "raw_log": "  "})").status == 400);

  const auto& t = s.split.test[0];
  const json q = json_io::to_json(query_for(t));
  const auto r = svc.handle_query(q.dump());
  REQUIRE(r.status == 200);
  const auto direct = pipeline::answer_incident(*s.kb, query_for(t), s.config, s.providers);
  CHECK(r.body["plan"]["plan_text"] == direct.plan.plan_text);
  CHECK(r.body["verdict"]["chosen"] == direct.verdict.chosen);
  CHECK(r.body["plan"]["plan_text"].get<std::string>().starts_with("Closest prior incident "));

  CHECK(svc.handle_bug("nope").status == 404);
  const auto b = svc.handle_bug(s.kb->ids()[0]);
  CHECK(b.status == 200);
  CHECK(b.body["description"]["incident_text"] == s.kb->description(s.kb->ids()[0]).incident_text);

  json ticket = q;
  ticket["id"] = "NEW-1";
  CHECK(svc.handle_ticket(ticket.dump()).status == 202);
  ticket["id"] = s.kb->ids()[0];
  CHECK(svc.handle_ticket(ticket.dump()).status == 409);
  CHECK(svc.staged().size() == 1);
  CHECK(s.kb->size() == s.split.build.size());
}

TEST_CASE("service over http") {
  auto& s = small();
  service::Service svc(s.kb, s.config, s.providers);
  const int port = svc.bind("127.0.0.1", 0);
  std::thread th([&] { svc.listen(); });
  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto bad = cli.Post("/query", R"({"description": ""})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto missing = cli.Get("/bugs/NOPE");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  const json q = json_io::to_json(query_for(s.split.test[1]));
  auto ok = cli.Post("/query", q.dump(), "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(json::parse(ok->body)["verdict"]["chosen"] ==
        pipeline::answer_incident(*s.kb, query_for(s.split.test[1]), s.config, s.providers).verdict.chosen);
  svc.stop();
  th.join();
}

TEST_CASE("http status mapping") {
  CHECK(service::http_status_for(Error(Errc::kInvalidArgument, "x")) == 400);
  CHECK(service::http_status_for(Error(Errc::kEmptyLog, "x")) == 400);
  CHECK(service::http_status_for(Error(Errc::kUnknownId, "x")) == 404);
  CHECK(service::http_status_for(Error(Errc::kProviderUnavailable, "x")) == 503);
  CHECK(service::http_status_for(Error(Errc::kCorruptStore, "x")) == 500);
  CHECK(service::http_status_for(std::runtime_error("x")) == 500);
}

TEST_CASE("config parsing") {
  testing::TempDir dir("cfg");
  {
    std::ofstream(dir.path() / "prompts.json") << R"({"judge_instruction": "Pick one.", "generator_template": "{bug_id}: {resolution}"})";
    std::ofstream(dir.path() / "prices.json") << R"({"fallback": {"input_per_token": 1e-6, "output_per_token": 2e-6},
                                                    "providers": {"openai-chat:gpt-4o": {"input_per_token": 5e-6, "output_per_token": 1.5e-5}}})";
    std::ofstream(dir.path() / "arca.json") << R"({
      "seed": 11,
      "embedding": {"provider": "offline", "dimension": 256},
      "judge": {"provider": "remote", "model": "gpt-4o", "base_url": "http://localhost:9/v1"},
      "index": {"clusters": 12},
      "pipeline": {"k": 200, "retain_fraction": 0.5, "digest": {"char_budget": 4000}},
      "prompts": "prompts.json",
      "prices": "prices.json",
      "eval": {"k_values": [100, 300], "repeats": 3},
      "service": {"port": 9090}
    })";
  }
  const auto c = config::load(dir.path() / "arca.json");
  CHECK(c.seed == 11);
  CHECK(c.dimension == 256);
  CHECK(c.clusters == 12);
  CHECK(c.judge.provider == "remote");
  CHECK(c.judge.endpoint.model == "gpt-4o");
  CHECK(c.pipeline.k == 200);
  CHECK(c.pipeline.retain_fraction == 0.5);
  CHECK(c.pipeline.digest.char_budget == 4000);
  CHECK(c.pipeline.prompts.judge_instruction == "Pick one.");
  CHECK(c.pipeline.prompts.generator_template == "{bug_id}: {resolution}");
  CHECK_FALSE(c.pipeline.prompts.cot_exemplars.empty());
  CHECK(c.pipeline.prices.price_for("openai-chat:gpt-4o").output_per_token == 1.5e-5);
  CHECK(c.pipeline.prices.price_for("other").input_per_token == 1e-6);
  CHECK(c.k_values == std::vector<std::size_t>{100, 300});
  CHECK(c.repeats == 3);
  CHECK(c.port == 9090);
  const auto p = config::make_providers(c);
  CHECK(p.judge != nullptr);
  CHECK(p.generator == nullptr);
  CHECK(p.embedder->dimension() == 256);

  CHECK(code_of([] { config::from_json(json{{"judge", {{"provider", "magic"}}}}); }) == Errc::kConfig);
  CHECK(code_of([] { config::from_json(json{{"pipeline", {{"retain_fraction", 2.0}}}}); }) == Errc::kConfig);
  CHECK(code_of([] { config::from_json(json{{"pipeline", {{"k", "many"}}}}); }) == Errc::kConfig);
  CHECK(code_of([&] { config::load(dir.path() / "missing.json"); }) == Errc::kConfig);
}
