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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "arca/config.hpp"
#include "arca/corpus.hpp"
#include "arca/error.hpp"
#include "arca/eval.hpp"
#include "arca/json_io.hpp"
#include "arca/service.hpp"

namespace fs = std::filesystem;
using namespace arca;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw Error(Errc::kIo, "cannot write " + p.string());
  os << j.dump(2) << "\n";
}

config::AppConfig load_config(const std::string& path) {
  return path.empty() ? config::AppConfig{} : config::load(path);
}

void print_eval(const eval::EvalReport& r) {
  std::printf("%6s %10s %10s %12s %10s\n", "K", "triage", "system", "cost/query", "sec/query");
  for (const auto& p : r.per_k) {
    std::printf("%6zu %10.3f %10.3f %12.6f %10.4f\n", p.k, p.triage_accuracy, p.system_accuracy, p.mean_cost,
                p.mean_seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arca: incident triage and mitigation over a bug-ticket knowledge base"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* gen = app.add_subcommand("gen-corpus", "simulate fault-injection runs and write a ticket corpus");
  std::string gen_out;
  std::optional<int> gen_n;
  gen->add_option("-o,--out", gen_out, "output directory")->required();
  gen->add_option("-n,--configs", gen_n, "configs per fault category");

  auto* build = app.add_subcommand("build", "build a knowledge base from a corpus directory");
  std::string build_corpus, build_out, build_holdout;
  build->add_option("--corpus", build_corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("-o,--out", build_out, "knowledge base directory")->required();
  std::optional<std::size_t> split_build, split_test;
  build->add_option("--build-size", split_build, "tickets on the build side of the split");
  build->add_option("--test-size", split_test, "held-out tickets");
  build->add_option("--holdout", build_holdout,
                    "split the corpus, build from the build side and write held-out ticket ids here");

  auto* query = app.add_subcommand("query", "answer one incident");
  std::string q_kb, q_ticket, q_file;
  bool q_json = false;
  query->add_option("--kb", q_kb, "knowledge base directory")->required()->check(CLI::ExistingDirectory);
  auto* q_ticket_opt = query->add_option("--ticket", q_ticket, "ticket directory (description.txt, log.txt, telemetry.csv)");
  query->add_option("--query", q_file, "IncidentQuery JSON file")->excludes(q_ticket_opt);
  query->add_flag("--json", q_json, "print the full JSON result");

  auto* ev = app.add_subcommand("eval", "split a corpus, build, and measure triage and system accuracy");
  std::string ev_corpus, ev_json;
  std::vector<std::size_t> ev_ks;
  std::optional<int> ev_repeats;
  bool ev_modalities = false;
  ev->add_option("--corpus", ev_corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--build-size", split_build, "tickets on the build side of the split");
  ev->add_option("--test-size", split_test, "held-out tickets");
  ev->add_option("--k", ev_ks, "triage sizes to report");
  ev->add_option("--repeats", ev_repeats, "repeats per query");
  ev->add_flag("--modalities", ev_modalities, "also compare telemetry-only, log-only and combined");
  ev->add_option("--json", ev_json, "write the report as JSON");

  auto* lc = app.add_subcommand("log-cluster", "leave-one-out kNN anomaly detection on labeled logs");
  std::string lc_input;
  int lc_per_label = 50;
  std::size_t lc_k = 5;
  lc->add_option("--input", lc_input, "NDJSON of {\"log\", \"label\"}; a synthetic fixture when omitted");
  lc->add_option("--per-label", lc_per_label, "synthetic logs per label");
  lc->add_option("-k,--neighbors", lc_k, "neighbours in the vote");

  auto* serve = app.add_subcommand("serve", "serve the HTTP API over a knowledge base");
  std::string s_kb;
  std::optional<std::string> s_host;
  std::optional<int> s_port;
  serve->add_option("--kb", s_kb, "knowledge base directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--host", s_host);
  serve->add_option("--port", s_port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    config::AppConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (split_build) cfg.build_n = *split_build;
    if (split_test) cfg.test_n = *split_test;

    if (*gen) {
      const int n = gen_n.value_or(cfg.configs_per_category);
      const auto tickets = corpus::generate_corpus(n, cfg.seed);
      corpus::write_corpus(gen_out, tickets);
      std::printf("wrote %zu tickets to %s\n", tickets.size(), gen_out.c_str());
      return 0;
    }

    const auto providers = config::make_providers(cfg);

    if (*build) {
      auto tickets = corpus::read_corpus(build_corpus);
      if (!build_holdout.empty()) {
        auto split = eval::split_corpus(tickets, cfg.build_n, cfg.test_n, cfg.seed);
        std::ofstream os(build_holdout);
        for (const auto& t : split.test) os << t.id << "\n";
        tickets = std::move(split.build);
      }
      const auto kb = eval::build_kb(tickets, cfg.pipeline, providers, cfg.clusters, cfg.seed);
      kb.save(build_out);
      std::printf("indexed %zu tickets (%zu with telemetry) into %zu clusters at %s\n", kb.size(),
                  kb.telemetry_count(), kb.index().clusters(), build_out.c_str());
      return 0;
    }

    if (*query) {
      const auto kb = kb::KnowledgeBase::load(q_kb);
      pipeline::IncidentQuery q;
      if (!q_ticket.empty()) {
        q = eval::query_for(corpus::read_ticket(q_ticket));
      } else if (!q_file.empty()) {
        q = json_io::query_from_json(json::parse(slurp(q_file)));
      } else {
        throw Error(Errc::kConfig, "query needs --ticket or --query");
      }
      const auto r = pipeline::answer_incident(kb, q, cfg.pipeline, providers);
      if (q_json) {
        std::cout << json_io::to_json(r).dump(2) << "\n";
      } else {
        std::printf("closest bug: %s\n\n%s\n\n%s\n", r.verdict.chosen.c_str(), r.verdict.rationale.c_str(),
                    r.plan.plan_text.c_str());
      }
      return 0;
    }

    if (*ev) {
      const auto tickets = corpus::read_corpus(ev_corpus);
      const auto split = eval::split_corpus(tickets, cfg.build_n, cfg.test_n, cfg.seed);
      const auto kb = eval::build_kb(split.build, cfg.pipeline, providers, cfg.clusters, cfg.seed);
      const auto report = eval::run_eval(kb, split.test, ev_ks.empty() ? cfg.k_values : ev_ks, cfg.pipeline,
                                         providers, ev_repeats.value_or(cfg.repeats));
      print_eval(report);
      json out = json_io::to_json(report);
      if (ev_modalities) {
        const auto rows = eval::eval_modalities(kb, split.test, cfg.pipeline.k, cfg.pipeline, providers);
        std::printf("\n%-16s %10s %12s %10s\n", "mode", "accuracy", "cost/query", "sec/query");
        for (const auto& r : rows) {
          std::printf("%-16s %10.3f %12.6f %10.4f\n", r.mode.c_str(), r.accuracy, r.mean_cost, r.mean_seconds);
        }
        out["modalities"] = json_io::to_json(rows);
      }
      if (!ev_json.empty()) write_json(ev_json, out);
      return 0;
    }

    if (*lc) {
      std::vector<std::pair<std::string, std::string>> logs;
      if (lc_input.empty()) {
        logs = corpus::generate_labeled_logs(lc_per_label, cfg.seed);
      } else {
        std::istringstream in(slurp(lc_input));
        for (std::string line; std::getline(in, line);) {
          if (line.empty()) continue;
          const auto j = json::parse(line);
          logs.emplace_back(j.at("log").get<std::string>(), j.at("label").get<std::string>());
        }
      }
      const auto r = eval::eval_log_clustering(logs, lc_k, *providers.extractor, *providers.embedder, "anomaly",
                                               cfg.pipeline.digest);
      std::printf("f1 %.4f precision %.4f recall %.4f (tp %zu fp %zu fn %zu tn %zu)\n", r.f1, r.precision, r.recall,
                  r.tp, r.fp, r.fn, r.tn);
      return 0;
    }

    if (*serve) {
      auto kb = std::make_shared<const kb::KnowledgeBase>(kb::KnowledgeBase::load(s_kb));
      service::Service svc(kb, cfg.pipeline, providers);
      svc.bind(s_host.value_or(cfg.host), s_port.value_or(cfg.port));
      svc.listen();
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error%s%s: %s\n", e.stage().empty() ? "" : " in ", e.stage().c_str(), e.what());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
