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

#include "arca/config.hpp"

#include <fstream>
#include <sstream>

#include "arca/error.hpp"
#include "arca/logproc.hpp"

namespace arca::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw Error(Errc::kConfig, "cannot read " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(Errc::kConfig, p.string() + ": " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::kConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

ProviderSpec provider_from_json(const json& j, std::string default_model) {
  ProviderSpec s;
  s.endpoint.model = std::move(default_model);
  if (j.is_string()) {
    s.provider = j.get<std::string>();
  } else if (j.is_object()) {
    read(j, "provider", s.provider);
    read(j, "base_url", s.endpoint.base_url);
    read(j, "model", s.endpoint.model);
    read(j, "api_key_env", s.endpoint.api_key_env);
    read(j, "max_attempts", s.endpoint.max_attempts);
    int backoff_ms = static_cast<int>(s.endpoint.backoff.count());
    read(j, "backoff_ms", backoff_ms);
    s.endpoint.backoff = std::chrono::milliseconds(backoff_ms);
    int timeout_s = static_cast<int>(s.endpoint.timeout.count());
    read(j, "timeout_s", timeout_s);
    s.endpoint.timeout = std::chrono::seconds(timeout_s);
  } else if (!j.is_null()) {
    throw Error(Errc::kConfig, "provider entry must be a string or an object");
  }
  if (s.provider != "offline" && s.provider != "remote") {
    throw Error(Errc::kConfig, "unknown provider '" + s.provider + "' (expected offline or remote)");
  }
  if (s.endpoint.max_attempts < 1) throw Error(Errc::kConfig, "max_attempts must be >= 1");
  return s;
}

const json& section(const json& j, const char* key) {
  static const json kEmpty = json::object();
  if (!j.contains(key) || j[key].is_null()) return kEmpty;
  if (!j[key].is_object()) throw Error(Errc::kConfig, std::string("config section '") + key + "' must be an object");
  return j[key];
}

}  // namespace

pipeline::Prompts prompts_from_json(const json& j) {
  pipeline::Prompts p = pipeline::Prompts::defaults();
  read(j, "log_extraction", p.log_extraction);
  read(j, "judge_instruction", p.judge_instruction);
  read(j, "cot_exemplars", p.cot_exemplars);
  read(j, "generator_template", p.generator_template);
  return p;
}

json to_json(const pipeline::Prompts& p) {
  return {{"log_extraction", p.log_extraction},
          {"judge_instruction", p.judge_instruction},
          {"cot_exemplars", p.cot_exemplars},
          {"generator_template", p.generator_template}};
}

pipeline::PriceTable prices_from_json(const json& j) {
  pipeline::PriceTable t;
  auto price = [](const json& e) {
    pipeline::Price p;
    read(e, "input_per_token", p.input_per_token);
    read(e, "output_per_token", p.output_per_token);
    if (p.input_per_token < 0 || p.output_per_token < 0) throw Error(Errc::kConfig, "prices must be >= 0");
    return p;
  };
  if (j.contains("fallback")) t.fallback = price(j["fallback"]);
  if (j.contains("providers")) {
    for (const auto& [tag, e] : j["providers"].items()) t.by_provider[tag] = price(e);
  }
  return t;
}

AppConfig from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(Errc::kConfig, "config must be a JSON object");
  AppConfig c;
  read(j, "seed", c.seed);

  const json& emb = section(j, "embedding");
  read(emb, "dimension", c.dimension);
  c.embedding = provider_from_json(emb, "text-embedding-3-large");
  if (c.dimension < 8) throw Error(Errc::kConfig, "embedding dimension must be >= 8");

  c.extractor = provider_from_json(j.value("extractor", json()), "gpt-4o");
  c.judge = provider_from_json(j.value("judge", json()), "gpt-4o");
  c.generator = provider_from_json(j.value("generator", json()), "gpt-4o");
  read(section(j, "judge_options"), "temperature", c.judge_temperature);

  const json& idx = section(j, "index");
  read(idx, "clusters", c.clusters);

  const json& p = section(j, "pipeline");
  auto& pc = c.pipeline;
  read(p, "k", pc.k);
  read(p, "nprobe", pc.nprobe);
  read(p, "retain_fraction", pc.retain_fraction);
  read(p, "token_budget", pc.token_budget);
  read(p, "grid_step", pc.grid_step);
  read(p, "chars_per_token", pc.chars_per_token);
  const json& d = section(p, "digest");
  read(d, "char_budget", pc.digest.char_budget);
  read(d, "rare_templates", pc.digest.rare_templates);
  read(d, "max_line_chars", pc.digest.max_line_chars);
  if (pc.k < 1) throw Error(Errc::kConfig, "pipeline.k must be >= 1");
  if (!(pc.retain_fraction > 0.0) || pc.retain_fraction > 1.0) {
    throw Error(Errc::kConfig, "pipeline.retain_fraction must be in (0, 1]");
  }
  if (!(pc.grid_step > 0.0)) throw Error(Errc::kConfig, "pipeline.grid_step must be positive");
  if (!(pc.chars_per_token > 0.0)) throw Error(Errc::kConfig, "pipeline.chars_per_token must be positive");

  if (j.contains("prompts")) {
    pc.prompts = j["prompts"].is_string() ? prompts_from_json(read_json_file(base_dir / j["prompts"].get<std::string>()))
                                          : prompts_from_json(j["prompts"]);
  }
  if (j.contains("prices")) {
    pc.prices = j["prices"].is_string() ? prices_from_json(read_json_file(base_dir / j["prices"].get<std::string>()))
                                        : prices_from_json(j["prices"]);
  }

  const json& corp = section(j, "corpus");
  read(corp, "configs_per_category", c.configs_per_category);
  const json& ev = section(j, "eval");
  read(ev, "build", c.build_n);
  read(ev, "test", c.test_n);
  read(ev, "k_values", c.k_values);
  read(ev, "repeats", c.repeats);
  if (c.repeats < 1) throw Error(Errc::kConfig, "eval.repeats must be >= 1");

  const json& svc = section(j, "service");
  read(svc, "host", c.host);
  read(svc, "port", c.port);
  return c;
}

AppConfig load(const fs::path& path) { return from_json(read_json_file(path), path.parent_path()); }

pipeline::Providers make_providers(const AppConfig& c) {
  pipeline::Providers p;
  if (c.embedding.provider == "remote") {
    p.embedder = std::make_shared<embed::RemoteEmbeddingProvider>(c.embedding.endpoint, c.dimension);
  } else {
    p.embedder = std::make_shared<embed::OfflineEmbeddingProvider>(c.dimension, c.seed);
  }
  if (c.extractor.provider == "remote") {
    p.extractor = std::make_shared<logproc::LlmFeatureExtractor>(
        std::make_shared<OpenAiChatModel>(c.extractor.endpoint), c.pipeline.prompts.log_extraction);
  } else {
    p.extractor = std::make_shared<logproc::RuleBasedExtractor>();
  }
  if (c.judge.provider == "remote") p.judge = std::make_shared<OpenAiChatModel>(c.judge.endpoint, c.judge_temperature);
  if (c.generator.provider == "remote") p.generator = std::make_shared<OpenAiChatModel>(c.generator.endpoint);
  return p;
}

}  // namespace arca::config
