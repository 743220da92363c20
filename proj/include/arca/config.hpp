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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arca/llm.hpp"
#include "arca/pipeline.hpp"

namespace arca::config {

/// Where a model or embedding comes from. provider is "offline" or "remote".
struct ProviderSpec {
  std::string provider = "offline";
  RemoteEndpoint endpoint;
};

struct AppConfig {
  std::uint64_t seed = 7;
  std::size_t dimension = embed::kDefaultDimension;
  std::size_t clusters = 0;  // 0 selects ceil(sqrt(N))

  ProviderSpec embedding;
  ProviderSpec extractor;  // "offline" means the rule-based extractor
  ProviderSpec judge;
  ProviderSpec generator;
  double judge_temperature = 0.0;

  pipeline::PipelineConfig pipeline;

  int configs_per_category = 100;
  std::size_t build_n = 700;
  std::size_t test_n = 100;
  std::vector<std::size_t> k_values = {100, 200, 300, 400};
  int repeats = 1;

  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Parse a config object. Relative prompt/price file paths resolve against
/// base_dir. Throws Config.
AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Throws Config (unreadable, malformed or invalid file).
AppConfig load(const std::filesystem::path& path);

pipeline::Prompts prompts_from_json(const nlohmann::json& j);
nlohmann::json to_json(const pipeline::Prompts& p);
pipeline::PriceTable prices_from_json(const nlohmann::json& j);

/// Instantiate the configured providers.
pipeline::Providers make_providers(const AppConfig& c);

}  // namespace arca::config
