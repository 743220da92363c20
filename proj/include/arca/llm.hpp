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

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace arca {

struct Completion {
  std::string text;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
};

/// Text-in/text-out model. Implementations must be safe for concurrent use.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual Completion complete(const std::string& prompt) const = 0;
  virtual std::string tag() const = 0;
  virtual bool remote() const { return true; }
};

/// Location and credentials of an OpenAI-compatible HTTP API.
struct RemoteEndpoint {
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};
  std::chrono::seconds timeout{120};
};

/// POST a JSON body to base_url + path. Connection failures, 429 and 5xx are
/// retried with exponential backoff up to max_attempts; anything else fails
/// at once. Throws ProviderUnavailable.
nlohmann::json post_json(const RemoteEndpoint& endpoint, std::string_view path,
                         const nlohmann::json& body);

/// Chat-completions client; one user message per call.
class OpenAiChatModel final : public LanguageModel {
 public:
  explicit OpenAiChatModel(RemoteEndpoint endpoint, double temperature = 0.0);
  Completion complete(const std::string& prompt) const override;
  std::string tag() const override { return "openai-chat:" + endpoint_.model; }

 private:
  RemoteEndpoint endpoint_;
  double temperature_;
};

/// Counts tokens for budgets and cost accounting.
using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// ceil(bytes / chars_per_token).
std::size_t estimate_tokens(std::string_view text, double chars_per_token = 4.0);

TokenEstimator default_token_estimator(double chars_per_token = 4.0);

}  // namespace arca
