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

#include "arca/llm.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "arca/error.hpp"

namespace arca {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // may be empty
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(Errc::kConfig, "endpoint URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

nlohmann::json post_json(const RemoteEndpoint& endpoint, std::string_view path,
                         const nlohmann::json& body) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string payload = body.dump();
  const std::string full_path = url.path + std::string(path);
  const int attempts = std::max(1, endpoint.max_attempts);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(endpoint.backoff * (1 << (attempt - 1)));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      spdlog::debug("POST {}{} attempt {} failed: {}", url.origin, full_path, attempt + 1, last_error);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::kProviderUnavailable, std::string("malformed JSON reply: ") + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!transient_status(res->status)) break;
  }
  throw Error(Errc::kProviderUnavailable, endpoint.base_url + std::string(path) + ": " + last_error);
}

OpenAiChatModel::OpenAiChatModel(RemoteEndpoint endpoint, double temperature)
    : endpoint_(std::move(endpoint)), temperature_(temperature) {}

Completion OpenAiChatModel::complete(const std::string& prompt) const {
  const nlohmann::json body = {
      {"model", endpoint_.model},
      {"temperature", temperature_},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  const nlohmann::json reply = post_json(endpoint_, "/chat/completions", body);
  Completion out;
  try {
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProviderUnavailable, std::string("unexpected chat reply: ") + e.what());
  }
  const auto usage = reply.value("usage", nlohmann::json::object());
  out.tokens_in = usage.value("prompt_tokens", estimate_tokens(prompt));
  out.tokens_out = usage.value("completion_tokens", estimate_tokens(out.text));
  return out;
}

std::size_t estimate_tokens(std::string_view text, double chars_per_token) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / chars_per_token));
}

TokenEstimator default_token_estimator(double chars_per_token) {
  return [chars_per_token](std::string_view text) { return estimate_tokens(text, chars_per_token); };
}

}  // namespace arca
