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

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "arca/error.hpp"
#include "arca/llm.hpp"

namespace arca::testing {

// Scripted model: replies come from a callback; every prompt is recorded.
class FakeModel final : public LanguageModel {
 public:
  explicit FakeModel(std::function<std::string(const std::string&, int)> reply, std::string tag = "fake")
      : reply_(std::move(reply)), tag_(std::move(tag)) {}

  Completion complete(const std::string& prompt) const override {
    int n;
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(prompt);
      n = static_cast<int>(prompts_.size());
    }
    return {reply_(prompt, n), 0, 0};
  }
  std::string tag() const override { return tag_; }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::size_t calls() const { return prompts().size(); }

 private:
  std::function<std::string(const std::string&, int)> reply_;
  std::string tag_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> prompts_;
};

inline std::shared_ptr<FakeModel> failing_model() {
  return std::make_shared<FakeModel>([](const std::string&, int) -> std::string {
    throw Error(Errc::kProviderUnavailable, "connection refused");
  });
}

}  // namespace arca::testing
