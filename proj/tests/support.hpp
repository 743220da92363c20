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

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "arca/ann.hpp"
#include "arca/embed.hpp"

namespace arca::testing {

inline std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> nd;
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = nd(rng);
    norm += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

// Texts drawn from a handful of topics so that clusters exist but overlap.
inline std::vector<std::string> topic_texts(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> kTopics = {
      {"memory", "heap", "leak", "oom", "allocation", "rss", "gc", "swap"},
      {"latency", "timeout", "slow", "upstream", "retry", "delay", "deadline", "socket"},
      {"cpu", "throttle", "queue", "overload", "saturated", "quota", "load", "worker"},
      {"disk", "io", "fsync", "block", "write", "read", "inode", "volume"},
      {"auth", "token", "expired", "denied", "login", "session", "cookie", "jwt"},
      {"database", "query", "lock", "deadlock", "index", "replica", "commit", "rollback"}};
  static const std::vector<std::string> kCommon = {"service", "error", "request", "pod", "node", "cluster",
                                                   "warning", "user", "api", "handler"};
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& topic = kTopics[rng() % kTopics.size()];
    const auto& second = kTopics[rng() % kTopics.size()];
    std::string s;
    const int words = 8 + static_cast<int>(rng() % 10);
    for (int w = 0; w < words; ++w) {
      const auto r = rng() % 10;
      if (r < 6) s += topic[rng() % topic.size()];
      else if (r < 8) s += kCommon[rng() % kCommon.size()];
      else if (r < 9) s += second[rng() % second.size()];
      else s += "tok" + std::to_string(rng() % 5000);
      s += ' ';
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline ann::VectorSet embed_set(const std::vector<std::string>& texts, std::size_t dim, std::uint64_t seed) {
  ann::VectorSet vs;
  vs.dim = dim;
  const embed::OfflineEmbeddingProvider p(dim, seed);
  const auto embs = embed::embed_batch(texts, p);
  char id[32];
  for (std::size_t i = 0; i < embs.size(); ++i) {
    std::snprintf(id, sizeof id, "doc-%06zu", i);
    vs.append(id, embs[i].view());
  }
  return vs;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("arca-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace arca::testing
