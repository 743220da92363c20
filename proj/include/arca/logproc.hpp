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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace arca {
class LanguageModel;
}

namespace arca::logproc {

enum class Level : std::uint8_t { kTrace, kDebug, kInfo, kWarn, kError, kFatal, kUnknown };

std::string_view level_name(Level level);

struct LogRecord {
  std::size_t line_no = 0;  // 1-based physical line
  std::optional<double> timestamp;
  Level level = Level::kUnknown;
  std::string source;
  std::string message;
};

struct LogTemplate {
  std::uint64_t template_id = 0;
  std::string pattern;
  std::size_t count = 0;
  std::vector<std::size_t> example_line_nos;  // at most 3
  Level max_level = Level::kUnknown;           // most severe known level seen
};

struct LogDigest {
  std::vector<std::string> distinguishing_lines;
  std::string error_summary;
  std::string inline_metrics_text;
  std::vector<std::pair<std::string, std::size_t>> template_histogram;

  friend bool operator==(const LogDigest&, const LogDigest&) = default;
};

struct DigestOptions {
  std::size_t char_budget = 8000;
  std::size_t rare_templates = 20;
  std::size_t max_line_chars = 240;
};

/// Replace invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view raw);

/// One record per non-blank physical line. Throws EmptyLog.
std::vector<LogRecord> parse_log(std::string_view raw);

/// Mask NUM/HEX/IP/UUID/PATH fields. Idempotent.
std::string mask_message(std::string_view message);

/// Merge records by masked pattern; sorted by descending count, then by
/// first occurrence.
std::vector<LogTemplate> templateize(std::span<const LogRecord> records);

/// Pluggable digest producer.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual LogDigest extract(std::span<const LogRecord> records,
                            std::span<const LogTemplate> templates,
                            const DigestOptions& options) const = 0;
  virtual std::string tag() const = 0;
  virtual bool remote() const { return false; }
};

/// Deterministic offline extractor: errors first, then the rarest templates,
/// then inline numeric content, then the template histogram.
class RuleBasedExtractor final : public FeatureExtractor {
 public:
  LogDigest extract(std::span<const LogRecord> records,
                    std::span<const LogTemplate> templates,
                    const DigestOptions& options) const override;
  std::string tag() const override { return "rule-based"; }
};

/// Sends the configured feature-extraction prompt plus the deduplicated log
/// to a language model; the reply becomes the distinguishing lines. Error
/// lines and the histogram are still computed locally. Throws
/// ExtractorFailure on any provider error.
class LlmFeatureExtractor final : public FeatureExtractor {
 public:
  LlmFeatureExtractor(std::shared_ptr<LanguageModel> model, std::string prompt,
                      std::size_t max_log_chars = 24000);
  LogDigest extract(std::span<const LogRecord> records,
                    std::span<const LogTemplate> templates,
                    const DigestOptions& options) const override;
  std::string tag() const override;
  bool remote() const override { return true; }

  std::string build_prompt(std::span<const LogRecord> records,
                           std::span<const LogTemplate> templates) const;

 private:
  std::shared_ptr<LanguageModel> model_;
  std::string prompt_;
  std::size_t max_log_chars_;
};

LogDigest extract_features(std::span<const LogRecord> records,
                           std::span<const LogTemplate> templates,
                           const FeatureExtractor& extractor,
                           const DigestOptions& options = {});

/// Canonical rendering: error summary, distinguishing lines, inline metrics,
/// histogram.
std::string digest_to_text(const LogDigest& d);

/// Text summary of key=value numeric fields found in the records, one line
/// per key. Empty when the log carries no such content.
std::string inline_metrics(std::span<const LogRecord> records);

struct ProcessedLog {
  LogDigest digest;
  std::string text;
  std::string extractor_tag;
  bool fell_back = false;  // remote extractor failed; rule-based used
};

/// parse -> templateize -> extract (falling back to the rule-based extractor
/// on ExtractorFailure) -> render.
ProcessedLog process_log(std::string_view raw, const FeatureExtractor& extractor,
                         const DigestOptions& options = {});

}  // namespace arca::logproc
