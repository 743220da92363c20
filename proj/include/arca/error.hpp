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

#include <stdexcept>
#include <string>
#include <string_view>

namespace arca {

enum class Errc {
  kInvalidArgument,
  kAllSeriesEmpty,
  kNonFiniteInput,
  kZeroVector,
  kEmptyLog,
  kExtractorFailure,
  kEmptyText,
  kProviderUnavailable,
  kDimensionMismatch,
  kDuplicateId,
  kUnknownId,
  kCorruptStore,
  kVersionMismatch,
  kEmptyTelemetryStore,
  kTooFewVectors,
  kEmptyIndex,
  kNoIndex,
  kStaleIndex,
  kBudgetTooSmall,
  kUnparseableVerdict,
  kMissingResolution,
  kInfeasibleSplit,
  kDegenerateLabels,
  kConfig,
  kIo,
};

std::string_view errc_name(Errc code);

/// Process exit code for the CLI: 2 config, 3 data, 4 provider.
int exit_code_for(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

  // Stage that raised the error inside answer_incident, empty elsewhere.
  const std::string& stage() const noexcept { return stage_; }
  Error with_stage(std::string stage) const {
    Error copy = *this;
    copy.stage_ = std::move(stage);
    return copy;
  }

 private:
  Errc code_;
  std::string stage_;
};

}  // namespace arca
