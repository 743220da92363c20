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

#include "arca/error.hpp"

namespace arca {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kAllSeriesEmpty: return "AllSeriesEmpty";
    case Errc::kNonFiniteInput: return "NonFiniteInput";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kEmptyLog: return "EmptyLog";
    case Errc::kExtractorFailure: return "ExtractorFailure";
    case Errc::kEmptyText: return "EmptyText";
    case Errc::kProviderUnavailable: return "ProviderUnavailable";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kUnknownId: return "UnknownId";
    case Errc::kCorruptStore: return "CorruptStore";
    case Errc::kVersionMismatch: return "VersionMismatch";
    case Errc::kEmptyTelemetryStore: return "EmptyTelemetryStore";
    case Errc::kTooFewVectors: return "TooFewVectors";
    case Errc::kEmptyIndex: return "EmptyIndex";
    case Errc::kNoIndex: return "NoIndex";
    case Errc::kStaleIndex: return "StaleIndex";
    case Errc::kBudgetTooSmall: return "BudgetTooSmall";
    case Errc::kUnparseableVerdict: return "UnparseableVerdict";
    case Errc::kMissingResolution: return "MissingResolution";
    case Errc::kInfeasibleSplit: return "InfeasibleSplit";
    case Errc::kDegenerateLabels: return "DegenerateLabels";
    case Errc::kConfig: return "ConfigError";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kConfig:
    case Errc::kInvalidArgument:
      return 2;
    case Errc::kProviderUnavailable:
    case Errc::kExtractorFailure:
    case Errc::kUnparseableVerdict:
      return 4;
    default:
      return 3;
  }
}

}  // namespace arca
