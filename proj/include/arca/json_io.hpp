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

#include <json.hpp>

#include "arca/eval.hpp"
#include "arca/kb.hpp"
#include "arca/pipeline.hpp"

// JSON shapes shared by the store, the CLI and the HTTP service.
namespace arca::json_io {

using nlohmann::json;

json to_json(const kb::BugDescription& d);
/// Throws InvalidArgument on a missing or mistyped field.
kb::BugDescription description_from_json(const json& j);

/// {"description", "raw_log", "telemetry": [{timestamp, counter, value}] or
/// "telemetry_csv": "..."}. Throws InvalidArgument.
pipeline::IncidentQuery query_from_json(const json& j);
json to_json(const pipeline::IncidentQuery& q);

json to_json(const pipeline::TriageSet& ts);
json to_json(const pipeline::JudgeVerdict& v);
json to_json(const pipeline::ProvenanceEntry& p);
json to_json(const pipeline::MitigationPlan& p);
json to_json(const pipeline::CostReport& c);
/// Plan, verdict, triage and cost in one object.
json to_json(const pipeline::QueryResult& r);

json to_json(const eval::EvalReport& r);
json to_json(const eval::ClusteringReport& r);
json to_json(const std::vector<eval::ModalityRow>& rows);

}  // namespace arca::json_io
