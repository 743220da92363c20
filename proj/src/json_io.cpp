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

#include "arca/json_io.hpp"

#include "arca/error.hpp"

namespace arca::json_io {

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw Error(Errc::kInvalidArgument, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::kInvalidArgument, std::string("field '") + name + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return field<T>(j, name);
}

}  // namespace

json to_json(const kb::BugDescription& d) {
  json j = {{"incident_text", d.incident_text}};
  if (d.resolution_text) j["resolution_text"] = *d.resolution_text;
  if (d.triage_note) j["triage_note"] = *d.triage_note;
  if (d.labels) j["labels"] = {{"fault_category", d.labels->fault_category}, {"closest_bug_id", d.labels->closest_bug_id}};
  return j;
}

kb::BugDescription description_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "description must be an object");
  kb::BugDescription d;
  d.incident_text = field<std::string>(j, "incident_text");
  d.resolution_text = optional_field<std::string>(j, "resolution_text");
  d.triage_note = optional_field<std::string>(j, "triage_note");
  if (j.contains("labels") && !j["labels"].is_null()) {
    const json& l = j["labels"];
    d.labels = kb::Labels{field<std::string>(l, "fault_category"), field<std::string>(l, "closest_bug_id")};
  }
  return d;
}

pipeline::IncidentQuery query_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "query must be a JSON object");
  pipeline::IncidentQuery q;
  q.description = optional_field<std::string>(j, "description").value_or("");
  q.raw_log = optional_field<std::string>(j, "raw_log").value_or("");
  if (j.contains("telemetry") && !j["telemetry"].is_null()) {
    q.telemetry = telemetry::parse_json(j["telemetry"]);
  } else if (const auto csv = optional_field<std::string>(j, "telemetry_csv")) {
    q.telemetry = telemetry::parse_csv(*csv);
  }
  pipeline::validate(q);
  return q;
}

json to_json(const pipeline::IncidentQuery& q) {
  return {{"description", q.description}, {"raw_log", q.raw_log}, {"telemetry", telemetry::to_json(q.telemetry)}};
}

json to_json(const pipeline::TriageSet& ts) {
  json c = json::array();
  for (const auto& x : ts.candidates) {
    json e = {{"id", x.id}, {"log_score", x.log_score}};
    e["telemetry_score"] = x.telemetry_score ? json(*x.telemetry_score) : json(nullptr);
    c.push_back(std::move(e));
  }
  return {{"stage", std::string(pipeline::stage_name(ts.stage))}, {"candidates", std::move(c)}};
}

json to_json(const pipeline::JudgeVerdict& v) {
  return {{"chosen", v.chosen}, {"rationale", v.rationale}, {"candidates_considered", v.candidates_considered}};
}

json to_json(const pipeline::ProvenanceEntry& p) {
  json j = {{"stage", p.stage},          {"provider", p.provider_tag},         {"remote", p.remote},
            {"tokens_in", p.tokens_in}, {"tokens_out", p.tokens_out}, {"wall_seconds", p.wall_seconds}};
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

json to_json(const pipeline::MitigationPlan& p) {
  json prov = json::array();
  for (const auto& e : p.provenance) prov.push_back(to_json(e));
  return {{"plan_text", p.plan_text}, {"source_bug", p.source_bug}, {"provenance", std::move(prov)}};
}

json to_json(const pipeline::CostReport& c) {
  json stages = json::object();
  for (const auto& [name, s] : c.stage_seconds) stages[name] = s;
  return {{"tokens_in", c.tokens_in},
          {"tokens_out", c.tokens_out},
          {"estimated_cost", c.estimated_cost},
          {"stage_seconds", std::move(stages)},
          {"total_seconds", c.total_seconds}};
}

json to_json(const pipeline::QueryResult& r) {
  return {{"plan", to_json(r.plan)},
          {"verdict", to_json(r.verdict)},
          {"triage", to_json(r.triage)},
          {"log_only_candidates", r.log_only_count},
          {"prompt", {{"tokens", r.prompt_tokens}, {"candidates", r.prompt_candidates}}},
          {"cost", to_json(r.cost)}};
}

json to_json(const eval::EvalReport& r) {
  json per_k = json::array();
  for (const auto& p : r.per_k) {
    per_k.push_back({{"k", p.k},
                     {"triage_accuracy", p.triage_accuracy},
                     {"system_accuracy", p.system_accuracy},
                     {"mean_cost", p.mean_cost},
                     {"mean_seconds", p.mean_seconds}});
  }
  return {{"triage_accuracy", r.triage_accuracy},
          {"system_accuracy", r.system_accuracy},
          {"repeats", r.repeats},
          {"per_k", std::move(per_k)}};
}

json to_json(const eval::ClusteringReport& r) {
  return {{"f1", r.f1},        {"precision", r.precision}, {"recall", r.recall},
          {"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}}}};
}

json to_json(const std::vector<eval::ModalityRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"mode", r.mode}, {"accuracy", r.accuracy}, {"mean_cost", r.mean_cost}, {"mean_seconds", r.mean_seconds}});
  }
  return out;
}

}  // namespace arca::json_io
