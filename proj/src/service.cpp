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

#include "arca/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "arca/error.hpp"
#include "arca/json_io.hpp"

namespace arca::service {

using nlohmann::json;

struct Service::Server {
  httplib::Server http;
};

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const json::exception*>(&e)) return 400;
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 500;
  switch (err->code()) {
    case Errc::kInvalidArgument:
    case Errc::kNonFiniteInput:
    case Errc::kAllSeriesEmpty:
    case Errc::kEmptyLog:
    case Errc::kEmptyText:
    case Errc::kZeroVector:
    case Errc::kBudgetTooSmall:
      return 400;
    case Errc::kUnknownId:
      return 404;
    case Errc::kProviderUnavailable:
    case Errc::kExtractorFailure:
      return 503;
    default:
      return 500;
  }
}

namespace {

Response error_response(const std::exception& e) {
  json body = {{"error", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    body["code"] = std::string(errc_name(err->code()));
    if (!err->stage().empty()) body["stage"] = err->stage();
  }
  return {http_status_for(e), std::move(body)};
}

}  // namespace

Service::Service(std::shared_ptr<const kb::KnowledgeBase> kb, pipeline::PipelineConfig config,
                 pipeline::Providers providers)
    : kb_(std::move(kb)), config_(std::move(config)), providers_(std::move(providers)) {
  if (!kb_) throw Error(Errc::kInvalidArgument, "service needs a knowledge base");
}

Service::~Service() { stop(); }

Response Service::handle_query(const std::string& body) const {
  try {
    const auto q = json_io::query_from_json(json::parse(body));
    return {200, json_io::to_json(pipeline::answer_incident(*kb_, q, config_, providers_))};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

Response Service::handle_ticket(const std::string& body) {
  try {
    json j = json::parse(body);
    const auto q = json_io::query_from_json(j);
    json staged = json_io::to_json(q);
    if (j.contains("resolution_text")) staged["resolution_text"] = j["resolution_text"].get<std::string>();
    if (j.contains("id")) {
      const auto id = j["id"].get<std::string>();
      if (kb_->contains(id)) throw Error(Errc::kDuplicateId, "bug " + id + " already exists");
      staged["id"] = id;
    }
    std::lock_guard lock(staged_mu_);
    staged_.push_back(std::move(staged));
    return {202, {{"staged", staged_.size()}}};
  } catch (const Error& e) {
    if (e.code() == Errc::kDuplicateId) return {409, {{"error", e.what()}, {"code", "DuplicateId"}}};
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

Response Service::handle_bug(const std::string& id) const {
  if (!kb_->contains(id)) return {404, {{"error", "unknown bug id " + id}, {"code", "UnknownId"}}};
  json j = {{"id", id}, {"description", json_io::to_json(kb_->description(id))}};
  if (const auto* t = kb_->telemetry(id)) {
    j["telemetry_vector"] = std::vector<double>(t->components.begin(), t->components.end());
  } else {
    j["telemetry_vector"] = nullptr;
  }
  return {200, std::move(j)};
}

Response Service::handle_health() const {
  json j = {{"status", "ok"},
            {"tickets", kb_->size()},
            {"telemetry", kb_->telemetry_count()},
            {"dimension", kb_->dimension()},
            {"indexed", kb_->has_index() && !kb_->index_stale()}};
  j["clusters"] = kb_->has_index() ? kb_->index().clusters() : 0;
  std::lock_guard lock(staged_mu_);
  j["staged"] = staged_.size();
  return {200, std::move(j)};
}

std::vector<json> Service::staged() const {
  std::lock_guard lock(staged_mu_);
  return staged_;
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http.Post("/query", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_query(req.body));
  });
  http.Post("/tickets", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_ticket(req.body));
  });
  http.Get(R"(/bugs/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_bug(req.matches[1]));
  });
  http.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, handle_health()); });

  const int bound = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::kIo, "cannot bind " + host + ":" + std::to_string(port));
  spdlog::info("serving on {}:{}", host, bound);
  return bound;
}

void Service::listen() {
  if (!server_) throw Error(Errc::kInvalidArgument, "bind() before listen()");
  server_->http.listen_after_bind();
}

void Service::stop() {
  if (server_) server_->http.stop();
}

}  // namespace arca::service
