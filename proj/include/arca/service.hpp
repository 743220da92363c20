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

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "arca/kb.hpp"
#include "arca/pipeline.hpp"

namespace arca::service {

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// HTTP front door over an immutable knowledge base:
///   POST /query      IncidentQuery JSON -> plan, verdict, triage, cost
///   POST /tickets    stage a new ticket (the store is not modified)
///   GET  /bugs/{id}  stored description and telemetry vector
///   GET  /health     store statistics
/// Handlers are callable directly for tests.
class Service {
 public:
  Service(std::shared_ptr<const kb::KnowledgeBase> kb, pipeline::PipelineConfig config,
          pipeline::Providers providers);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle_query(const std::string& body) const;
  Response handle_ticket(const std::string& body);
  Response handle_bug(const std::string& id) const;
  Response handle_health() const;

  std::vector<nlohmann::json> staged() const;

  /// Bind to host:port (0 picks a free port); returns the bound port.
  /// Throws Io when binding fails.
  int bind(const std::string& host, int port);
  /// Serve until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Server;
  std::shared_ptr<const kb::KnowledgeBase> kb_;
  pipeline::PipelineConfig config_;
  pipeline::Providers providers_;
  mutable std::mutex staged_mu_;
  std::vector<nlohmann::json> staged_;
  std::unique_ptr<Server> server_;
};

/// HTTP status for an error code: 400 for bad input, 404 for unknown ids,
/// 503 for provider failures, 500 otherwise.
int http_status_for(const std::exception& e);

}  // namespace arca::service
