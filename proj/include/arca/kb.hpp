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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "arca/ann.hpp"
#include "arca/embed.hpp"
#include "arca/telemetry.hpp"

namespace arca::kb {

using BugId = std::string;

inline constexpr int kFormatVersion = 1;

/// Evaluation labels carried by synthetic corpora.
struct Labels {
  std::string fault_category;
  BugId closest_bug_id;

  friend bool operator==(const Labels&, const Labels&) = default;
};

struct BugDescription {
  std::string incident_text;                   // first post
  std::optional<std::string> resolution_text;  // last post: diagnosis and mitigation
  std::optional<std::string> triage_note;
  std::optional<Labels> labels;

  friend bool operator==(const BugDescription&, const BugDescription&) = default;
};

/// Three id-keyed stores (log embeddings, telemetry vectors, descriptions)
/// plus the ANN index over the embeddings. Many readers or one writer.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::size_t dimension);

  std::size_t dimension() const { return embeddings_.dim; }
  std::size_t size() const { return embeddings_.size(); }
  std::size_t telemetry_count() const { return telemetry_.size(); }
  bool contains(const BugId& id) const { return rows_.count(id) != 0; }

  /// Throws DuplicateId, DimensionMismatch, InvalidArgument (empty id or
  /// incident text, id with a newline). Marks an existing index stale.
  /// Telemetry is stored as float32.
  void insert_ticket(const BugId& id, BugDescription desc, const embed::EmbeddingVector& log_embedding,
                     std::optional<telemetry::TelemetryVector> telemetry);

  /// Ids in insertion order.
  const std::vector<BugId>& ids() const { return embeddings_.ids; }
  embed::EmbeddingVector embedding(const BugId& id) const;
  /// nullptr when the ticket has no telemetry.
  const telemetry::TelemetryVector* telemetry(const BugId& id) const;
  const BugDescription& description(const BugId& id) const;
  const ann::VectorSet& embeddings() const { return embeddings_; }

  /// Recompute and cache per-dimension stats. Throws EmptyTelemetryStore.
  const telemetry::NormalizationStats& compute_telemetry_stats();
  /// Cached stats; nullopt before compute or when the store is empty.
  const std::optional<telemetry::NormalizationStats>& telemetry_stats() const { return stats_; }

  /// Cluster the embeddings; clusters == 0 selects ceil(sqrt(N)). Also
  /// refreshes telemetry stats when any telemetry exists.
  void build_index(std::size_t clusters, std::uint64_t seed);
  bool has_index() const { return index_.has_value(); }
  bool index_stale() const { return stale_; }
  const ann::AnnIndex& index() const;

  /// Throws NoIndex, or StaleIndex after inserts since the last build.
  std::vector<ann::SearchHit> search(std::span<const float> query, std::size_t k,
                                     std::size_t nprobe) const;
  std::vector<ann::SearchHit> exact_search(std::span<const float> query, std::size_t k) const;

  /// Directory layout: manifest.json, embeddings.{f32,ids}, telemetry.{f32,ids},
  /// descriptions.ndjson and, when indexed, index.{centroids.f32,assignments.i32}.
  void save(const std::filesystem::path& dir) const;
  /// Throws CorruptStore or VersionMismatch.
  static KnowledgeBase load(const std::filesystem::path& dir);

 private:
  ann::VectorSet embeddings_;
  std::vector<std::string> provider_tags_;
  std::unordered_map<BugId, std::size_t> rows_;
  std::vector<BugDescription> descriptions_;  // by row
  std::vector<BugId> telemetry_ids_;
  std::unordered_map<BugId, telemetry::TelemetryVector> telemetry_;
  std::optional<telemetry::NormalizationStats> stats_;
  std::optional<ann::AnnIndex> index_;
  bool stale_ = false;
};

/// Per-dimension population stats over every stored telemetry vector.
telemetry::NormalizationStats compute_telemetry_stats(const KnowledgeBase& kb);

}  // namespace arca::kb
