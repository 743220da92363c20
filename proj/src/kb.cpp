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

#include "arca/kb.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include "arca/error.hpp"
#include "arca/json_io.hpp"

namespace arca::kb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kEmbeddings = "embeddings.f32";
constexpr const char* kEmbeddingIds = "embeddings.ids";
constexpr const char* kTelemetry = "telemetry.f32";
constexpr const char* kTelemetryIds = "telemetry.ids";
constexpr const char* kDescriptions = "descriptions.ndjson";
constexpr const char* kCentroids = "index.centroids.f32";
constexpr const char* kAssignments = "index.assignments.i32";

template <typename T>
std::string pack_le(std::span<const T> values) {
  static_assert(sizeof(T) == 4);
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

template <typename T>
std::vector<T> unpack_le(const std::string& bytes, const std::string& name) {
  if (bytes.size() % 4 != 0) throw Error(Errc::kCorruptStore, name + " is not a whole number of 32-bit words");
  std::vector<T> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    out[i] = std::bit_cast<T>(bits);
  }
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::uint32_t crc_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot write " + p.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(Errc::kIo, "short write to " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(Errc::kCorruptStore, "missing " + p.filename().string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json stats_to_json(const telemetry::NormalizationStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

telemetry::NormalizationStats stats_from_json(const json& j) {
  telemetry::NormalizationStats s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != telemetry::kVectorSize || sd.size() != telemetry::kVectorSize) {
    throw Error(Errc::kCorruptStore, "telemetry stats have the wrong length");
  }
  std::copy(mean.begin(), mean.end(), s.mean.begin());
  std::copy(sd.begin(), sd.end(), s.stddev.begin());
  return s;
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::size_t dimension) {
  if (dimension == 0) throw Error(Errc::kInvalidArgument, "knowledge base dimension must be >= 1");
  embeddings_.dim = dimension;
}

void KnowledgeBase::insert_ticket(const BugId& id, BugDescription desc,
                                  const embed::EmbeddingVector& log_embedding,
                                  std::optional<telemetry::TelemetryVector> telem) {
  if (id.empty() || id.find_first_of("\n\r") != std::string::npos) {
    throw Error(Errc::kInvalidArgument, "bug id must be non-empty and single-line");
  }
  if (desc.incident_text.empty()) throw Error(Errc::kInvalidArgument, "incident text is empty for " + id);
  if (contains(id)) throw Error(Errc::kDuplicateId, id);
  if (log_embedding.dim() != dimension()) {
    throw Error(Errc::kDimensionMismatch, "embedding for " + id + " has " + std::to_string(log_embedding.dim()) +
                                              " components, knowledge base has " + std::to_string(dimension()));
  }
  if (telem) {
    for (double& c : telem->components) {
      if (!std::isfinite(c)) throw Error(Errc::kNonFiniteInput, "telemetry for " + id);
      c = static_cast<double>(static_cast<float>(c));
    }
  }
  rows_.emplace(id, embeddings_.size());
  embeddings_.append(id, log_embedding.view());
  provider_tags_.push_back(log_embedding.provider_tag);
  descriptions_.push_back(std::move(desc));
  if (telem) {
    telemetry_ids_.push_back(id);
    telemetry_.emplace(id, *telem);
  }
  if (index_) stale_ = true;
}

embed::EmbeddingVector KnowledgeBase::embedding(const BugId& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(Errc::kUnknownId, id);
  const auto r = embeddings_.row(it->second);
  return {{r.begin(), r.end()}, provider_tags_[it->second]};
}

const telemetry::TelemetryVector* KnowledgeBase::telemetry(const BugId& id) const {
  auto it = telemetry_.find(id);
  return it == telemetry_.end() ? nullptr : &it->second;
}

const BugDescription& KnowledgeBase::description(const BugId& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(Errc::kUnknownId, id);
  return descriptions_[it->second];
}

const telemetry::NormalizationStats& KnowledgeBase::compute_telemetry_stats() {
  stats_ = kb::compute_telemetry_stats(*this);
  return *stats_;
}

telemetry::NormalizationStats compute_telemetry_stats(const KnowledgeBase& kb) {
  std::vector<telemetry::TelemetryVector> vs;
  vs.reserve(kb.telemetry_count());
  for (const auto& id : kb.ids()) {
    if (const auto* t = kb.telemetry(id)) vs.push_back(*t);
  }
  return telemetry::compute_stats(vs);
}

void KnowledgeBase::build_index(std::size_t clusters, std::uint64_t seed) {
  if (clusters == 0) clusters = ann::default_clusters(size());
  index_ = ann::AnnIndex::build(embeddings_, clusters, seed);
  stale_ = false;
  if (!telemetry_.empty()) compute_telemetry_stats();
}

const ann::AnnIndex& KnowledgeBase::index() const {
  if (!index_) throw Error(Errc::kNoIndex, "knowledge base has no index; run build first");
  return *index_;
}

std::vector<ann::SearchHit> KnowledgeBase::search(std::span<const float> query, std::size_t k,
                                                  std::size_t nprobe) const {
  if (!index_) throw Error(Errc::kNoIndex, "knowledge base has no index; run build first");
  if (stale_) {
    spdlog::warn("knowledge base index is stale ({} vectors indexed, {} stored); rebuild required",
                 index_->size(), size());
    throw Error(Errc::kStaleIndex, "index predates later inserts; rebuild required");
  }
  return index_->search(query, k, nprobe);
}

std::vector<ann::SearchHit> KnowledgeBase::exact_search(std::span<const float> query, std::size_t k) const {
  return ann::exact_search(embeddings_, query, k);
}

void KnowledgeBase::save(const fs::path& dir) const {
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back(kEmbeddings, pack_le<float>(embeddings_.data));
  files.emplace_back(kEmbeddingIds, join_lines(embeddings_.ids));

  std::vector<float> tele;
  tele.reserve(telemetry_ids_.size() * telemetry::kVectorSize);
  for (const auto& id : telemetry_ids_) {
    for (double c : telemetry_.at(id).components) tele.push_back(static_cast<float>(c));
  }
  files.emplace_back(kTelemetry, pack_le<float>(tele));
  files.emplace_back(kTelemetryIds, join_lines(telemetry_ids_));

  std::string ndjson;
  for (std::size_t r = 0; r < descriptions_.size(); ++r) {
    json j = json_io::to_json(descriptions_[r]);
    j["id"] = embeddings_.ids[r];
    j["embedding_provider"] = provider_tags_[r];
    ndjson += j.dump();
    ndjson.push_back('\n');
  }
  files.emplace_back(kDescriptions, ndjson);

  const bool with_index = index_.has_value() && !stale_;
  if (with_index) {
    files.emplace_back(kCentroids, pack_le<float>(index_->centroids()));
    files.emplace_back(kAssignments, pack_le<std::int32_t>(index_->assignments()));
  }

  json manifest = {{"format", "arca-kb"},
                   {"format_version", kFormatVersion},
                   {"dimension", dimension()},
                   {"counts",
                    {{"embeddings", size()}, {"telemetry", telemetry_ids_.size()}, {"descriptions", size()}}},
                   {"files", json::object()},
                   {"telemetry_stats", stats_ ? stats_to_json(*stats_) : json(nullptr)},
                   {"index", with_index ? json{{"clusters", index_->clusters()}, {"seed", index_->seed()}}
                                        : json(nullptr)}};
  for (const auto& [name, bytes] : files) {
    write_file(dir / name, bytes);
    manifest["files"][name] = {{"bytes", bytes.size()}, {"crc32", crc_of(bytes)}};
  }
  write_file(dir / kManifest, manifest.dump(2) + "\n");
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / kManifest));
  } catch (const json::exception& e) {
    throw Error(Errc::kCorruptStore, std::string("unreadable manifest: ") + e.what());
  }
  try {
    if (manifest.value("format", "") != "arca-kb") throw Error(Errc::kCorruptStore, "not an ARCA knowledge base");
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(Errc::kVersionMismatch, "format version " + std::to_string(version) + " (supported: " +
                                              std::to_string(kFormatVersion) + ")");
    }
    auto checked = [&](const char* name) {
      const json& meta = manifest.at("files").at(name);
      std::string bytes = read_file(dir / name);
      if (bytes.size() != meta.at("bytes").get<std::size_t>() || crc_of(bytes) != meta.at("crc32").get<std::uint32_t>()) {
        throw Error(Errc::kCorruptStore, std::string("checksum mismatch in ") + name);
      }
      return bytes;
    };

    KnowledgeBase kb(manifest.at("dimension").get<std::size_t>());
    const std::size_t d = kb.dimension();
    const auto vecs = unpack_le<float>(checked(kEmbeddings), kEmbeddings);
    const auto ids = split_lines(checked(kEmbeddingIds));
    const auto desc_lines = split_lines(checked(kDescriptions));
    const auto tele = unpack_le<float>(checked(kTelemetry), kTelemetry);
    const auto tele_ids = split_lines(checked(kTelemetryIds));
    if (vecs.size() != ids.size() * d || desc_lines.size() != ids.size() ||
        tele.size() != tele_ids.size() * telemetry::kVectorSize) {
      throw Error(Errc::kCorruptStore, "store sizes disagree with each other");
    }
    std::unordered_map<BugId, telemetry::TelemetryVector> tv;
    for (std::size_t i = 0; i < tele_ids.size(); ++i) {
      telemetry::TelemetryVector v;
      for (std::size_t j = 0; j < telemetry::kVectorSize; ++j) v.components[j] = tele[i * telemetry::kVectorSize + j];
      tv.emplace(tele_ids[i], v);
    }
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const json j = json::parse(desc_lines[r]);
      if (j.at("id").get<std::string>() != ids[r]) throw Error(Errc::kCorruptStore, "description order mismatch");
      embed::EmbeddingVector e{{vecs.begin() + static_cast<std::ptrdiff_t>(r * d),
                                vecs.begin() + static_cast<std::ptrdiff_t>((r + 1) * d)},
                               j.value("embedding_provider", "")};
      std::optional<telemetry::TelemetryVector> t;
      if (auto it = tv.find(ids[r]); it != tv.end()) t = it->second;
      kb.insert_ticket(ids[r], json_io::description_from_json(j), e, t);
    }
    if (kb.telemetry_count() != tele_ids.size()) throw Error(Errc::kCorruptStore, "telemetry ids without tickets");
    if (!manifest.at("telemetry_stats").is_null()) kb.stats_ = stats_from_json(manifest.at("telemetry_stats"));
    if (!manifest.at("index").is_null()) {
      auto centroids = unpack_le<float>(checked(kCentroids), kCentroids);
      auto assign = unpack_le<std::int32_t>(checked(kAssignments), kAssignments);
      kb.index_ = ann::AnnIndex::restore(kb.embeddings_, std::move(centroids), std::move(assign),
                                         manifest.at("index").at("seed").get<std::uint64_t>());
    }
    kb.stale_ = false;
    return kb;
  } catch (const json::exception& e) {
    throw Error(Errc::kCorruptStore, std::string("malformed store: ") + e.what());
  }
}

}  // namespace arca::kb
