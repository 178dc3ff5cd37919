// chanrank/manifest.hpp

// Copyright 2026 The chanrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// JSON-lines dataset manifests. One record per utterance:
//   {"id": ..., "channel_paths": [...], "relevance": [...]?, "clean_path": ...?,
//    "metadata": {...}?}
// Relative paths are resolved against the manifest's directory.

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/dsp.hpp"
#include "chanrank/scene_sim.hpp"
#include "json.hpp"

namespace chanrank {

struct ManifestRecord {
  std::string id;
  std::vector<std::string> channel_paths;
  std::optional<std::vector<double>> relevance;
  std::optional<std::string> clean_path;
  nlohmann::json metadata;  // null when absent
};

inline nlohmann::json RecordJson(const ManifestRecord &r) {
  nlohmann::json j = {{"id", r.id}, {"channel_paths", r.channel_paths}};
  if (r.relevance) j["relevance"] = *r.relevance;
  if (r.clean_path) j["clean_path"] = *r.clean_path;
  if (!r.metadata.is_null()) j["metadata"] = r.metadata;
  return j;
}

inline ManifestRecord RecordFromJson(const nlohmann::json &j, const std::string &where) {
  CHANRANK_CHECK(j.is_object(), Errc::kFormat, where, ": record is not a JSON object");
  ManifestRecord r;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto &k = it.key();
      if (k == "id") r.id = it->get<std::string>();
      else if (k == "channel_paths") r.channel_paths = it->get<std::vector<std::string>>();
      else if (k == "relevance") r.relevance = it->get<std::vector<double>>();
      else if (k == "clean_path") r.clean_path = it->get<std::string>();
      else if (k == "metadata") r.metadata = *it;
      else Fail(Errc::kFormat, where, ": unknown manifest key '", k, "'");
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kFormat, where, ": ", e.what());
  }
  CHANRANK_CHECK(!r.id.empty(), Errc::kFormat, where, ": record has no id");
  CHANRANK_CHECK(!r.channel_paths.empty(), Errc::kFormat, where, ": record '", r.id,
                 "' has no channel_paths");
  if (r.relevance)
    CHANRANK_CHECK(r.relevance->size() == r.channel_paths.size(), Errc::kFormat, where,
                   ": record '", r.id, "' has ", r.relevance->size(), " relevance values for ",
                   r.channel_paths.size(), " channels");
  return r;
}

struct Manifest {
  std::string base_dir;  // for resolving relative paths
  std::vector<ManifestRecord> records;

  std::string Resolve(const std::string &p) const {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).string();
  }

  std::vector<std::string> Ids() const {
    std::vector<std::string> ids;
    for (const auto &r : records) ids.push_back(r.id);
    return ids;
  }

  std::vector<Waveform> LoadChannels(const ManifestRecord &r) const {
    std::vector<Waveform> out;
    for (const auto &p : r.channel_paths) out.push_back(Waveform::Load(Resolve(p)));
    return out;
  }

  /// Relevance labels of every record; names the first record without any.
  std::vector<std::vector<double>> Relevance() const {
    std::vector<std::vector<double>> out;
    for (const auto &r : records) {
      CHANRANK_CHECK(r.relevance.has_value(), Errc::kInvalidArgument, "manifest record '", r.id,
                     "' has no relevance labels");
      out.push_back(*r.relevance);
    }
    return out;
  }
};

inline Manifest ParseManifest(std::istream &is, const std::string &name,
                              const std::string &base_dir = "") {
  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      Fail(Errc::kFormat, where, ": invalid JSON: ", e.what());
    }
    ManifestRecord r = RecordFromJson(j, where);
    CHANRANK_CHECK(seen.insert(r.id).second, Errc::kFormat, where, ": duplicate id '", r.id, "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

inline Manifest ReadManifest(const std::string &path) {
  std::ifstream f(path);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open manifest ", path);
  return ParseManifest(f, path, std::filesystem::path(path).parent_path().string());
}

inline std::string ManifestText(const std::vector<ManifestRecord> &records) {
  std::string out;
  for (const auto &r : records) out += RecordJson(r).dump() + "\n";
  return out;
}

inline void WriteManifest(const std::string &path, const std::vector<ManifestRecord> &records) {
  std::ofstream f(path, std::ios::binary);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open ", path, " for writing");
  f << ManifestText(records);
  CHANRANK_CHECK(f.good(), Errc::kIo, "failed writing ", path);
}

/// Scene geometry stored by the simulator, for the closest-microphone method.
inline Scene SceneFromMetadata(const ManifestRecord &r) {
  CHANRANK_CHECK(r.metadata.is_object() && r.metadata.contains("room") &&
                     r.metadata.contains("positions"),
                 Errc::kInvalidArgument, "record '", r.id,
                 "' has no room/positions metadata (needed by the closest method)");
  try {
    return {RoomFromJson(r.metadata.at("room")), PositionsFromJson(r.metadata.at("positions"))};
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kFormat, "record '", r.id, "' metadata: ", e.what());
  }
}

}  // namespace chanrank
