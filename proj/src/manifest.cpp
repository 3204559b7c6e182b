// Copyright 2026 The bevocc Authors. All Rights Reserved.
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

#include "bevocc/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "bevocc/config.hpp"
#include "bevocc/error.hpp"

namespace bevocc {

namespace fs = std::filesystem;

RunManifest build_manifest(const fs::path& run_dir, const std::string& run_id,
                           const std::string& config_hash, std::vector<std::uint64_t> seeds) {
  RunManifest m;
  m.run_id = run_id;
  m.timestamp = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                            std::chrono::time_point_cast<std::chrono::seconds>(
                                std::chrono::system_clock::now()));
  m.config_hash = config_hash;
  m.seeds = std::move(seeds);
  for (const char* module : {"geometry", "scene", "occlusion", "bev", "seg_head", "eval", "cli"}) {
    m.module_versions[module] = kVersion;
  }
  if (!fs::exists(run_dir)) return m;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), run_dir).generic_string();
    if (rel == "manifest.json") continue;
    m.files.push_back({rel, sha256_file(entry.path().string()),
                       static_cast<std::uint64_t>(entry.file_size())});
  }
  std::sort(m.files.begin(), m.files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return m;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"run_id", m.run_id},
          {"timestamp", m.timestamp},
          {"config_hash", m.config_hash},
          {"seeds", m.seeds},
          {"module_versions", m.module_versions},
          {"files", files}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.module_versions = j.at("module_versions").get<std::map<std::string, std::string>>();
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::uint64_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

void save_manifest(const fs::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::vector<std::string> verify_manifest(const fs::path& run_dir, const RunManifest& m) {
  std::vector<std::string> problems;
  for (const auto& f : m.files) {
    const fs::path p = run_dir / f.path;
    if (!fs::is_regular_file(p)) {
      problems.push_back("missing: " + f.path);
    } else if (sha256_file(p.string()) != f.sha256) {
      problems.push_back("changed: " + f.path);
    }
  }
  return problems;
}

}  // namespace bevocc
