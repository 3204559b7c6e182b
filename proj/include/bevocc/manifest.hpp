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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace bevocc {

inline constexpr const char* kVersion = "0.1.0";

struct ManifestEntry {
  std::string path;  // relative to the run directory, '/' separated
  std::string sha256;
  std::uint64_t bytes = 0;
};

/// Inventory of a run directory. The timestamp is the only field that
/// differs between reruns of an identical configuration.
struct RunManifest {
  std::string run_id;
  std::string timestamp;  // UTC, ISO 8601
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> module_versions;
  std::vector<ManifestEntry> files;
};

/// Hashes every regular file under `run_dir` except manifest.json, sorted
/// by path.
RunManifest build_manifest(const std::filesystem::path& run_dir, const std::string& run_id,
                           const std::string& config_hash, std::vector<std::uint64_t> seeds);

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest load_manifest(const std::filesystem::path& path);

/// Problems found re-hashing the listed files (missing or changed); empty
/// when the directory matches.
std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir, const RunManifest& m);

}  // namespace bevocc
