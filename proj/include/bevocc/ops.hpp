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

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bevocc/bev.hpp"
#include "bevocc/config.hpp"
#include "bevocc/occlusion.hpp"

namespace bevocc {

/// Raised for bad command-line input; the CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputRootEnv = "BEVOCC_OUTPUT_ROOT";

struct CommonOptions {
  std::optional<std::filesystem::path> output_root;  // else $BEVOCC_OUTPUT_ROOT, else ./runs
  std::string run_id;                                // empty: derived from the config hash
  std::optional<std::string> config_file;
  nlohmann::json overrides = nlohmann::json::object();  // flag values, same shape as the config
  bool force = false;
  int jobs = 1;
};

std::filesystem::path output_root(const CommonOptions& opts);

struct GenOptions : CommonOptions {};

struct OccludeOptions : CommonOptions {
  OcclusionMode mode = OcclusionMode::realistic;
};

struct TrainOptions : CommonOptions {
  ModalitySet modality = kCamera;
  bool use_occluded = false;  // train on occluded/ views instead of the originals
};

struct MatrixOptions : CommonOptions {};

struct PanelsOptions : CommonOptions {
  ModalitySet camera_modality = kCamera;
  ModalitySet fused_modality = kCamera | kRadar | kLidar;
  int scenes = 2;
  int scale = 4;
};

// Each command returns the process exit code (0 success, 1 when some part
// failed after the run completed) and throws on errors: UsageError and
// ValidationError for bad input, IoError and others for runtime failures.
int cmd_gen(const GenOptions& opts);
int cmd_occlude(const OccludeOptions& opts);
int cmd_train(const TrainOptions& opts);
int cmd_matrix(const MatrixOptions& opts);
int cmd_panels(const PanelsOptions& opts);

/// Resolves defaults <- config file <- overrides.
ResolvedConfig resolve_config(const CommonOptions& opts, const ResolvedConfig& base = {});

/// Run directory of a command; derives the run id from the config hash when
/// none was given.
std::filesystem::path run_directory(const CommonOptions& opts, const ResolvedConfig& cfg,
                                    const std::string& prefix);

}  // namespace bevocc
