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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevocc/bev.hpp"
#include "bevocc/bev_grid.hpp"
#include "bevocc/occlusion.hpp"
#include "bevocc/scene.hpp"
#include "bevocc/sensors.hpp"
#include "bevocc/train.hpp"

namespace bevocc {

struct DataConfig {
  int train_scenes = 200;
  int val_scenes = 50;
  int min_vehicles = 5;
  int max_vehicles = 25;
  double world_extent = 50.0;
  double ego_speed = 8.0;
};

/// How the overlap condition assigns masks. `pair` masks each shared region
/// in one camera of the pair only (the next camera counter-clockwise keeps
/// it); `all` masks it in every camera that sees it.
enum class OverlapPairing { pair, all };

struct OcclusionConfig {
  int kernel_size = kDefaultBlurKernelSize;
  std::optional<double> sigma;
  Opacity opacity = Opacity::translucent_blur;
  double side_fraction = 0.4;
  double coverage = 0.3;
  int n_blobs = 6;
  double reference_range = 20.0;
  double bev_threshold = 0.5;
  OverlapPairing overlap_pairing = OverlapPairing::pair;
  bool fixed_mask = false;
  std::string mask_dir;  // external PGMs named <camera>.pgm

  GaussianKernel kernel() const { return GaussianKernel::make(kernel_size, sigma); }
};

struct SensorConfig {
  LidarParams lidar;
  RadarParams radar;
  VelocityPooling velocity_pooling = VelocityPooling::max_abs;
};

struct ModelConfig {
  int hidden = 16;
  int feature_stride = 1;
};

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<ModalitySet> modalities = {kCamera, kCamera | kRadar, kCamera | kLidar,
                                         kCamera | kRadar | kLidar};
  std::vector<OcclusionMode> occlusions = {OcclusionMode::none, OcclusionMode::random_box,
                                           OcclusionMode::overlap, OcclusionMode::realistic};
  bool retrain_per_condition = false;
  bool per_scene_iou = false;
  int panel_scenes = 2;
  int feature_dump_scenes = 2;
};

/// Every tunable of a run. Layered as defaults, then a JSON file, then flags.
struct ResolvedConfig {
  BEVGridSpec grid;
  DataConfig data;
  SensorConfig sensors;
  OcclusionConfig occlusion;
  ModelConfig model;
  TrainConfig train;
  ExperimentConfig experiment;

  ResolvedConfig();

  /// Throws ValidationError naming the offending field path.
  void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

nlohmann::json config_to_json(const ResolvedConfig& cfg);

/// Overlays `j` onto `base`. Unknown keys and ill-typed or out-of-range
/// values raise ValidationError with the field path (e.g. "train.epochs").
ResolvedConfig merge_config(const ResolvedConfig& base, const nlohmann::json& j);
ResolvedConfig load_config(const std::string& path, const ResolvedConfig& base = {});
void save_config(const std::string& path, const ResolvedConfig& cfg);

/// SHA-256 of the canonical (sorted-key, compact) JSON serialization.
std::string config_hash(const ResolvedConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

std::string to_string(OverlapPairing p);

}  // namespace bevocc
