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
#include <span>
#include <vector>

#include "bevocc/bev.hpp"
#include "bevocc/config.hpp"
#include "bevocc/occlusion.hpp"
#include "bevocc/scene.hpp"
#include "bevocc/sensors.hpp"

namespace bevocc {

enum class Split : std::uint64_t { train = 1, val = 2 };

/// Seed of scene `index` of a split, derived from the run seed.
std::uint64_t scene_seed(std::uint64_t run_seed, Split split, int index);

/// Scene with a vehicle count drawn uniformly from [min_vehicles, max_vehicles].
Scene make_scene(const DataConfig& data, std::uint64_t seed);

/// Everything the sensors record for one scene, plus its BEV ground truth.
struct SensorFrame {
  Scene scene;
  std::vector<RenderResult> views;  // rig order
  PointCloud lidar;
  PointCloud radar;
  BevMask gt;

  std::vector<Image> colors() const;
};

SensorFrame simulate_frame(const Scene& scene, const std::vector<CameraModel>& rig,
                           const SensorConfig& sensors, const BEVGridSpec& grid);

/// Encoder, bilinear lift and z-flattening for one set of camera views.
BEVFeatureMap camera_bev(std::span<const Image> images, const std::vector<CameraModel>& rig,
                         const Pose& ego_pose, const BEVGridSpec& grid, int feature_stride = 1);
BEVFeatureMap lidar_bev(const PointCloud& cloud, const BEVGridSpec& grid);
BEVFeatureMap radar_bev(const PointCloud& cloud, const BEVGridSpec& grid, VelocityPooling pooling);

/// Per-camera mask generation and compositing for one rig and configuration.
/// Scene-independent masks (overlap regions, external files) are built once.
class OcclusionSynth {
 public:
  OcclusionSynth(std::vector<CameraModel> rig, OcclusionConfig cfg);

  const std::vector<CameraModel>& rig() const { return rig_; }
  const OcclusionConfig& config() const { return cfg_; }
  const GaussianKernel& kernel() const { return kernel_; }

  /// One mask per camera. `seed` is the scene seed; with fixed_mask the
  /// masks depend only on `run_seed`.
  std::vector<OcclusionMask> masks(OcclusionMode mode, std::uint64_t seed,
                                   std::uint64_t run_seed = 0) const;

  /// Blurred copies of the views, or empty images when the opacity does not
  /// need them.
  std::vector<Image> blur_all(std::span<const Image> images) const;

  /// Composites each view through its mask; `blurred` comes from blur_all.
  std::vector<Image> apply(std::span<const Image> images, std::span<const Image> blurred,
                           const std::vector<OcclusionMask>& masks) const;

 private:
  std::vector<CameraModel> rig_;
  OcclusionConfig cfg_;
  GaussianKernel kernel_;
  std::vector<OcclusionMask> overlap_;
  std::vector<OcclusionMask> external_;
};

}  // namespace bevocc
