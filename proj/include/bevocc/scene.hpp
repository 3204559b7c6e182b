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
#include <string>
#include <vector>

#include <json.hpp>

#include "bevocc/geometry.hpp"

namespace bevocc {

/// Vehicle as an oriented box resting on the ground plane (world frame).
struct VehicleBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3(2.0, 0.9, 0.75);
  double yaw = 0.0;
  Vec2 velocity = Vec2::Zero();  // m/s, ground plane
  std::uint32_t id = 1;

  Mat3 rotation() const { return yaw_rotation(yaw); }
  /// Footprint corners (x, y) in counter-clockwise order.
  std::array<Vec2, 4> footprint() const;
};

struct Scene {
  Pose ego_pose;  // world-from-ego
  std::vector<VehicleBox> vehicles;
  std::uint64_t ground_texture_seed = 0;
  std::uint64_t rng_seed = 0;
};

struct SceneParams {
  int n_vehicles = 15;
  double world_extent = 50.0;  // vehicles stay inside [-extent, extent]^2
  double ego_speed = 8.0;      // mean traffic speed, m/s
};

/// Rejection-samples non-overlapping vehicles around an ego vehicle at the
/// world origin. Throws GenerationFailed after 10 * n_vehicles^2 attempts.
Scene generate_scene(std::uint64_t seed, const SceneParams& params);

/// 2D separating-axis test on oriented rectangles given as corner lists.
bool footprints_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b);

/// Vehicles re-expressed in the ego frame.
std::vector<VehicleBox> vehicles_in_ego(const Scene& scene);

inline constexpr int kSceneSchemaVersion = 1;
nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
void save_scene(const std::string& path, const Scene& scene);
Scene load_scene(const std::string& path);

}  // namespace bevocc
