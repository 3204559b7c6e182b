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

#include "bevocc/bev_grid.hpp"
#include "bevocc/geometry.hpp"
#include "bevocc/image.hpp"
#include "bevocc/scene.hpp"

namespace bevocc {

/// Six-camera surround rig modelled on the nuScenes layout: front, front-left,
/// front-right, back, back-left, back-right. Horizontal FOV 70 deg (back:
/// 110 deg); yaws 0, +-55, +-110, 180 deg, so adjacent views overlap by
/// 15 deg (20 deg next to the back camera).
std::vector<CameraModel> nuscenes_like_rig(int width = 800, int height = 448);

/// Horizontal field of view (radians) of an intrinsics block.
double horizontal_fov(const CameraIntrinsics& k);

/// Camera yaw in the ego frame (direction of the optical axis).
double camera_yaw(const CameraModel& cam);

struct RenderResult {
  Image color;      // 3 channels, [0, 1]
  LabelImage ids;   // vehicle id per pixel, 0 = background
};

/// Ray-traced raster of the scene: every pixel-centre ray is resolved against
/// the ground plane and the vehicle boxes whose projected bounds cover it,
/// keeping the nearest hit (a per-pixel depth buffer).
RenderResult render_camera(const Scene& scene, const CameraModel& cam);

struct CloudPoint {
  Vec3 position = Vec3::Zero();  // ego frame, metres
  double radial_velocity = 0.0;  // m/s, radar only
};

struct PointCloud {
  std::vector<CloudPoint> points;
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct LidarParams {
  int n_azimuth = 360;
  std::vector<double> elevation_deg = {-10.0, -5.0, -3.0, -2.0, -1.5, -1.0, -0.5, 0.0};
  double sensor_height = 1.8;
};

/// One ray per (azimuth, elevation) from the roof sensor; the first hit among
/// vehicle boxes and the ground plane becomes a point. Misses produce nothing.
PointCloud raycast_lidar(const Scene& scene, const LidarParams& params);

struct RadarParams {
  int n_returns_per_vehicle = 3;
  double noise_sigma = 0.3;
  double sensor_height = 0.6;
};

/// Samples returns on vehicle faces that face the sensor and whose centres
/// have line of sight, keeps samples that are themselves unobstructed, adds
/// isotropic Gaussian position noise and sets the radial velocity.
PointCloud simulate_radar(const Scene& scene, const RadarParams& params);

/// First hit along a world ray: vehicle index (or -1 for ground, -2 for a
/// miss) and distance.
struct SceneHit {
  int vehicle = -2;
  double t = 0.0;
};
SceneHit trace_scene(const Scene& scene, const Ray& ray);

/// Cell is 1 iff its centre lies inside some vehicle footprint (ego frame).
BevMask ground_truth_bev(const Scene& scene, const BEVGridSpec& grid);

/// CSV with header x,y,z,radial_velocity.
void write_cloud_csv(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud_csv(const std::string& path);

}  // namespace bevocc
