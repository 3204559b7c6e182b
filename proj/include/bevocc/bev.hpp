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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bevocc/bev_grid.hpp"
#include "bevocc/geometry.hpp"
#include "bevocc/image.hpp"
#include "bevocc/sensors.hpp"

namespace bevocc {

/// Sensor modalities as bit flags; fused maps carry the union.
enum Modality : std::uint8_t {
  kCamera = 1,
  kRadar = 2,
  kLidar = 4,
};
using ModalitySet = std::uint8_t;

/// "c", "c+r", "c+l", "c+r+l" (any subset joined by '+').
std::string modality_name(ModalitySet m);
ModalitySet parse_modality(const std::string& s);

/// Dense nx * ny * nz * C volume, index ((ix * ny + iy) * nz + iz) * C + c.
struct VoxelGrid {
  BEVGridSpec spec;
  int channels = 0;
  std::vector<float> data;

  VoxelGrid() = default;
  VoxelGrid(const BEVGridSpec& s, int c)
      : spec(s), channels(c),
        data(static_cast<std::size_t>(s.nx) * s.ny * s.nz * c, 0.0f) {}

  std::size_t index(int ix, int iy, int iz, int c) const {
    return ((static_cast<std::size_t>(ix) * spec.ny + iy) * spec.nz + iz) * channels + c;
  }
  float at(int ix, int iy, int iz, int c) const { return data[index(ix, iy, iz, c)]; }
  float& at(int ix, int iy, int iz, int c) { return data[index(ix, iy, iz, c)]; }
};

/// Dense nx * ny * C map, index (ix * ny + iy) * C + c.
struct BEVFeatureMap {
  BEVGridSpec spec;
  int channels = 0;
  std::vector<float> data;
  ModalitySet modality = 0;

  BEVFeatureMap() = default;
  BEVFeatureMap(const BEVGridSpec& s, int c, ModalitySet m)
      : spec(s), channels(c), data(static_cast<std::size_t>(s.nx) * s.ny * c, 0.0f), modality(m) {}

  std::size_t index(int ix, int iy, int c) const {
    return (static_cast<std::size_t>(ix) * spec.ny + iy) * channels + c;
  }
  float at(int ix, int iy, int c) const { return data[index(ix, iy, c)]; }
  float& at(int ix, int iy, int c) { return data[index(ix, iy, c)]; }
};

struct LiftOptions {
  int feature_stride = 1;  // feature image pixel = stride camera pixels
  double near_plane = kDefaultNearPlane;
};

/// Bilinearly samples each camera's feature image at every voxel centre's
/// projection and averages over the cameras that see it. Voxels outside all
/// frusta stay zero.
VoxelGrid lift_camera_features(std::span<const Image> feature_images,
                               const std::vector<CameraModel>& rig, const Pose& ego_pose,
                               const BEVGridSpec& spec, const LiftOptions& options = {});

/// Folds z into channels: output channel (iz * C + c).
BEVFeatureMap flatten_z(const VoxelGrid& grid, ModalitySet modality = kCamera);

enum class VelocityPooling { max_abs, mean_abs };

/// Binary per-voxel occupancy flattened to nz channels. With velocity, nz
/// more channels hold the pooled |radial_velocity| per voxel.
BEVFeatureMap voxelize_points(const PointCloud& cloud, const BEVGridSpec& spec,
                              bool with_velocity,
                              VelocityPooling pooling = VelocityPooling::max_abs);

/// Channel concatenation in camera, radar, lidar order.
BEVFeatureMap fuse(std::span<const BEVFeatureMap> maps);

/// Copies channels [first, first + count).
BEVFeatureMap slice_channels(const BEVFeatureMap& map, int first, int count);

// Binary feature file: magic "BEVF", then version, nx, ny, channels as
// little-endian uint32, then nx*ny*channels little-endian float32 in row-major
// (ix, iy, c) order. A JSON sidecar (<path>.json) records spec and modality.
inline constexpr std::uint32_t kBevfVersion = 1;
void save_bevf(const std::string& path, const BEVFeatureMap& map);
BEVFeatureMap load_bevf(const std::string& path);

/// Feature map stored at half precision; used for large training caches.
struct PackedBEV {
  BEVGridSpec spec;
  int channels = 0;
  ModalitySet modality = 0;
  std::vector<Eigen::half> data;

  static PackedBEV pack(const BEVFeatureMap& map);
};

/// Read-only per-cell view over one or more feature parts, concatenated in
/// the order added. Borrowed float maps must outlive the stack.
class FeatureStack {
 public:
  FeatureStack() = default;
  explicit FeatureStack(const BEVFeatureMap& map) { add(map); }

  void add(const BEVFeatureMap& map);
  void add(std::shared_ptr<const PackedBEV> packed);

  const BEVGridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  int cells() const { return spec_.cells(); }
  ModalitySet modality() const { return modality_; }

  /// Writes channels() values for flat cell index `cell`.
  void load(int cell, float* out) const;

 private:
  struct Part {
    const BEVFeatureMap* f32 = nullptr;
    std::shared_ptr<const PackedBEV> f16;
    int channels = 0;
  };
  void check_spec(const BEVGridSpec& s);

  BEVGridSpec spec_;
  int channels_ = 0;
  ModalitySet modality_ = 0;
  std::vector<Part> parts_;
};

}  // namespace bevocc
