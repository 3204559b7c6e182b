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

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace bevocc {

/// Ego-centred BEV voxel layout. Cell (ix, iy) covers
/// x in [-x_extent + ix*cell, -x_extent + (ix+1)*cell), likewise for y; level
/// iz covers z in [z_min + iz*dz, z_min + (iz+1)*dz). Flat cell index is
/// ix * ny + iy.
struct BEVGridSpec {
  double x_extent = 50.0;
  double y_extent = 50.0;
  double z_min = -1.0;
  double z_max = 7.0;
  int nx = 200;
  int ny = 200;
  int nz = 8;

  /// Throws InvalidArgument when dimensions or extents are inconsistent.
  void validate() const;

  double cell_size() const { return 2.0 * x_extent / nx; }
  double level_height() const { return (z_max - z_min) / nz; }
  int cells() const { return nx * ny; }
  int cell_index(int ix, int iy) const { return ix * ny + iy; }

  double cell_center_x(int ix) const { return -x_extent + (ix + 0.5) * cell_size(); }
  double cell_center_y(int iy) const { return -y_extent + (iy + 0.5) * cell_size(); }
  double level_center_z(int iz) const { return z_min + (iz + 0.5) * level_height(); }

  /// Floor binning; -1 when outside the extent.
  int bin_x(double x) const;
  int bin_y(double y) const;
  int bin_z(double z) const;

  bool operator==(const BEVGridSpec&) const = default;
};

nlohmann::json grid_to_json(const BEVGridSpec& spec);
BEVGridSpec grid_from_json(const nlohmann::json& j);

/// Binary nx-by-ny cell mask (ground truth, prediction, occlusion footprint).
struct BevMask {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> data;

  BevMask() = default;
  BevMask(int nx_, int ny_) : nx(nx_), ny(ny_), data(static_cast<std::size_t>(nx_) * ny_, 0) {}
  explicit BevMask(const BEVGridSpec& spec) : BevMask(spec.nx, spec.ny) {}

  std::uint8_t& at(int ix, int iy) { return data[static_cast<std::size_t>(ix) * ny + iy]; }
  std::uint8_t at(int ix, int iy) const {
    return data[static_cast<std::size_t>(ix) * ny + iy];
  }
  std::size_t count() const;
  bool same_shape(const BevMask& o) const { return nx == o.nx && ny == o.ny; }
  bool operator==(const BevMask&) const = default;
};

}  // namespace bevocc
