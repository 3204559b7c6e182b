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

#include "bevocc/bev_grid.hpp"

#include <algorithm>
#include <cmath>

#include "bevocc/error.hpp"

namespace bevocc {

void BEVGridSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw InvalidArgument("grid: nx, ny, nz must be >= 1");
  if (!(x_extent > 0.0) || !(y_extent > 0.0)) {
    throw InvalidArgument("grid: extents must be positive");
  }
  if (!(z_max > z_min)) throw InvalidArgument("grid: z_max must exceed z_min");
  const double cx = 2.0 * x_extent / nx;
  const double cy = 2.0 * y_extent / ny;
  if (std::abs(cx - cy) > 1e-9 * std::max(cx, cy)) {
    throw InvalidArgument("grid: cell size must match in x and y");
  }
}

namespace {
int bin(double value, double lo, double step, int n) {
  const double f = std::floor((value - lo) / step);
  if (!(f >= 0.0) || f >= n) return -1;
  return static_cast<int>(f);
}
}  // namespace

int BEVGridSpec::bin_x(double x) const { return bin(x, -x_extent, cell_size(), nx); }
int BEVGridSpec::bin_y(double y) const { return bin(y, -y_extent, cell_size(), ny); }
int BEVGridSpec::bin_z(double z) const { return bin(z, z_min, level_height(), nz); }

nlohmann::json grid_to_json(const BEVGridSpec& s) {
  return {{"x_extent", s.x_extent}, {"y_extent", s.y_extent}, {"z_min", s.z_min},
          {"z_max", s.z_max},       {"nx", s.nx},             {"ny", s.ny},
          {"nz", s.nz}};
}

BEVGridSpec grid_from_json(const nlohmann::json& j) {
  BEVGridSpec s;
  s.x_extent = j.value("x_extent", s.x_extent);
  s.y_extent = j.value("y_extent", s.y_extent);
  s.z_min = j.value("z_min", s.z_min);
  s.z_max = j.value("z_max", s.z_max);
  s.nx = j.value("nx", s.nx);
  s.ny = j.value("ny", s.ny);
  s.nz = j.value("nz", s.nz);
  s.validate();
  return s;
}

std::size_t BevMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace bevocc
