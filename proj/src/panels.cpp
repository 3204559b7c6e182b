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

#include "bevocc/panels.hpp"

#include <algorithm>
#include <array>
#include <filesystem>

#include <fmt/format.h>

#include "bevocc/error.hpp"

namespace bevocc {

namespace {

using Rgb = std::array<float, 3>;

constexpr Rgb kBackground{0.08f, 0.08f, 0.10f};
constexpr Rgb kVehicle{0.95f, 0.85f, 0.30f};
constexpr Rgb kOccluded{0.85f, 0.10f, 0.10f};
constexpr Rgb kRecovered{0.15f, 0.90f, 0.25f};

void fill_block(Image& img, int row0, int col0, int size, const Rgb& c) {
  for (int r = row0; r < row0 + size; ++r) {
    for (int q = col0; q < col0 + size; ++q) {
      for (int k = 0; k < 3; ++k) img.at(q, r, k) = c[static_cast<std::size_t>(k)];
    }
  }
}

void outline_block(Image& img, int row0, int col0, int size, const Rgb& c) {
  for (int i = 0; i < size; ++i) {
    for (int k = 0; k < 3; ++k) {
      const auto v = c[static_cast<std::size_t>(k)];
      img.at(col0 + i, row0, k) = v;
      img.at(col0 + i, row0 + size - 1, k) = v;
      img.at(col0, row0 + i, k) = v;
      img.at(col0 + size - 1, row0 + i, k) = v;
    }
  }
}

Rgb blend(const Rgb& a, const Rgb& b, float t) {
  return {a[0] * (1 - t) + b[0] * t, a[1] * (1 - t) + b[1] * t, a[2] * (1 - t) + b[2] * t};
}

// Cell (ix, iy) -> top-left pixel of its block.
struct Layout {
  int nx, ny, scale;
  int row(int ix) const { return (nx - 1 - ix) * scale; }
  int col(int iy) const { return (ny - 1 - iy) * scale; }
};

Image camera_mosaic(const PanelInputs& in, int height, int width) {
  Image out(width, height, 3);
  for (auto& v : out.data) v = kBackground[0];
  // Rows: front-facing cameras on top, rear ones below, left to right as seen
  // from above the car looking forward.
  static const std::array<std::string, 6> order{"front_left", "front", "front_right",
                                                "back_left", "back", "back_right"};
  std::vector<std::size_t> slots;
  for (const auto& name : order) {
    const auto it = std::find(in.names.begin(), in.names.end(), name);
    if (it != in.names.end()) slots.push_back(static_cast<std::size_t>(it - in.names.begin()));
  }
  if (slots.size() != in.views.size()) {
    slots.clear();
    for (std::size_t i = 0; i < in.views.size(); ++i) slots.push_back(i);
  }
  const int cols = 3;
  const int rows = static_cast<int>((slots.size() + cols - 1) / cols);
  if (rows == 0) return out;
  const int tile_w = width / cols;
  const int tile_h = height / rows;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Image& v = in.views[slots[s]];
    const int ox = static_cast<int>(s % cols) * tile_w;
    const int oy = static_cast<int>(s / cols) * tile_h;
    // Preserve aspect ratio inside the tile.
    const double f = std::min(static_cast<double>(tile_w) / v.width, static_cast<double>(tile_h) / v.height);
    const int w = std::max(1, static_cast<int>(v.width * f));
    const int h = std::max(1, static_cast<int>(v.height * f));
    const int px = ox + (tile_w - w) / 2;
    const int py = oy + (tile_h - h) / 2;
    for (int y = 0; y < h; ++y) {
      const int sy = std::min(v.height - 1, static_cast<int>((y + 0.5) / f));
      for (int x = 0; x < w; ++x) {
        const int sx = std::min(v.width - 1, static_cast<int>((x + 0.5) / f));
        for (int k = 0; k < 3; ++k) out.at(px + x, py + y, k) = v.at(sx, sy, std::min(k, v.channels - 1));
      }
    }
  }
  return out;
}

}  // namespace

PanelSet render_panels(const PanelInputs& in, int scale) {
  if (scale < 1) throw InvalidArgument("render_panels: scale must be >= 1");
  const int nx = in.gt.nx;
  const int ny = in.gt.ny;
  for (const BevMask* m : {&in.occlusion, &in.camera_pred, &in.fused_pred}) {
    if (!m->same_shape(in.gt)) throw InvalidArgument("render_panels: BEV mask shapes differ");
  }
  const Layout L{nx, ny, scale};
  const int H = nx * scale;
  const int W = ny * scale;
  PanelSet set;

  set.panels.push_back(camera_mosaic(in, H, W));

  Image features(W, H, 3);
  if (in.camera_bev.channels > 0) {
    if (in.camera_bev.spec.nx != nx || in.camera_bev.spec.ny != ny) {
      throw InvalidArgument("render_panels: feature map shape differs");
    }
    const int levels = in.camera_bev.spec.nz;
    const int per_level = in.camera_bev.channels / std::max(levels, 1);
    std::vector<float> rgb(static_cast<std::size_t>(nx) * ny * 3, 0.0f);
    float peak = 1e-6f;
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        for (int k = 0; k < 3 && k < per_level; ++k) {
          float s = 0.0f;
          for (int z = 0; z < levels; ++z) s += in.camera_bev.at(ix, iy, z * per_level + k);
          rgb[(static_cast<std::size_t>(ix) * ny + iy) * 3 + k] = s;
          peak = std::max(peak, s);
        }
      }
    }
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        const float* c = &rgb[(static_cast<std::size_t>(ix) * ny + iy) * 3];
        fill_block(features, L.row(ix), L.col(iy), scale, {c[0] / peak, c[1] / peak, c[2] / peak});
      }
    }
  }
  set.panels.push_back(std::move(features));

  Image mask(W, H, 3), camera(W, H, 3), fused(W, H, 3), gt(W, H, 3);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const int r = L.row(ix);
      const int c = L.col(iy);
      const bool occ = in.occlusion.at(ix, iy) != 0;
      fill_block(mask, r, c, scale, occ ? kOccluded : kBackground);
      const Rgb cam_cell = in.camera_pred.at(ix, iy) ? kVehicle : kBackground;
      fill_block(camera, r, c, scale, occ ? blend(cam_cell, kOccluded, 0.45f) : cam_cell);
      fill_block(fused, r, c, scale, in.fused_pred.at(ix, iy) ? kVehicle : kBackground);
      fill_block(gt, r, c, scale, in.gt.at(ix, iy) ? kVehicle : kBackground);
      if (in.fused_pred.at(ix, iy) && !in.camera_pred.at(ix, iy) && in.gt.at(ix, iy)) {
        outline_block(fused, r, c, scale, kRecovered);
        ++set.recovered;
      }
    }
  }
  set.panels.push_back(std::move(mask));
  set.panels.push_back(std::move(camera));
  set.panels.push_back(std::move(fused));
  set.panels.push_back(std::move(gt));
  return set;
}

std::vector<std::string> save_panels(const std::string& dir, const std::string& scene_id,
                                     const PanelSet& set) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t k = 0; k < set.panels.size(); ++k) {
    const auto path = (std::filesystem::path(dir) / fmt::format("scene_{}_{}.ppm", scene_id, k + 1)).string();
    write_ppm(path, set.panels[k]);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace bevocc
