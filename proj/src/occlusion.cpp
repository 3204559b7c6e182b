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

#include "bevocc/occlusion.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "bevocc/error.hpp"
#include "bevocc/rng.hpp"
#include "value_noise.hpp"

namespace bevocc {

std::string to_string(OcclusionMode mode) {
  switch (mode) {
    case OcclusionMode::none: return "none";
    case OcclusionMode::random_box: return "random";
    case OcclusionMode::overlap: return "overlap";
    case OcclusionMode::realistic: return "realistic";
  }
  return "none";
}

std::string to_string(Opacity opacity) {
  return opacity == Opacity::opaque ? "opaque" : "blur";
}

OcclusionMode parse_occlusion_mode(const std::string& s) {
  if (s == "none") return OcclusionMode::none;
  if (s == "random" || s == "random_box") return OcclusionMode::random_box;
  if (s == "overlap") return OcclusionMode::overlap;
  if (s == "realistic") return OcclusionMode::realistic;
  throw InvalidArgument("unknown occlusion mode '" + s + "' (none, random, overlap, realistic)");
}

Opacity parse_opacity(const std::string& s) {
  if (s == "blur" || s == "translucent_blur") return Opacity::translucent_blur;
  if (s == "opaque") return Opacity::opaque;
  throw InvalidArgument("unknown opacity '" + s + "' (blur, opaque)");
}

OcclusionMask OcclusionMask::empty(int width, int height) {
  return OcclusionMask{BinaryImage(width, height), OcclusionMode::none,
                       Opacity::translucent_blur, 0};
}

GaussianKernel GaussianKernel::make(int size, std::optional<double> sigma) {
  if (size <= 0 || size % 2 == 0) {
    throw InvalidArgument("gaussian kernel size must be odd and positive, got " +
                          std::to_string(size));
  }
  GaussianKernel k;
  k.size = size;
  k.sigma = sigma.value_or((size - 1) / 6.0);
  if (!(k.sigma > 0.0)) {
    if (size == 1 && !sigma) {
      k.sigma = 1.0;  // degenerate identity kernel
    } else {
      throw InvalidArgument("gaussian kernel sigma must be positive");
    }
  }
  const int r = k.radius();
  k.weights.resize(static_cast<std::size_t>(size));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (k.sigma * k.sigma));
    k.weights[static_cast<std::size_t>(i + r)] = w;
    sum += w;
  }
  for (auto& w : k.weights) w /= sum;
  return k;
}

OcclusionMask random_box_mask(int width, int height, std::uint64_t seed, double side_fraction) {
  if (!(side_fraction >= 0.0 && side_fraction <= 1.0)) {
    throw InvalidArgument("random_box_mask: side_fraction must lie in [0, 1]");
  }
  OcclusionMask m{BinaryImage(width, height), OcclusionMode::random_box,
                  Opacity::translucent_blur, seed};
  const int side = std::min(width, static_cast<int>(std::floor(side_fraction * height)));
  if (side <= 0) return m;
  Rng rng(seed);
  const auto x0 = static_cast<int>(rng.uniform_int(0, width - side));
  const auto y0 = static_cast<int>(rng.uniform_int(0, height - side));
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.mask.at(x, y) = 1;
  return m;
}

OcclusionMask overlap_region_mask(const std::vector<CameraModel>& rig, const CameraModel& cam,
                                  double reference_range) {
  if (!(reference_range > 0.0)) {
    throw InvalidArgument("overlap_region_mask: reference_range must be positive");
  }
  const auto self = std::find_if(rig.begin(), rig.end(),
                                 [&](const CameraModel& c) { return c.name == cam.name; });
  if (self == rig.end()) {
    throw InvalidArgument("overlap_region_mask: camera '" + cam.name + "' is not in the rig");
  }
  const auto& k = cam.intrinsics;
  OcclusionMask m{BinaryImage(k.width, k.height), OcclusionMode::overlap,
                  Opacity::translucent_blur, 0};
  const Pose ego = Pose::identity();
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 p = unproject_pixel(cam, Vec2(x, y), reference_range, ego);
      for (auto it = rig.begin(); it != rig.end(); ++it) {
        if (it == self) continue;
        if (project_point(*it, p, ego)) {
          m.mask.at(x, y) = 1;
          break;
        }
      }
    }
  }
  return m;
}

OcclusionMask procedural_soiling_mask(int width, int height, std::uint64_t seed,
                                      const SoilingParams& params) {
  if (!(params.coverage_target > 0.0 && params.coverage_target < 1.0)) {
    throw InvalidArgument("procedural_soiling_mask: coverage_target must lie in (0, 1)");
  }
  OcclusionMask m{BinaryImage(width, height), OcclusionMode::realistic,
                  Opacity::translucent_blur, seed};
  if (params.n_blobs <= 0) return m;

  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<float> field(n, 0.0f);
  std::vector<float> gx(static_cast<std::size_t>(width));
  std::vector<float> gy(static_cast<std::size_t>(height));
  for (int b = 0; b < params.n_blobs; ++b) {
    const double cx = rng.uniform(-0.1, 1.1) * width;
    const double cy = rng.uniform(-0.1, 1.1) * height;
    const double sx = rng.uniform(0.05, 0.18) * width;
    const double sy = rng.uniform(0.08, 0.30) * height;
    const double amp = rng.uniform(0.5, 1.0);
    for (int x = 0; x < width; ++x) {
      gx[static_cast<std::size_t>(x)] =
          static_cast<float>(amp * std::exp(-0.5 * std::pow((x - cx) / sx, 2)));
    }
    for (int y = 0; y < height; ++y) {
      gy[static_cast<std::size_t>(y)] = static_cast<float>(std::exp(-0.5 * std::pow((y - cy) / sy, 2)));
    }
    for (int y = 0; y < height; ++y) {
      float* row = field.data() + static_cast<std::size_t>(y) * width;
      const float wy = gy[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) row[x] += wy * gx[static_cast<std::size_t>(x)];
    }
  }
  // Ragged, soiling-like borders.
  const detail::ValueNoise noise(Rng::mix(seed, 0xB10Bull));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto& f = field[static_cast<std::size_t>(y) * width + x];
      f *= 0.7f + 0.6f * noise(x / 18.0, y / 18.0);
    }
  }

  // Rescale to coverage: the threshold is the field quantile at 1 - target.
  const auto n_masked = static_cast<std::size_t>(std::llround(params.coverage_target * n));
  if (n_masked == 0) return m;
  std::vector<float> sorted = field;
  const std::size_t pivot = n - n_masked;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pivot), sorted.end());
  const float threshold = sorted[pivot];
  for (std::size_t i = 0; i < n; ++i) m.mask.data[i] = field[i] >= threshold ? 1 : 0;
  return m;
}

OcclusionMask load_mask_file(const std::string& path, std::optional<int> target_width,
                             std::optional<int> target_height) {
  const GrayImage g = read_pgm(path);
  std::size_t bad = 0;
  for (auto v : g.data) {
    if (v != 0 && v != g.maxval) ++bad;
  }
  if (g.maxval != 255) {
    throw ValidationError(path + ": mask must be 8-bit with values 0/255");
  }
  if (bad > 0) {
    throw ValidationError(path + ": mask has " + std::to_string(bad) +
                          " pixels that are neither 0 nor 255");
  }
  OcclusionMask m{BinaryImage(g.width, g.height), OcclusionMode::realistic,
                  Opacity::translucent_blur, 0};
  for (std::size_t i = 0; i < g.data.size(); ++i) m.mask.data[i] = g.data[i] ? 1 : 0;

  const int tw = target_width.value_or(g.width);
  const int th = target_height.value_or(g.height);
  if (tw == g.width && th == g.height) return m;
  spdlog::warn("mask {} is {}x{}, resizing nearest-neighbour to {}x{}", path, g.width, g.height,
               tw, th);
  BinaryImage resized(tw, th);
  for (int y = 0; y < th; ++y) {
    const int sy = std::min(g.height - 1, static_cast<int>((y + 0.5) * g.height / th));
    for (int x = 0; x < tw; ++x) {
      const int sx = std::min(g.width - 1, static_cast<int>((x + 0.5) * g.width / tw));
      resized.at(x, y) = m.mask.at(sx, sy);
    }
  }
  m.mask = std::move(resized);
  return m;
}

void save_mask_file(const std::string& path, const OcclusionMask& mask) {
  write_pgm(path, mask.mask);
}

Image gaussian_blur(const Image& img, const GaussianKernel& kernel) {
  if (kernel.size <= 0 || kernel.size % 2 == 0) {
    throw InvalidArgument("gaussian_blur: kernel size must be odd");
  }
  if (kernel.size > 2 * std::min(img.width, img.height) + 1) {
    throw InvalidArgument("gaussian_blur: kernel larger than 2*min(width,height)+1");
  }
  const int w = img.width, h = img.height, ch = img.channels, r = kernel.radius();
  const std::size_t row_len = static_cast<std::size_t>(w) * ch;
  std::vector<float> taps(kernel.weights.begin(), kernel.weights.end());

  // Horizontal pass over a clamp-padded copy of each row.
  Image tmp(w, h, ch);
  std::vector<float> padded(static_cast<std::size_t>(w + 2 * r) * ch);
  for (int y = 0; y < h; ++y) {
    const float* src = img.data.data() + y * row_len;
    for (int x = -r; x < w + r; ++x) {
      const int sx = std::clamp(x, 0, w - 1);
      for (int c = 0; c < ch; ++c) {
        padded[static_cast<std::size_t>(x + r) * ch + c] = src[static_cast<std::size_t>(sx) * ch + c];
      }
    }
    float* dst = tmp.data.data() + y * row_len;
    for (int j = 0; j < kernel.size; ++j) {
      const float wj = taps[static_cast<std::size_t>(j)];
      const float* shifted = padded.data() + static_cast<std::size_t>(j) * ch;
      for (std::size_t i = 0; i < row_len; ++i) dst[i] += wj * shifted[i];
    }
  }

  // Vertical pass: rows are contiguous, so accumulate whole rows.
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    float* dst = out.data.data() + y * row_len;
    for (int j = -r; j <= r; ++j) {
      const int sy = std::clamp(y + j, 0, h - 1);
      const float wj = taps[static_cast<std::size_t>(j + r)];
      const float* src = tmp.data.data() + sy * row_len;
      for (std::size_t i = 0; i < row_len; ++i) dst[i] += wj * src[i];
    }
  }
  return out;
}

Image composite_occlusion(const Image& img, const Image& blurred, const OcclusionMask& mask) {
  if (mask.mask.width != img.width || mask.mask.height != img.height) {
    throw InvalidArgument("apply_occlusion: mask and image dimensions differ");
  }
  if (mask.opacity == Opacity::translucent_blur && !blurred.same_shape(img)) {
    throw InvalidArgument("apply_occlusion: blurred image shape differs");
  }
  Image out = img;
  const int ch = img.channels;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    if (!mask.mask.data[p]) continue;
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = p * ch + c;
      out.data[i] = mask.opacity == Opacity::opaque ? 0.5f : blurred.data[i];
    }
  }
  return out;
}

Image apply_occlusion(const Image& img, const OcclusionMask& mask, const GaussianKernel& kernel) {
  if (mask.mask.width != img.width || mask.mask.height != img.height) {
    throw InvalidArgument("apply_occlusion: mask and image dimensions differ");
  }
  if (mask.mask.count() == 0) return img;
  if (mask.opacity == Opacity::opaque) return composite_occlusion(img, Image{}, mask);
  return composite_occlusion(img, gaussian_blur(img, kernel), mask);
}

BevMask project_occlusion_to_bev(const std::vector<OcclusionMask>& masks,
                                 const std::vector<CameraModel>& rig, const BEVGridSpec& grid,
                                 const Pose& ego_pose, double threshold) {
  if (masks.size() != rig.size()) {
    throw InvalidArgument("project_occlusion_to_bev: need one mask per rig camera");
  }
  grid.validate();
  std::vector<Pose> cam_from_world;
  for (std::size_t c = 0; c < rig.size(); ++c) {
    const auto& k = rig[c].intrinsics;
    if (masks[c].mask.width != k.width || masks[c].mask.height != k.height) {
      throw InvalidArgument("project_occlusion_to_bev: mask size differs from camera " +
                            rig[c].name);
    }
    cam_from_world.push_back(camera_from_world(rig[c], ego_pose));
  }
  BevMask out(grid);
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      int seen = 0, occluded = 0;
      for (int iz = 0; iz < grid.nz; ++iz) {
        const Vec3 p_world = ego_pose.apply(
            Vec3(grid.cell_center_x(ix), grid.cell_center_y(iy), grid.level_center_z(iz)));
        for (std::size_t c = 0; c < rig.size(); ++c) {
          const auto& k = rig[c].intrinsics;
          const Vec3 pc = cam_from_world[c].apply(p_world);
          if (pc.z() <= kDefaultNearPlane) continue;
          const double u = k.fx * pc.x() / pc.z() + k.cx;
          const double v = k.fy * pc.y() / pc.z() + k.cy;
          if (!(u >= 0.0 && u < k.width && v >= 0.0 && v < k.height)) continue;
          ++seen;
          const int px = std::min(k.width - 1, static_cast<int>(std::lround(u)));
          const int py = std::min(k.height - 1, static_cast<int>(std::lround(v)));
          if (masks[c].mask.at(px, py)) ++occluded;
        }
      }
      if (seen > 0 && occluded >= threshold * seen) out.at(ix, iy) = 1;
    }
  }
  return out;
}

}  // namespace bevocc
