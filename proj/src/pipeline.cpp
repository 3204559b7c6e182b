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

#include "bevocc/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "bevocc/error.hpp"
#include "bevocc/features.hpp"
#include "bevocc/rng.hpp"

namespace bevocc {

std::uint64_t scene_seed(std::uint64_t run_seed, Split split, int index) {
  return Rng::mix(Rng::mix(run_seed, static_cast<std::uint64_t>(split)),
                  static_cast<std::uint64_t>(index));
}

Scene make_scene(const DataConfig& data, std::uint64_t seed) {
  Rng rng(seed);
  SceneParams params;
  params.n_vehicles = static_cast<int>(rng.uniform_int(data.min_vehicles, data.max_vehicles));
  params.world_extent = data.world_extent;
  params.ego_speed = data.ego_speed;
  return generate_scene(Rng::mix(seed, 1), params);
}

std::vector<Image> SensorFrame::colors() const {
  std::vector<Image> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back(v.color);
  return out;
}

SensorFrame simulate_frame(const Scene& scene, const std::vector<CameraModel>& rig,
                           const SensorConfig& sensors, const BEVGridSpec& grid) {
  SensorFrame f;
  f.scene = scene;
  for (const auto& cam : rig) f.views.push_back(render_camera(scene, cam));
  f.lidar = raycast_lidar(scene, sensors.lidar);
  f.radar = simulate_radar(scene, sensors.radar);
  f.gt = ground_truth_bev(scene, grid);
  return f;
}

namespace {
Image subsample(const Image& img, int stride) {
  if (stride == 1) return img;
  Image out((img.width + stride - 1) / stride, (img.height + stride - 1) / stride, img.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      std::copy_n(&img.data[img.index(x * stride, y * stride)], img.channels,
                  &out.data[out.index(x, y)]);
    }
  }
  return out;
}
}  // namespace

BEVFeatureMap camera_bev(std::span<const Image> images, const std::vector<CameraModel>& rig,
                         const Pose& ego_pose, const BEVGridSpec& grid, int feature_stride) {
  std::vector<Image> features;
  features.reserve(images.size());
  for (const auto& img : images) features.push_back(subsample(encode_features(img), feature_stride));
  LiftOptions opts;
  opts.feature_stride = feature_stride;
  return flatten_z(lift_camera_features(features, rig, ego_pose, grid, opts), kCamera);
}

BEVFeatureMap lidar_bev(const PointCloud& cloud, const BEVGridSpec& grid) {
  return voxelize_points(cloud, grid, false);
}

BEVFeatureMap radar_bev(const PointCloud& cloud, const BEVGridSpec& grid, VelocityPooling pooling) {
  return voxelize_points(cloud, grid, true, pooling);
}

OcclusionSynth::OcclusionSynth(std::vector<CameraModel> rig, OcclusionConfig cfg)
    : rig_(std::move(rig)), cfg_(std::move(cfg)), kernel_(cfg_.kernel()) {
  // Ring order by yaw; with pairing, each camera gives up only the region it
  // shares with its counter-clockwise neighbour.
  std::vector<std::size_t> ring(rig_.size());
  std::iota(ring.begin(), ring.end(), 0);
  std::sort(ring.begin(), ring.end(), [&](std::size_t a, std::size_t b) {
    return camera_yaw(rig_[a]) < camera_yaw(rig_[b]);
  });
  overlap_.resize(rig_.size());
  for (std::size_t r = 0; r < ring.size(); ++r) {
    const auto& cam = rig_[ring[r]];
    OcclusionMask m;
    if (cfg_.overlap_pairing == OverlapPairing::all || rig_.size() < 2) {
      m = overlap_region_mask(rig_, cam, cfg_.reference_range);
    } else {
      const auto& next = rig_[ring[(r + 1) % ring.size()]];
      m = overlap_region_mask({cam, next}, cam, cfg_.reference_range);
    }
    m.opacity = cfg_.opacity;
    overlap_[ring[r]] = std::move(m);
  }
  if (!cfg_.mask_dir.empty()) {
    namespace fs = std::filesystem;
    for (const auto& cam : rig_) {
      const fs::path p = fs::path(cfg_.mask_dir) / (cam.name + ".pgm");
      if (!fs::exists(p)) throw IoError("mask directory is missing " + p.string());
      auto m = load_mask_file(p.string(), cam.intrinsics.width, cam.intrinsics.height);
      m.opacity = cfg_.opacity;
      external_.push_back(std::move(m));
    }
  }
}

std::vector<OcclusionMask> OcclusionSynth::masks(OcclusionMode mode, std::uint64_t seed,
                                                 std::uint64_t run_seed) const {
  const std::uint64_t base =
      cfg_.fixed_mask ? Rng::mix(run_seed, 0x4649584544ull) : seed;
  std::vector<OcclusionMask> out;
  for (std::size_t c = 0; c < rig_.size(); ++c) {
    const auto& k = rig_[c].intrinsics;
    const std::uint64_t s = Rng::mix(Rng::mix(base, static_cast<std::uint64_t>(mode)), c);
    OcclusionMask m;
    switch (mode) {
      case OcclusionMode::none:
        m = OcclusionMask::empty(k.width, k.height);
        break;
      case OcclusionMode::random_box:
        m = random_box_mask(k.width, k.height, s, cfg_.side_fraction);
        break;
      case OcclusionMode::overlap:
        m = overlap_[c];
        break;
      case OcclusionMode::realistic:
        if (!external_.empty()) {
          m = external_[c];
        } else {
          m = procedural_soiling_mask(k.width, k.height, s, {cfg_.n_blobs, cfg_.coverage});
        }
        break;
    }
    m.opacity = cfg_.opacity;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Image> OcclusionSynth::blur_all(std::span<const Image> images) const {
  std::vector<Image> out(images.size());
  if (cfg_.opacity != Opacity::translucent_blur) return out;
  for (std::size_t i = 0; i < images.size(); ++i) out[i] = gaussian_blur(images[i], kernel_);
  return out;
}

std::vector<Image> OcclusionSynth::apply(std::span<const Image> images, std::span<const Image> blurred,
                                         const std::vector<OcclusionMask>& masks) const {
  if (images.size() != masks.size()) throw InvalidArgument("occlusion: need one mask per view");
  std::vector<Image> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (masks[i].mask.count() == 0) {
      out.push_back(images[i]);
    } else if (masks[i].opacity == Opacity::opaque) {
      out.push_back(composite_occlusion(images[i], Image{}, masks[i]));
    } else {
      out.push_back(composite_occlusion(images[i], blurred[i], masks[i]));
    }
  }
  return out;
}

}  // namespace bevocc
