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

#include "bevocc/bev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "bevocc/error.hpp"
#include "binary_io.hpp"

namespace bevocc {

std::string modality_name(ModalitySet m) {
  std::string out;
  auto append = [&](const char* s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  if (m & kCamera) append("c");
  if (m & kRadar) append("r");
  if (m & kLidar) append("l");
  return out;
}

ModalitySet parse_modality(const std::string& s) {
  ModalitySet m = 0;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find('+', start), s.size());
    std::string tok = s.substr(start, end - start);
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
    ModalitySet bit = 0;
    if (tok == "c" || tok == "camera") bit = kCamera;
    else if (tok == "r" || tok == "radar") bit = kRadar;
    else if (tok == "l" || tok == "lidar") bit = kLidar;
    if (bit == 0 || (m & bit)) throw InvalidArgument("invalid modality '" + s + "'");
    m |= bit;
    start = end + 1;
  }
  return m;
}

VoxelGrid lift_camera_features(std::span<const Image> feature_images,
                               const std::vector<CameraModel>& rig, const Pose& ego_pose,
                               const BEVGridSpec& spec, const LiftOptions& options) {
  spec.validate();
  if (feature_images.size() != rig.size()) {
    throw InvalidArgument("lift_camera_features: need one feature image per camera");
  }
  if (options.feature_stride < 1) {
    throw InvalidArgument("lift_camera_features: feature_stride must be >= 1");
  }
  const int channels = feature_images.empty() ? 0 : feature_images.front().channels;
  for (const auto& f : feature_images) {
    if (f.channels != channels) {
      throw InvalidArgument("lift_camera_features: feature images disagree on channel count");
    }
  }
  VoxelGrid grid(spec, channels);
  if (channels == 0) return grid;

  struct CamCache {
    Mat3 rot;
    Vec3 trans;
    CameraIntrinsics k;
    const Image* features;
  };
  std::vector<CamCache> cams;
  for (std::size_t c = 0; c < rig.size(); ++c) {
    const Pose cfw = camera_from_world(rig[c], ego_pose);
    cams.push_back({cfw.rotation, cfw.translation, rig[c].intrinsics, &feature_images[c]});
  }
  const double inv_stride = 1.0 / options.feature_stride;
  std::vector<float> acc(static_cast<std::size_t>(channels));

  for (int ix = 0; ix < spec.nx; ++ix) {
    for (int iy = 0; iy < spec.ny; ++iy) {
      for (int iz = 0; iz < spec.nz; ++iz) {
        const Vec3 p_world = ego_pose.apply(
            Vec3(spec.cell_center_x(ix), spec.cell_center_y(iy), spec.level_center_z(iz)));
        std::fill(acc.begin(), acc.end(), 0.0f);
        int seen = 0;
        for (const auto& cam : cams) {
          const Vec3 pc = cam.rot * p_world + cam.trans;
          if (pc.z() <= options.near_plane) continue;
          const double u = cam.k.fx * pc.x() / pc.z() + cam.k.cx;
          const double v = cam.k.fy * pc.y() / pc.z() + cam.k.cy;
          if (!(u >= 0.0 && u < cam.k.width && v >= 0.0 && v < cam.k.height)) continue;
          const Image& f = *cam.features;
          const double fu = u * inv_stride;
          const double fv = v * inv_stride;
          const int x0 = std::min(f.width - 1, static_cast<int>(fu));
          const int y0 = std::min(f.height - 1, static_cast<int>(fv));
          const int x1 = std::min(f.width - 1, x0 + 1);
          const int y1 = std::min(f.height - 1, y0 + 1);
          const auto ax = static_cast<float>(fu - x0);
          const auto ay = static_cast<float>(fv - y0);
          const float w00 = (1.0f - ax) * (1.0f - ay), w10 = ax * (1.0f - ay);
          const float w01 = (1.0f - ax) * ay, w11 = ax * ay;
          const float* p00 = &f.data[f.index(x0, y0)];
          const float* p10 = &f.data[f.index(x1, y0)];
          const float* p01 = &f.data[f.index(x0, y1)];
          const float* p11 = &f.data[f.index(x1, y1)];
          for (int c = 0; c < channels; ++c) {
            acc[static_cast<std::size_t>(c)] +=
                w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
          }
          ++seen;
        }
        if (seen == 0) continue;
        float* dst = &grid.data[grid.index(ix, iy, iz, 0)];
        const float inv = 1.0f / static_cast<float>(seen);
        for (int c = 0; c < channels; ++c) {
          dst[c] = seen == 1 ? acc[static_cast<std::size_t>(c)] : acc[static_cast<std::size_t>(c)] * inv;
        }
      }
    }
  }
  return grid;
}

BEVFeatureMap flatten_z(const VoxelGrid& grid, ModalitySet modality) {
  BEVFeatureMap out;
  out.spec = grid.spec;
  out.channels = grid.spec.nz * grid.channels;
  out.modality = modality;
  // ((ix*ny + iy)*nz + iz)*C + c == (ix*ny + iy)*(nz*C) + (iz*C + c)
  out.data = grid.data;
  return out;
}

BEVFeatureMap voxelize_points(const PointCloud& cloud, const BEVGridSpec& spec,
                              bool with_velocity, VelocityPooling pooling) {
  spec.validate();
  const int nz = spec.nz;
  BEVFeatureMap out(spec, with_velocity ? 2 * nz : nz, with_velocity ? kRadar : kLidar);
  std::vector<int> counts;
  if (with_velocity && pooling == VelocityPooling::mean_abs) {
    counts.assign(static_cast<std::size_t>(spec.cells()) * nz, 0);
  }
  for (const auto& p : cloud.points) {
    const int ix = spec.bin_x(p.position.x());
    const int iy = spec.bin_y(p.position.y());
    const int iz = spec.bin_z(p.position.z());
    if (ix < 0 || iy < 0 || iz < 0) continue;
    out.at(ix, iy, iz) = 1.0f;
    if (!with_velocity) continue;
    float& vel = out.at(ix, iy, nz + iz);
    const auto speed = static_cast<float>(std::abs(p.radial_velocity));
    if (pooling == VelocityPooling::max_abs) {
      vel = std::max(vel, speed);
    } else {
      vel += speed;
      ++counts[static_cast<std::size_t>(spec.cell_index(ix, iy)) * nz + iz];
    }
  }
  if (!counts.empty()) {
    for (int cell = 0; cell < spec.cells(); ++cell) {
      for (int iz = 0; iz < nz; ++iz) {
        const int n = counts[static_cast<std::size_t>(cell) * nz + iz];
        if (n > 1) out.data[static_cast<std::size_t>(cell) * out.channels + nz + iz] /= static_cast<float>(n);
      }
    }
  }
  return out;
}

namespace {
int lowest_bit(ModalitySet m) { return m & (-m); }
}  // namespace

BEVFeatureMap fuse(std::span<const BEVFeatureMap> maps) {
  if (maps.empty()) throw InvalidArgument("fuse: need at least one map");
  std::vector<const BEVFeatureMap*> order;
  for (const auto& m : maps) {
    if (!(m.spec == maps.front().spec)) throw InvalidArgument("fuse: grid specs differ");
    order.push_back(&m);
  }
  std::stable_sort(order.begin(), order.end(), [](const BEVFeatureMap* a, const BEVFeatureMap* b) {
    return lowest_bit(a->modality) < lowest_bit(b->modality);
  });
  int channels = 0;
  ModalitySet modality = 0;
  for (const auto* m : order) {
    channels += m->channels;
    modality |= m->modality;
  }
  BEVFeatureMap out(maps.front().spec, channels, modality);
  for (int cell = 0; cell < out.spec.cells(); ++cell) {
    float* dst = out.data.data() + static_cast<std::size_t>(cell) * channels;
    for (const auto* m : order) {
      const float* src = m->data.data() + static_cast<std::size_t>(cell) * m->channels;
      std::copy(src, src + m->channels, dst);
      dst += m->channels;
    }
  }
  return out;
}

BEVFeatureMap slice_channels(const BEVFeatureMap& map, int first, int count) {
  if (first < 0 || count < 0 || first + count > map.channels) {
    throw InvalidArgument("slice_channels: range outside the map");
  }
  BEVFeatureMap out(map.spec, count, map.modality);
  for (int cell = 0; cell < map.spec.cells(); ++cell) {
    const float* src = map.data.data() + static_cast<std::size_t>(cell) * map.channels + first;
    std::copy(src, src + count, out.data.data() + static_cast<std::size_t>(cell) * count);
  }
  return out;
}

using detail::get_u32;
using detail::put_u32;

void save_bevf(const std::string& path, const BEVFeatureMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("BEVF", 4);
  put_u32(out, kBevfVersion);
  put_u32(out, static_cast<std::uint32_t>(map.spec.nx));
  put_u32(out, static_cast<std::uint32_t>(map.spec.ny));
  put_u32(out, static_cast<std::uint32_t>(map.channels));
  for (float f : map.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  if (!out) throw IoError("failed writing " + path);

  std::ofstream side(path + ".json");
  if (!side) throw IoError("cannot write " + path + ".json");
  side << nlohmann::json{{"version", kBevfVersion},
                         {"spec", grid_to_json(map.spec)},
                         {"channels", map.channels},
                         {"modality", modality_name(map.modality)}}
              .dump(2)
       << '\n';
}

BEVFeatureMap load_bevf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::array<unsigned char, 20> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!in || std::memcmp(header.data(), "BEVF", 4) != 0) {
    throw IoError(path + ": not a BEVF file");
  }
  if (get_u32(header.data() + 4) != kBevfVersion) throw IoError(path + ": unsupported BEVF version");
  const auto nx = static_cast<int>(get_u32(header.data() + 8));
  const auto ny = static_cast<int>(get_u32(header.data() + 12));
  const auto ch = static_cast<int>(get_u32(header.data() + 16));

  BEVGridSpec spec;
  ModalitySet modality = 0;
  std::ifstream side(path + ".json");
  if (side) {
    try {
      nlohmann::json j;
      side >> j;
      spec = grid_from_json(j.at("spec"));
      const auto name = j.value("modality", std::string{});
      if (!name.empty()) modality = parse_modality(name);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ".json: " + e.what());
    }
  }
  if (spec.nx != nx || spec.ny != ny) {
    if (side) throw IoError(path + ": header and sidecar disagree on grid size");
    spec.nx = nx;
    spec.ny = ny;
    spec.y_extent = spec.x_extent * ny / nx;
  }
  BEVFeatureMap map(spec, ch, modality);
  std::vector<unsigned char> raw(map.data.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw IoError(path + ": truncated payload");
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    const std::uint32_t bits = get_u32(raw.data() + 4 * i);
    std::memcpy(&map.data[i], &bits, 4);
  }
  return map;
}

PackedBEV PackedBEV::pack(const BEVFeatureMap& map) {
  PackedBEV p;
  p.spec = map.spec;
  p.channels = map.channels;
  p.modality = map.modality;
  p.data.resize(map.data.size());
  for (std::size_t i = 0; i < map.data.size(); ++i) p.data[i] = Eigen::half(map.data[i]);
  return p;
}

void FeatureStack::check_spec(const BEVGridSpec& s) {
  if (parts_.empty()) {
    spec_ = s;
  } else if (!(spec_ == s)) {
    throw InvalidArgument("FeatureStack: grid specs differ");
  }
}

void FeatureStack::add(const BEVFeatureMap& map) {
  check_spec(map.spec);
  parts_.push_back({&map, nullptr, map.channels});
  channels_ += map.channels;
  modality_ |= map.modality;
}

void FeatureStack::add(std::shared_ptr<const PackedBEV> packed) {
  check_spec(packed->spec);
  channels_ += packed->channels;
  modality_ |= packed->modality;
  const int ch = packed->channels;
  parts_.push_back({nullptr, std::move(packed), ch});
}

void FeatureStack::load(int cell, float* out) const {
  for (const auto& part : parts_) {
    const std::size_t base = static_cast<std::size_t>(cell) * part.channels;
    if (part.f32) {
      std::copy_n(part.f32->data.data() + base, part.channels, out);
    } else {
      const Eigen::half* src = part.f16->data.data() + base;
      for (int c = 0; c < part.channels; ++c) out[c] = static_cast<float>(src[c]);
    }
    out += part.channels;
  }
}

}  // namespace bevocc
