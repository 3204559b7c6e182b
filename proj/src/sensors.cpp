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

#include "bevocc/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "bevocc/error.hpp"
#include "bevocc/rng.hpp"
#include "value_noise.hpp"

namespace bevocc {

namespace {

using detail::ValueNoise;

constexpr double kDeg = std::numbers::pi / 180.0;

// Camera axes (right, down, forward) expressed in the ego frame (forward,
// left, up) for a camera looking along +x.
Mat3 camera_axes_in_ego() {
  Mat3 r;
  r << 0.0, 0.0, 1.0,  //
      -1.0, 0.0, 0.0,  //
      0.0, -1.0, 0.0;
  return r;
}

CameraModel make_camera(const std::string& name, double yaw_deg, double hfov_deg,
                        const Vec3& mount, int width, int height) {
  CameraModel cam;
  cam.name = name;
  const double f = (width / 2.0) / std::tan(hfov_deg * kDeg / 2.0);
  cam.intrinsics = CameraIntrinsics{f, f, width / 2.0, height / 2.0, width, height};
  cam.extrinsics.rotation = yaw_rotation(yaw_deg * kDeg) * camera_axes_in_ego();
  cam.extrinsics.translation = mount;
  return cam;
}

Vec3 ground_color(const ValueNoise& noise, double x, double y) {
  const bool dark = ((static_cast<long long>(std::floor(x / 2.0)) +
                      static_cast<long long>(std::floor(y / 2.0))) & 1LL) != 0;
  const double base = dark ? 0.34 : 0.42;
  const double n = 0.6 * noise(x, y) + 0.4 * noise(0.25 * x + 97.0, 0.25 * y + 31.0);
  const double g = base + 0.16 * (n - 0.5);
  return {g, g * 0.98 + 0.01, g * 0.92 + 0.03};
}

const Vec3 kSkyColor(0.65, 0.78, 0.92);

Vec3 vehicle_base_color(std::uint32_t id) {
  const double h = std::fmod(0.61803398875 * id + 0.1, 1.0) * 6.0;
  const double s = 0.8;
  const double v = 0.9;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Shading by which box face was hit: top brightest, ends, then sides.
double face_shade(const VehicleBox& v, const Vec3& hit_world) {
  const Vec3 local = v.rotation().transpose() * (hit_world - v.center);
  int axis = 0;
  double best = -1.0;
  for (int a = 0; a < 3; ++a) {
    const double r = std::abs(local[a]) / v.half_extents[a];
    if (r > best) {
      best = r;
      axis = a;
    }
  }
  static constexpr double kShade[3] = {0.8, 0.65, 1.0};
  return kShade[axis];
}

bool is_visible_from(const Scene& scene, const Vec3& sensor, const Vec3& target,
                     int vehicle) {
  const Vec3 delta = target - sensor;
  const double dist = delta.norm();
  if (dist < 1e-9) return false;
  const Ray ray{sensor, delta / dist};
  const SceneHit hit = trace_scene(scene, ray);
  return hit.vehicle == vehicle && std::abs(hit.t - dist) <= 1e-6 * std::max(1.0, dist);
}

}  // namespace

std::vector<CameraModel> nuscenes_like_rig(int width, int height) {
  return {
      make_camera("front", 0.0, 70.0, Vec3(1.7, 0.0, 1.5), width, height),
      make_camera("front_left", 55.0, 70.0, Vec3(1.5, 0.7, 1.5), width, height),
      make_camera("front_right", -55.0, 70.0, Vec3(1.5, -0.7, 1.5), width, height),
      make_camera("back", 180.0, 110.0, Vec3(-1.0, 0.0, 1.5), width, height),
      make_camera("back_left", 110.0, 70.0, Vec3(-0.8, 0.7, 1.5), width, height),
      make_camera("back_right", -110.0, 70.0, Vec3(-0.8, -0.7, 1.5), width, height),
  };
}

double horizontal_fov(const CameraIntrinsics& k) {
  return std::atan(k.cx / k.fx) + std::atan((k.width - k.cx) / k.fx);
}

double camera_yaw(const CameraModel& cam) {
  const Vec3 forward = cam.extrinsics.rotation.col(2);
  return std::atan2(forward.y(), forward.x());
}

SceneHit trace_scene(const Scene& scene, const Ray& ray) {
  SceneHit best;
  best.t = std::numeric_limits<double>::infinity();
  if (ray.direction.z() < 0.0) {
    best.vehicle = -1;
    best.t = -ray.origin.z() / ray.direction.z();
  }
  for (std::size_t k = 0; k < scene.vehicles.size(); ++k) {
    const auto& v = scene.vehicles[k];
    if (auto t = ray_obb_intersect(ray, v.center, v.half_extents, v.rotation());
        t && *t < best.t) {
      best.t = *t;
      best.vehicle = static_cast<int>(k);
    }
  }
  if (best.vehicle == -2) best.t = 0.0;
  return best;
}

RenderResult render_camera(const Scene& scene, const CameraModel& cam) {
  const auto& k = cam.intrinsics;
  const int w = k.width;
  const int h = k.height;
  RenderResult out{Image(w, h, 3), LabelImage(w, h)};
  std::vector<double> depth(static_cast<std::size_t>(w) * h,
                            std::numeric_limits<double>::infinity());
  const ValueNoise noise(scene.ground_texture_seed);
  const Pose world_from_cam = scene.ego_pose.compose(cam.extrinsics);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Ray ray = pixel_ray(k, world_from_cam, x, y);
      Vec3 color = kSkyColor;
      if (ray.direction.z() < 0.0) {
        const double t = -ray.origin.z() / ray.direction.z();
        const Vec3 p = ray.at(t);
        color = ground_color(noise, p.x(), p.y());
        depth[static_cast<std::size_t>(y) * w + x] = t;
      }
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = static_cast<float>(color[c]);
    }
  }

  const Pose cam_from_world = camera_from_world(cam, scene.ego_pose);
  for (const auto& v : scene.vehicles) {
    const Mat3 rot = v.rotation();
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    int in_front = 0;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 offs((corner & 1) ? 1 : -1, (corner & 2) ? 1 : -1, (corner & 4) ? 1 : -1);
      const Vec3 pc = cam_from_world.apply(v.center + rot * offs.cwiseProduct(v.half_extents));
      if (pc.z() > kDefaultNearPlane) {
        ++in_front;
        const double u = k.fx * pc.x() / pc.z() + k.cx;
        const double vv = k.fy * pc.y() / pc.z() + k.cy;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, vv);
        vmax = std::max(vmax, vv);
      }
    }
    if (in_front == 0) continue;
    int x0 = 0, x1 = w - 1, y0 = 0, y1 = h - 1;
    if (in_front == 8) {  // all corners in front: projected hull bounds the box
      x0 = std::max(0, static_cast<int>(std::floor(umin)));
      x1 = std::min(w - 1, static_cast<int>(std::ceil(umax)));
      y0 = std::max(0, static_cast<int>(std::floor(vmin)));
      y1 = std::min(h - 1, static_cast<int>(std::ceil(vmax)));
    }
    const Vec3 base = vehicle_base_color(v.id);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Ray ray = pixel_ray(k, world_from_cam, x, y);
        const auto t = ray_obb_intersect(ray, v.center, v.half_extents, rot);
        const std::size_t idx = static_cast<std::size_t>(y) * w + x;
        if (!t || *t >= depth[idx]) continue;
        depth[idx] = *t;
        out.ids.data[idx] = v.id;
        const double shade = face_shade(v, ray.at(*t));
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = static_cast<float>(base[c] * shade);
      }
    }
  }
  return out;
}

PointCloud raycast_lidar(const Scene& scene, const LidarParams& params) {
  if (params.n_azimuth < 1) throw InvalidArgument("raycast_lidar: n_azimuth must be >= 1");
  PointCloud cloud;
  const Pose ego_from_world = scene.ego_pose.inverse();
  const Vec3 origin = scene.ego_pose.apply(Vec3(0.0, 0.0, params.sensor_height));
  for (int a = 0; a < params.n_azimuth; ++a) {
    const double az = 2.0 * std::numbers::pi * a / params.n_azimuth;
    for (double elev_deg : params.elevation_deg) {
      const double el = elev_deg * kDeg;
      const Vec3 dir_ego(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Ray ray{origin, scene.ego_pose.apply_direction(dir_ego).normalized()};
      const SceneHit hit = trace_scene(scene, ray);
      if (hit.vehicle == -2) continue;
      Vec3 p = ray.at(hit.t);
      if (hit.vehicle == -1) p.z() = 0.0;  // exactly on the ground plane
      cloud.points.push_back({ego_from_world.apply(p), 0.0});
    }
  }
  return cloud;
}

PointCloud simulate_radar(const Scene& scene, const RadarParams& params) {
  PointCloud cloud;
  if (params.n_returns_per_vehicle <= 0) return cloud;
  Rng rng(Rng::mix(scene.rng_seed, 0x7ADA7ull));
  const Pose ego_from_world = scene.ego_pose.inverse();
  const Vec3 sensor = scene.ego_pose.apply(Vec3(0.0, 0.0, params.sensor_height));

  struct Face {
    int axis;
    double sign;
    double area;
  };
  for (std::size_t k = 0; k < scene.vehicles.size(); ++k) {
    const auto& v = scene.vehicles[k];
    const Mat3 rot = v.rotation();
    std::vector<Face> faces;
    double total_area = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        Vec3 local = Vec3::Zero();
        local[axis] = sign * v.half_extents[axis];
        const Vec3 centre = v.center + rot * local;
        const Vec3 normal = rot.col(axis) * sign;
        if (normal.dot(sensor - centre) <= 0.0) continue;
        if (!is_visible_from(scene, sensor, centre, static_cast<int>(k))) continue;
        const int b = (axis + 1) % 3, c = (axis + 2) % 3;
        const double area = 4.0 * v.half_extents[b] * v.half_extents[c];
        faces.push_back({axis, sign, area});
        total_area += area;
      }
    }
    if (faces.empty()) continue;
    const Vec3 vel_world(v.velocity.x(), v.velocity.y(), 0.0);
    int accepted = 0;
    for (int attempt = 0;
         attempt < 4 * params.n_returns_per_vehicle && accepted < params.n_returns_per_vehicle;
         ++attempt) {
      double pick = rng.uniform() * total_area;
      const Face* face = &faces.back();
      for (const auto& f : faces) {
        if (pick < f.area) {
          face = &f;
          break;
        }
        pick -= f.area;
      }
      Vec3 local;
      local[face->axis] = face->sign * v.half_extents[face->axis];
      const int b = (face->axis + 1) % 3, c = (face->axis + 2) % 3;
      local[b] = rng.uniform(-1.0, 1.0) * v.half_extents[b];
      local[c] = rng.uniform(-1.0, 1.0) * v.half_extents[c];
      const Vec3 p = v.center + rot * local;
      const Vec3 noise(rng.normal(0.0, params.noise_sigma), rng.normal(0.0, params.noise_sigma),
                       rng.normal(0.0, params.noise_sigma));
      if (!is_visible_from(scene, sensor, p, static_cast<int>(k))) continue;
      const Vec3 dir = (p - sensor).normalized();
      const Vec3 p_noisy = p + noise;
      cloud.points.push_back({ego_from_world.apply(p_noisy), vel_world.dot(dir)});
      ++accepted;
    }
  }
  return cloud;
}

BevMask ground_truth_bev(const Scene& scene, const BEVGridSpec& grid) {
  grid.validate();
  BevMask mask(grid);
  const double cell = grid.cell_size();
  for (const auto& v : vehicles_in_ego(scene)) {
    const auto fp = v.footprint();
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& c : fp) {
      xmin = std::min(xmin, c.x());
      xmax = std::max(xmax, c.x());
      ymin = std::min(ymin, c.y());
      ymax = std::max(ymax, c.y());
    }
    const int ix0 = std::max(0, static_cast<int>(std::floor((xmin + grid.x_extent) / cell)) - 1);
    const int ix1 = std::min(grid.nx - 1, static_cast<int>(std::floor((xmax + grid.x_extent) / cell)) + 1);
    const int iy0 = std::max(0, static_cast<int>(std::floor((ymin + grid.y_extent) / cell)) - 1);
    const int iy1 = std::min(grid.ny - 1, static_cast<int>(std::floor((ymax + grid.y_extent) / cell)) + 1);
    const double cs = std::cos(v.yaw), sn = std::sin(v.yaw);
    for (int ix = ix0; ix <= ix1; ++ix) {
      for (int iy = iy0; iy <= iy1; ++iy) {
        const double dx = grid.cell_center_x(ix) - v.center.x();
        const double dy = grid.cell_center_y(iy) - v.center.y();
        const double lx = cs * dx + sn * dy;
        const double ly = -sn * dx + cs * dy;
        // Half-open footprint: [-h, h) along each local axis.
        if (lx >= -v.half_extents.x() && lx < v.half_extents.x() &&
            ly >= -v.half_extents.y() && ly < v.half_extents.y()) {
          mask.at(ix, iy) = 1;
        }
      }
    }
  }
  return mask;
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "x,y,z,radial_velocity\n";
  for (const auto& p : cloud.points) {
    out << fmt::format("{},{},{},{}\n", p.position.x(), p.position.y(),
                       p.position.z(), p.radial_velocity);
  }
  if (!out) throw IoError("failed writing " + path);
}

PointCloud read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,z,radial_velocity", 0) != 0) {
    throw IoError(path + ": missing x,y,z,radial_velocity header");
  }
  PointCloud cloud;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double vals[4];
    char sep;
    if (!(ss >> vals[0] >> sep >> vals[1] >> sep >> vals[2] >> sep >> vals[3])) {
      throw IoError(path + ": malformed row at line " + std::to_string(lineno));
    }
    cloud.points.push_back({Vec3(vals[0], vals[1], vals[2]), vals[3]});
  }
  return cloud;
}

}  // namespace bevocc
