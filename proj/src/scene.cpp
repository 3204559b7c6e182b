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

#include "bevocc/scene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "bevocc/error.hpp"
#include "bevocc/rng.hpp"

namespace bevocc {

namespace {

constexpr double kPlacementGap = 0.25;  // metres of clearance between footprints
const Vec3 kEgoHalfExtents(3.4, 2.0, 1.0);

std::array<Vec2, 4> rect_corners(const Vec2& c, double hx, double hy, double yaw) {
  const double cs = std::cos(yaw);
  const double sn = std::sin(yaw);
  const Vec2 ax(cs, sn);
  const Vec2 ay(-sn, cs);
  return {c + hx * ax + hy * ay, c - hx * ax + hy * ay, c - hx * ax - hy * ay,
          c + hx * ax - hy * ay};
}

}  // namespace

std::array<Vec2, 4> VehicleBox::footprint() const {
  return rect_corners(center.head<2>(), half_extents.x(), half_extents.y(), yaw);
}

bool footprints_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  auto separated_on_edges_of = [](const std::array<Vec2, 4>& p, const std::array<Vec2, 4>& q) {
    for (int i = 0; i < 4; ++i) {
      const Vec2 e = p[(i + 1) % 4] - p[i];
      const Vec2 axis(-e.y(), e.x());
      double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
      for (const auto& v : p) {
        pmin = std::min(pmin, axis.dot(v));
        pmax = std::max(pmax, axis.dot(v));
      }
      for (const auto& v : q) {
        qmin = std::min(qmin, axis.dot(v));
        qmax = std::max(qmax, axis.dot(v));
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !separated_on_edges_of(a, b) && !separated_on_edges_of(b, a);
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  if (params.n_vehicles < 0) throw InvalidArgument("generate_scene: n_vehicles must be >= 0");
  if (!(params.world_extent > 0.0)) {
    throw InvalidArgument("generate_scene: world_extent must be positive");
  }
  Rng rng(seed);
  Scene scene;
  scene.rng_seed = seed;
  scene.ground_texture_seed = rng.next_u64();

  const auto ego_fp = rect_corners(Vec2::Zero(), kEgoHalfExtents.x(), kEgoHalfExtents.y(), 0.0);
  const long long n = params.n_vehicles;
  const long long max_attempts = 10 * n * n;
  long long attempts = 0;
  std::vector<std::array<Vec2, 4>> inflated;

  for (int i = 0; i < params.n_vehicles; ++i) {
    VehicleBox v;
    v.id = static_cast<std::uint32_t>(i + 1);
    while (true) {
      if (attempts++ >= max_attempts) {
        throw GenerationFailed("generate_scene: could not place " + std::to_string(n) +
                               " vehicles within +/-" + std::to_string(params.world_extent) +
                               " m after " + std::to_string(max_attempts) + " attempts");
      }
      if (rng.uniform() < 0.2) {  // van / truck
        v.half_extents = Vec3(rng.uniform(2.5, 3.0), rng.uniform(1.0, 1.25), rng.uniform(1.1, 1.6));
      } else {
        v.half_extents = Vec3(rng.uniform(1.9, 2.4), rng.uniform(0.85, 1.0), rng.uniform(0.7, 0.85));
      }
      v.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double radius = std::hypot(v.half_extents.x(), v.half_extents.y());
      const double lim = params.world_extent - radius;
      if (lim <= 0.0) continue;
      v.center = Vec3(rng.uniform(-lim, lim), rng.uniform(-lim, lim), v.half_extents.z());
      const auto fp = rect_corners(v.center.head<2>(), v.half_extents.x() + kPlacementGap,
                                   v.half_extents.y() + kPlacementGap, v.yaw);
      bool clear = !footprints_overlap(fp, ego_fp);
      for (std::size_t k = 0; clear && k < inflated.size(); ++k) {
        clear = !footprints_overlap(fp, inflated[k]);
      }
      if (!clear) continue;
      inflated.push_back(rect_corners(v.center.head<2>(), v.half_extents.x(),
                                      v.half_extents.y(), v.yaw));
      break;
    }
    if (rng.uniform() < 0.3) {
      v.velocity = Vec2::Zero();
    } else {
      const double speed = rng.uniform(0.5, 1.5) * params.ego_speed;
      v.velocity = speed * Vec2(std::cos(v.yaw), std::sin(v.yaw));
    }
    scene.vehicles.push_back(v);
  }
  return scene;
}

std::vector<VehicleBox> vehicles_in_ego(const Scene& scene) {
  const Pose ego_from_world = scene.ego_pose.inverse();
  const double ego_yaw = std::atan2(scene.ego_pose.rotation(1, 0), scene.ego_pose.rotation(0, 0));
  std::vector<VehicleBox> out = scene.vehicles;
  for (auto& v : out) {
    v.center = ego_from_world.apply(v.center);
    v.yaw -= ego_yaw;
    const Vec3 vel = ego_from_world.apply_direction(Vec3(v.velocity.x(), v.velocity.y(), 0.0));
    v.velocity = vel.head<2>();
  }
  return out;
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json vehicles = nlohmann::json::array();
  for (const auto& v : scene.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"center", {v.center.x(), v.center.y(), v.center.z()}},
                        {"half_extents",
                         {v.half_extents.x(), v.half_extents.y(), v.half_extents.z()}},
                        {"yaw", v.yaw},
                        {"velocity", {v.velocity.x(), v.velocity.y()}}});
  }
  return {{"schema_version", kSceneSchemaVersion},
          {"ego_pose", pose_to_json(scene.ego_pose)},
          {"ground_texture_seed", scene.ground_texture_seed},
          {"rng_seed", scene.rng_seed},
          {"vehicles", vehicles}};
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSceneSchemaVersion) {
      throw ValidationError("scene: unsupported schema_version");
    }
    Scene s;
    s.ego_pose = pose_from_json(j.at("ego_pose"));
    s.ground_texture_seed = j.at("ground_texture_seed").get<std::uint64_t>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    std::set<std::uint32_t> ids;
    for (const auto& jv : j.at("vehicles")) {
      VehicleBox v;
      v.id = jv.at("id").get<std::uint32_t>();
      if (v.id == 0 || !ids.insert(v.id).second) {
        throw ValidationError("scene: vehicle ids must be positive and unique");
      }
      const auto& c = jv.at("center");
      const auto& h = jv.at("half_extents");
      const auto& vel = jv.at("velocity");
      v.center = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
      v.half_extents = Vec3(h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>());
      v.yaw = jv.at("yaw").get<double>();
      v.velocity = Vec2(vel.at(0).get<double>(), vel.at(1).get<double>());
      s.vehicles.push_back(v);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene: ") + e.what());
  }
}

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scene file: " + path);
  out << scene_to_json(scene).dump(2) << '\n';
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scene file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed scene file " + path + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace bevocc
