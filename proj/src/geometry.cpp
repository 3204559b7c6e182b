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

#include "bevocc/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "bevocc/error.hpp"

namespace bevocc {

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  Pose p;
  p.rotation = yaw_rotation(yaw);
  p.translation = translation;
  return p;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

bool Pose::is_valid(double tol) const {
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

Pose compose(const Pose& a, const Pose& b) { return a.compose(b); }
Pose invert(const Pose& p) { return p.inverse(); }

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvalidArgument("camera intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("camera intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("camera intrinsics: principal point outside the image");
  }
}

Ray Ray::through(const Vec3& origin, const Vec3& direction) {
  return Ray{origin, direction.normalized()};
}

Pose camera_from_world(const CameraModel& cam, const Pose& ego_pose) {
  return ego_pose.compose(cam.extrinsics).inverse();
}

std::optional<PixelProjection> project_point(const CameraModel& cam,
                                             const Vec3& point_world,
                                             const Pose& ego_pose,
                                             double near_plane) {
  const Vec3 p = camera_from_world(cam, ego_pose).apply(point_world);
  if (p.z() <= near_plane) return std::nullopt;
  const auto& k = cam.intrinsics;
  const double u = k.fx * p.x() / p.z() + k.cx;
  const double v = k.fy * p.y() / p.z() + k.cy;
  if (!(u >= 0.0 && u < k.width && v >= 0.0 && v < k.height)) return std::nullopt;
  return PixelProjection{u, v, p.z()};
}

Vec3 unproject_pixel(const CameraModel& cam, const Vec2& pixel, double depth,
                     const Pose& ego_pose) {
  if (!(depth > 0.0)) {
    throw InvalidArgument("unproject_pixel: depth must be positive");
  }
  const auto& k = cam.intrinsics;
  const Vec3 p_cam((pixel.x() - k.cx) / k.fx * depth,
                   (pixel.y() - k.cy) / k.fy * depth, depth);
  return ego_pose.compose(cam.extrinsics).apply(p_cam);
}

Ray pixel_ray(const CameraModel& cam, double u, double v, const Pose& ego_pose) {
  return pixel_ray(cam.intrinsics, ego_pose.compose(cam.extrinsics), u, v);
}

Ray pixel_ray(const CameraIntrinsics& k, const Pose& world_from_cam, double u, double v) {
  const Vec3 d_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  return Ray{world_from_cam.translation,
             (world_from_cam.rotation * d_cam).normalized()};
}

std::optional<double> ray_obb_intersect(const Ray& ray, const Vec3& box_center,
                                        const Vec3& box_half_extents,
                                        const Mat3& box_rotation) {
  const Vec3 o = box_rotation.transpose() * (ray.origin - box_center);
  const Vec3 d = box_rotation.transpose() * ray.direction;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double h = box_half_extents[axis];
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < -h || o[axis] > h) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d[axis];
    double t0 = (-h - o[axis]) * inv;
    double t1 = (h - o[axis]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far < 0.0) return std::nullopt;
  return t_near >= 0.0 ? t_near : t_far;
}

nlohmann::json pose_to_json(const Pose& p) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  return {{"rotation", rot},
          {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  const auto& rot = j.at("rotation");
  const auto& t = j.at("translation");
  if (rot.size() != 9 || t.size() != 3) {
    throw ValidationError("pose: rotation needs 9 values and translation 3");
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(r * 3 + c).get<double>();
  for (int i = 0; i < 3; ++i) p.translation[i] = t.at(i).get<double>();
  if (!p.is_valid(1e-6)) throw ValidationError("pose: rotation is not orthonormal");
  return p;
}

nlohmann::json rig_to_json(const std::vector<CameraModel>& rig,
                           const std::string& layout) {
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& cam : rig) {
    nlohmann::json c = pose_to_json(cam.extrinsics);
    c["name"] = cam.name;
    c["fx"] = cam.intrinsics.fx;
    c["fy"] = cam.intrinsics.fy;
    c["cx"] = cam.intrinsics.cx;
    c["cy"] = cam.intrinsics.cy;
    c["width"] = cam.intrinsics.width;
    c["height"] = cam.intrinsics.height;
    cams.push_back(std::move(c));
  }
  return {{"schema_version", kRigSchemaVersion}, {"layout", layout}, {"cameras", cams}};
}

std::vector<CameraModel> rig_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kRigSchemaVersion) {
      throw ValidationError("rig: unsupported schema_version");
    }
    std::vector<CameraModel> rig;
    std::set<std::string> names;
    for (const auto& c : j.at("cameras")) {
      CameraModel cam;
      cam.name = c.at("name").get<std::string>();
      if (!names.insert(cam.name).second) {
        throw ValidationError("rig: duplicate camera name '" + cam.name + "'");
      }
      cam.intrinsics.fx = c.at("fx").get<double>();
      cam.intrinsics.fy = c.at("fy").get<double>();
      cam.intrinsics.cx = c.at("cx").get<double>();
      cam.intrinsics.cy = c.at("cy").get<double>();
      cam.intrinsics.width = c.at("width").get<int>();
      cam.intrinsics.height = c.at("height").get<int>();
      cam.intrinsics.validate();
      cam.extrinsics = pose_from_json(c);
      rig.push_back(std::move(cam));
    }
    return rig;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rig: ") + e.what());
  }
}

void save_rig(const std::string& path, const std::vector<CameraModel>& rig) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write rig file: " + path);
  out << rig_to_json(rig).dump(2) << '\n';
}

std::vector<CameraModel> load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read rig file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed rig file " + path + ": " + e.what());
  }
  return rig_from_json(j);
}

}  // namespace bevocc
