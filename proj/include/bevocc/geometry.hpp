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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bevocc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform mapping body coordinates into the parent frame:
/// p_parent = rotation * p_body + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, const Vec3& translation = Vec3::Zero());

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

  Pose inverse() const;
  /// (this ∘ other): first apply `other`, then `this`.
  Pose compose(const Pose& other) const;

  /// Orthonormality and unit determinant within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 800;
  int height = 448;

  /// Throws InvalidArgument naming the violated bound.
  void validate() const;
};

/// Pinhole camera: +z forward, +x right, +y down in the camera frame.
struct CameraModel {
  std::string name;
  CameraIntrinsics intrinsics;
  Pose extrinsics;  // ego-from-camera
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();

  /// Normalizes `direction`.
  static Ray through(const Vec3& origin, const Vec3& direction);
  Vec3 at(double t) const { return origin + t * direction; }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // along the optical axis
};

inline constexpr double kDefaultNearPlane = 0.1;

/// Projects a world point into `cam` mounted on an ego vehicle at `ego_pose`
/// (world-from-ego). Returns nullopt when the point is closer than the near
/// plane or falls outside [0,width)x[0,height).
std::optional<PixelProjection> project_point(const CameraModel& cam,
                                             const Vec3& point_world,
                                             const Pose& ego_pose,
                                             double near_plane = kDefaultNearPlane);

/// Inverse of project_point for a given optical-axis depth. Throws
/// InvalidArgument if depth <= 0.
Vec3 unproject_pixel(const CameraModel& cam, const Vec2& pixel, double depth,
                     const Pose& ego_pose);

/// World-frame ray from the camera center through pixel (u, v). Integer
/// coordinates address pixel centers.
Ray pixel_ray(const CameraModel& cam, double u, double v, const Pose& ego_pose);

/// Same ray with the world-from-camera pose precomputed
/// (ego_pose.compose(cam.extrinsics)); bit-identical to pixel_ray.
Ray pixel_ray(const CameraIntrinsics& k, const Pose& world_from_cam, double u, double v);

/// Camera-from-world transform, hoisted out of per-voxel loops.
Pose camera_from_world(const CameraModel& cam, const Pose& ego_pose);

/// Slab-method intersection with an oriented box. Returns the smallest t >= 0
/// at which the ray touches the box surface, or nullopt on a miss. A ray
/// starting inside the box reports its exit distance.
std::optional<double> ray_obb_intersect(const Ray& ray, const Vec3& box_center,
                                        const Vec3& box_half_extents,
                                        const Mat3& box_rotation);

// Built explicitly so the z row/column are exact 0/1 (ground points keep z == 0
// under planar ego transforms).
inline Mat3 yaw_rotation(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

// Rig calibration file (JSON, schema_version 1).
inline constexpr int kRigSchemaVersion = 1;

nlohmann::json rig_to_json(const std::vector<CameraModel>& rig,
                           const std::string& layout = "nuscenes_like");
std::vector<CameraModel> rig_from_json(const nlohmann::json& j);
void save_rig(const std::string& path, const std::vector<CameraModel>& rig);
std::vector<CameraModel> load_rig(const std::string& path);

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

}  // namespace bevocc
