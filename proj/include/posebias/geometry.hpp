#pragma once

// Camera conventions shared by every module.
//
// World frame: right-handed, up = +Z, ground plane z = 0.
// Camera frame: x right, y image-down, z forward (optical axis).
// Pixel (u, v) addresses the pixel centre at integer coordinates; u is the column.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "posebias/error.hpp"

namespace posebias {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Ground-plane normal (world up).
inline Vec3 world_up() { return Vec3::UnitZ(); }
// Camera depth axis in the camera frame.
inline Vec3 camera_depth_axis() { return Vec3::UnitZ(); }

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    require(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive");
    require(width >= 1 && height >= 1, "intrinsics: image dimensions must be >= 1");
    require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height,
            "intrinsics: principal point must lie inside the image");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  // K^-1 (u, v, 1): the ray through a pixel with unit third component.
  Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

  Vec2 project(const Vec3& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }

  // Intrinsics for the same camera after resizing the image to new_height x new_width.
  // Pixel centres stay at integer coordinates, so the principal point maps through
  // (c + 0.5) * scale - 0.5.
  CameraIntrinsics rescaled(int new_height, int new_width) const {
    require(new_height >= 1 && new_width >= 1, "intrinsics: resize target must be >= 1");
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    return {fx * sx, fy * sy, (cx + 0.5) * sx - 0.5, (cy + 0.5) * sy - 0.5, new_width, new_height};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

// 3DoF camera pose prior. Pitch is the angle between the optical axis and world up:
// pi/2 looks at the horizon, pi looks straight down.
struct PosePrior {
  double roll = 0.0;
  double pitch = kPi / 2;
  double height = 1.5;

  void validate() const {
    require(std::isfinite(roll), "pose prior: roll must be finite");
    require(pitch > 0.0 && pitch < kPi,
            "pose prior: pitch must lie in (0, pi), got " + std::to_string(pitch));
    require(height > 0.0 && std::isfinite(height),
            "pose prior: height must be > 0, got " + std::to_string(height));
  }

  bool operator==(const PosePrior&) const = default;
};

// World-from-camera rotation and camera centre in world coordinates.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  double height() const { return position.z(); }
};

inline bool is_rotation(const Mat3& m, double tolerance = 1e-9) {
  if (!m.allFinite()) return false;
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(m.determinant() - 1.0) <= tolerance;
}

namespace detail {

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c;
  return m;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

// Camera axes in world coordinates at pitch pi/2, roll 0, yaw 0:
// right = -Y, image-down = -Z, forward = +X.
inline Mat3 canonical_frame() {
  Mat3 m;
  m << 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0;
  return m;
}

}  // namespace detail

// R = Rz_world(yaw) * canonical * Rx_cam(pi/2 - pitch) * Rz_cam(roll), t = (0, 0, h).
// Yaw only left-multiplies by a rotation about world Z, so the third row of R (and
// everything derived from heights) is independent of yaw bit for bit.
inline CameraPose pose_from_prior(const PosePrior& prior, double yaw = 0.0) {
  CameraPose pose;
  const Mat3 tilted =
      detail::canonical_frame() * detail::rot_x(kPi / 2 - prior.pitch) * detail::rot_z(prior.roll);
  pose.rotation = detail::rot_z(yaw) * tilted;
  pose.position = Vec3(0.0, 0.0, prior.height);
  return pose;
}

// Rotation taking vectors in the `from` camera frame to the `to` camera frame.
inline Mat3 relative_rotation(const CameraPose& from, const CameraPose& to) {
  require(((from.position - to.position).cwiseAbs().maxCoeff() <= 1e-9),
          "relative_rotation: poses differ in translation; only rotations can be synthesized");
  if (from.rotation == to.rotation) return Mat3::Identity();
  return to.rotation.transpose() * from.rotation;
}

inline Vec3 backproject(const CameraIntrinsics& intr, const Vec2& pixel, double z) {
  require(z > 0.0, "backproject: depth must be positive, got " + std::to_string(z));
  return z * intr.ray(pixel.x(), pixel.y());
}

inline Vec2 project(const CameraIntrinsics& intr, const Vec3& p_cam) { return intr.project(p_cam); }

enum class IntersectionKind { kHit, kParallel, kBehind };

struct RayPlaneIntersection {
  IntersectionKind kind = IntersectionKind::kParallel;
  // Scale along the pixel ray (unit third component); equals the camera depth of the hit.
  double lambda = 0.0;
  Vec3 point = Vec3::Zero();

  bool hit() const { return kind == IntersectionKind::kHit; }
};

// Intersects the ray through `pixel` with the horizontal plane z = plane_offset.
inline RayPlaneIntersection intersect_ray_plane(const CameraPose& pose, const CameraIntrinsics& intr,
                                                const Vec2& pixel, double plane_offset) {
  const Vec3 dir = pose.rotation * intr.ray(pixel.x(), pixel.y());
  const double denom = world_up().dot(dir);
  RayPlaneIntersection out;
  if (std::abs(denom) < 1e-12 * dir.norm()) {
    out.kind = IntersectionKind::kParallel;
    out.lambda = std::numeric_limits<double>::infinity();
    return out;
  }
  out.lambda = (plane_offset - world_up().dot(pose.position)) / denom;
  out.point = out.lambda * dir + pose.position;
  out.kind = out.lambda > 0.0 ? IntersectionKind::kHit : IntersectionKind::kBehind;
  return out;
}

// Signed distance of p along the camera optical axis.
inline double depth_along_axis(const CameraPose& pose, const Vec3& p) {
  return camera_depth_axis().dot(pose.rotation.transpose() * (p - pose.position));
}

}  // namespace posebias
