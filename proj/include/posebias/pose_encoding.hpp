#pragma once

// Camera-pose-prior (CPP) maps: per-pixel pseudo depth of an empty room with an infinite
// floor and ceiling, seen from the prior's pose.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "posebias/geometry.hpp"
#include "posebias/raster.hpp"

namespace posebias {

enum class CppVariant { kAtan, kClip, kNaive };

struct CppConfig {
  double ceiling = 3.0;  // floor-to-ceiling distance C, meters
  CppVariant variant = CppVariant::kAtan;
  double clip_threshold = 20.0;  // tau, meters; clip variant only
  // Replace the true pitch / height by a constant before encoding.
  std::optional<double> fixed_pitch;
  std::optional<double> fixed_height;

  void validate() const {
    require(ceiling > 0.0, "cpp: ceiling distance must be positive");
    require(clip_threshold > 0.0, "cpp: clip threshold must be positive");
  }
};

struct CppMap {
  Raster<double> values;
  CppVariant variant = CppVariant::kAtan;
};

// Pre-transform map M: for every pixel the camera depth of the floor or ceiling hit along
// its ray, +inf for rays parallel to the planes. Only the height enters; horizontal
// translation and yaw never do.
inline Raster<double> pseudo_depth(const CameraPose& pose, const CameraIntrinsics& intr, double ceiling) {
  intr.validate();
  const double h = pose.height();
  require(h > 0.0 && h < ceiling, "cpp: camera height must lie in (0, C), got h=" + std::to_string(h) +
                                      " C=" + std::to_string(ceiling));

  const Eigen::RowVector3d up_row = world_up().transpose() * pose.rotation;
  Raster<double> m(intr.height, intr.width, 1, 0.0);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 ray = intr.ray(u, v);
      const double rise = up_row.dot(ray);
      if (std::abs(rise) < 1e-12 * ray.norm()) {
        m(v, u) = std::numeric_limits<double>::infinity();
        continue;
      }
      // The ray has unit depth component, so the depth of the intersection point along
      // the optical axis equals the ray scale lambda.
      const double to_floor = -h / rise;
      const double to_ceiling = (ceiling - h) / rise;
      m(v, u) = std::max(to_floor, to_ceiling);
    }
  }
  return m;
}

inline CppMap encode_cpp(const CameraPose& pose, const CameraIntrinsics& intr, const CppConfig& cfg) {
  cfg.validate();
  CppMap out{pseudo_depth(pose, intr, cfg.ceiling), CppVariant::kAtan};
  for (auto& x : out.values.data()) x = std::atan(x);
  return out;
}

inline CppMap encode_cpp(const PosePrior& prior, double yaw, const CameraIntrinsics& intr, const CppConfig& cfg) {
  prior.validate();
  return encode_cpp(pose_from_prior(prior, yaw), intr, cfg);
}

// Clip at tau, then map [0, tau] affinely onto [-1, 1].
inline double clip_rescale(double m, double tau) { return 2.0 * std::min(m, tau) / tau - 1.0; }

inline CppMap encode_cpp_clip(const PosePrior& prior, double yaw, const CameraIntrinsics& intr,
                              const CppConfig& cfg) {
  cfg.validate();
  prior.validate();
  CppMap out{pseudo_depth(pose_from_prior(prior, yaw), intr, cfg.ceiling), CppVariant::kClip};
  for (auto& x : out.values.data()) x = clip_rescale(x, cfg.clip_threshold);
  return out;
}

// Three constant channels: roll, pitch, height.
inline CppMap encode_naive(const PosePrior& prior, int height, int width) {
  CppMap out{Raster<double>(height, width, 3, 0.0), CppVariant::kNaive};
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      out.values(v, u, 0) = prior.roll;
      out.values(v, u, 1) = prior.pitch;
      out.values(v, u, 2) = prior.height;
    }
  }
  return out;
}

inline PosePrior apply_overrides(PosePrior prior, const CppConfig& cfg) {
  if (cfg.fixed_pitch) prior.pitch = *cfg.fixed_pitch;
  if (cfg.fixed_height) prior.height = *cfg.fixed_height;
  return prior;
}

// Dispatches on cfg.variant after applying any fixed-DOF overrides.
inline CppMap encode(const PosePrior& prior, double yaw, const CameraIntrinsics& intr, const CppConfig& cfg) {
  const PosePrior p = apply_overrides(prior, cfg);
  switch (cfg.variant) {
    case CppVariant::kAtan:
      return encode_cpp(p, yaw, intr, cfg);
    case CppVariant::kClip:
      return encode_cpp_clip(p, yaw, intr, cfg);
    case CppVariant::kNaive:
      return encode_naive(p, intr.height, intr.width);
  }
  throw Error("cpp: unknown variant");
}

// Lower end of the atan-variant range quoted for CPP maps: atan(min{h, C - h}).
inline double cpp_nominal_lower_bound(double h, double ceiling) { return std::atan(std::min(h, ceiling - h)); }

// Tight lower bound over a given image: a hit at perpendicular distance d along a ray with
// unit depth component r has camera depth d / |rise| >= d / |r|, so the bound shrinks by
// the longest pixel ray (an image corner).
inline double cpp_lower_bound(double h, double ceiling, const CameraIntrinsics& intr) {
  double longest = 0.0;
  for (const double u : {0.0, intr.width - 1.0})
    for (const double v : {0.0, intr.height - 1.0}) longest = std::max(longest, intr.ray(u, v).norm());
  return std::atan(std::min(h, ceiling - h) / longest);
}

// Pitch and height jitter for pose-noise resilience studies. The result is clamped so it
// stays a valid prior (and below the ceiling when one is given).
inline PosePrior perturb_prior(const PosePrior& prior, double pitch_noise, double height_noise, std::mt19937_64& rng,
                               std::optional<double> ceiling = std::nullopt) {
  require(pitch_noise >= 0.0 && height_noise >= 0.0, "perturb_prior: noise levels must be non-negative");
  constexpr double kMargin = 1e-6;
  PosePrior out = prior;
  if (pitch_noise > 0.0)
    out.pitch += std::uniform_real_distribution<double>(-pitch_noise, pitch_noise)(rng);
  if (height_noise > 0.0)
    out.height += std::uniform_real_distribution<double>(-height_noise, height_noise)(rng);
  out.pitch = std::clamp(out.pitch, kMargin, kPi - kMargin);
  const double top = ceiling ? *ceiling - kMargin : std::numeric_limits<double>::max();
  out.height = std::clamp(out.height, kMargin, top);
  return out;
}

}  // namespace posebias
