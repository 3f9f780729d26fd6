#pragma once

// Perspective-aware augmentation: rotation-only RGB-D view synthesis, plus the naive
// crop baseline it is compared against.

#include <cmath>
#include <random>
#include <utility>

#include "posebias/geometry.hpp"
#include "posebias/image_ops.hpp"
#include "posebias/raster.hpp"

namespace posebias {

using Rng = std::mt19937_64;

// How source depth is interpolated between the four neighbours of a backward-warped sample.
enum class DepthInterpolation {
  // Bilinear in 1/z. Exact for planar surfaces, whose inverse depth is affine in (u, v).
  kInverseDepth,
  // Bilinear in z.
  kDepth,
};

struct PdaConfig {
  // Half-widths of the symmetric uniform perturbation ranges, radians.
  double pitch_range = 0.1;
  double roll_range = 0.1;
  double yaw_range = 0.1;
  DepthInterpolation interpolation = DepthInterpolation::kInverseDepth;

  // Scale s perturbs every axis within [-5s, 5s] degrees.
  static PdaConfig from_scale(int scale) {
    require(scale >= 0, "pda: scale must be non-negative");
    const double r = deg2rad(5.0 * scale);
    return {r, r, r, DepthInterpolation::kInverseDepth};
  }

  void validate() const {
    require(pitch_range >= 0.0 && roll_range >= 0.0 && yaw_range >= 0.0,
            "pda: perturbation ranges must be non-negative");
  }
};

struct RotationPerturbation {
  double pitch = 0.0;
  double roll = 0.0;
  double yaw = 0.0;

  bool is_zero() const { return pitch == 0.0 && roll == 0.0 && yaw == 0.0; }
};

namespace detail {
inline double symmetric_uniform(double range, Rng& rng) {
  if (range == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-range, range)(rng);
}
}  // namespace detail

inline RotationPerturbation sample_rotation_perturbation(const PdaConfig& cfg, Rng& rng) {
  cfg.validate();
  RotationPerturbation p;
  p.pitch = detail::symmetric_uniform(cfg.pitch_range, rng);
  p.roll = detail::symmetric_uniform(cfg.roll_range, rng);
  p.yaw = detail::symmetric_uniform(cfg.yaw_range, rng);
  return p;
}

// The perturbed prior and the rotation from the original camera frame to the new one.
struct PerturbedView {
  PosePrior prior;
  double yaw = 0.0;
  Mat3 relative = Mat3::Identity();
};

inline constexpr double kPitchMargin = 1e-6;

inline PerturbedView perturb_view(const PosePrior& prior, double yaw, const RotationPerturbation& delta) {
  prior.validate();
  PerturbedView out;
  out.prior = prior;
  out.yaw = yaw;
  if (delta.is_zero()) return out;

  out.prior.pitch = std::clamp(prior.pitch + delta.pitch, kPitchMargin, kPi - kPitchMargin);
  out.prior.roll = std::remainder(prior.roll + delta.roll, 2.0 * kPi);
  out.yaw = yaw + delta.yaw;
  out.relative = relative_rotation(pose_from_prior(prior, yaw), pose_from_prior(out.prior, out.yaw));
  return out;
}

// K * T_rel * K^-1: maps source pixels to target pixels for a pure rotation.
inline Mat3 rotation_homography(const CameraIntrinsics& intr, const Mat3& relative) {
  return intr.matrix() * relative * intr.matrix().inverse();
}

inline Vec2 apply_homography(const Mat3& h, const Vec2& q) {
  const Vec3 p = h * Vec3(q.x(), q.y(), 1.0);
  return p.head<2>() / p.z();
}

// Forward reprojection of a single source pixel with known depth: target pixel and the
// target depth z' = e3^T T_rel z K^-1 q.
struct ForwardSample {
  Vec2 pixel;
  double depth = 0.0;
};

inline ForwardSample forward_reproject(const CameraIntrinsics& intr, const Mat3& relative, const Vec2& q,
                                       double z) {
  const Vec3 p = relative * backproject(intr, q, z);
  return {intr.project(p), p.z()};
}

struct WarpResult {
  RgbImage rgb;
  DepthMap depth;  // depth.valid is the loss mask
};

namespace detail {

// Sub-pixel noise from K K^-1 round trips should not turn an exact pixel hit into a
// four-tap interpolation.
inline double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

inline bool sample_depth(const DepthMap& depth, double x, double y, DepthInterpolation mode, double& out) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  if (ax == 0.0 && ay == 0.0) {
    if (!depth.is_valid(y0, x0)) return false;
    out = depth.depth(y0, x0);
    return true;
  }

  const int xs[2] = {x0, std::min(x0 + 1, depth.width() - 1)};
  const int ys[2] = {y0, std::min(y0 + 1, depth.height() - 1)};
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  double acc = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      if (!depth.is_valid(ys[j], xs[i])) return false;
      const double z = depth.depth(ys[j], xs[i]);
      acc += w * (mode == DepthInterpolation::kInverseDepth ? 1.0 / z : z);
    }
  }
  out = mode == DepthInterpolation::kInverseDepth ? 1.0 / acc : acc;
  return true;
}

}  // namespace detail

// Backward warp of an RGB-D pair to the camera rotated by `relative` (old frame -> new
// frame). RGB outside the source raster is filled by reflection; depth there is masked.
inline WarpResult warp_rgbd(const RgbImage& rgb, const DepthMap& depth, const CameraIntrinsics& intr,
                            const Mat3& relative,
                            DepthInterpolation interpolation = DepthInterpolation::kInverseDepth) {
  intr.validate();
  require(rgb.channels() == 3, "warp_rgbd: rgb must have 3 channels");
  require(rgb.height() == intr.height && rgb.width() == intr.width && depth.height() == intr.height &&
              depth.width() == intr.width,
          "warp_rgbd: raster dimensions do not match intrinsics");
  require(is_rotation(relative, 1e-6), "warp_rgbd: relative transform is not a rotation");

  const int h = intr.height;
  const int w = intr.width;
  WarpResult out{RgbImage(h, w, 3, 0.0f), DepthMap(h, w)};
  const Mat3 inverse = relative.transpose();
  const Eigen::RowVector3d depth_row = relative.row(2);

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Vec3 ray = inverse * intr.ray(u, v);
      if (ray.z() <= 0.0) continue;  // source direction behind the original camera
      const double xs = detail::snap(intr.fx * ray.x() / ray.z() + intr.cx);
      const double ys = detail::snap(intr.fy * ray.y() / ray.z() + intr.cy);

      bilinear_sample(rgb, reflect_coordinate(xs, w), reflect_coordinate(ys, h), &out.rgb(v, u));

      if (xs < 0.0 || xs > w - 1 || ys < 0.0 || ys > h - 1) continue;
      double z = 0.0;
      if (!detail::sample_depth(depth, xs, ys, interpolation, z)) continue;
      const double z_new = z * depth_row.dot(intr.ray(xs, ys));
      if (z_new > 0.0 && std::isfinite(z_new)) out.depth.set(v, u, z_new);
    }
  }
  return out;
}

struct CdaConfig {
  double min_scale = 0.75;

  void validate() const { require(min_scale > 0.0 && min_scale <= 1.0, "cda: min_scale must lie in (0, 1]"); }
};

// Crop window in pixel-edge units: side lengths scale * (W, H), top-left at (x0, y0).
struct CropWindow {
  double scale = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;
};

inline CropWindow sample_crop(const CdaConfig& cfg, int height, int width, Rng& rng) {
  cfg.validate();
  CropWindow win;
  win.scale = cfg.min_scale == 1.0 ? 1.0 : std::uniform_real_distribution<double>(cfg.min_scale, 1.0)(rng);
  const double slack_x = width * (1.0 - win.scale);
  const double slack_y = height * (1.0 - win.scale);
  win.x0 = slack_x > 0.0 ? std::uniform_real_distribution<double>(0.0, slack_x)(rng) : 0.0;
  win.y0 = slack_y > 0.0 ? std::uniform_real_distribution<double>(0.0, slack_y)(rng) : 0.0;
  return win;
}

// Crop-and-resize baseline. Depth values are copied and intrinsics are left untouched,
// which is exactly the geometric inconsistency this baseline exhibits.
inline std::pair<RgbImage, DepthMap> cda_crop(const RgbImage& rgb, const DepthMap& depth, const CropWindow& win) {
  require(rgb.height() == depth.height() && rgb.width() == depth.width(), "cda_crop: rgb/depth size mismatch");
  const int h = rgb.height();
  const int w = rgb.width();
  const double cw = win.scale * w;
  const double ch = win.scale * h;
  return {resample_window(rgb, win.x0, win.y0, cw, ch, h, w), resample_window(depth, win.x0, win.y0, cw, ch, h, w)};
}

inline std::pair<RgbImage, DepthMap> cda_crop(const RgbImage& rgb, const DepthMap& depth, const CdaConfig& cfg,
                                              Rng& rng) {
  return cda_crop(rgb, depth, sample_crop(cfg, rgb.height(), rgb.width(), rng));
}

}  // namespace posebias
