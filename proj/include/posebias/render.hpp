#pragma once

// Analytic renderer for an empty room bounded by an infinite floor (z = 0) and an
// infinite ceiling (z = C). Used as the ground-truth oracle for warping and encoding.

#include <cmath>
#include <cstdint>

#include "posebias/geometry.hpp"
#include "posebias/raster.hpp"

namespace posebias {

struct TexturePattern {
  enum class Kind {
    // Two-tone checkerboard painted on each plane.
    kCheckerboard,
    // Smooth colour field over world ray directions. Rotation-only warps preserve it
    // exactly, which makes it suitable for tight photometric tolerances.
    kSmoothDirection,
  };

  Kind kind = Kind::kCheckerboard;
  double period = 0.5;           // checker cell size, meters
  double angular_frequency = 4;  // smooth field, radians^-1
};

enum class Surface : std::uint8_t { kNone = 0, kFloor = 1, kCeiling = 2 };

struct EmptyRoomRender {
  RgbImage rgb;
  DepthMap depth;
  Raster<std::uint8_t> surface;  // Surface per pixel
};

namespace detail {

inline void checker_colour(const Vec3& p, Surface surface, double period, float out[3]) {
  const auto cell = static_cast<long long>(std::floor(p.x() / period)) +
                    static_cast<long long>(std::floor(p.y() / period));
  const bool odd = (cell & 1LL) != 0;
  if (surface == Surface::kFloor) {
    const float a[3] = {0.8f, 0.2f, -0.4f};
    const float b[3] = {-0.6f, 0.1f, 0.5f};
    for (int c = 0; c < 3; ++c) out[c] = odd ? a[c] : b[c];
  } else {
    const float a[3] = {0.9f, 0.9f, 0.7f};
    const float b[3] = {-0.2f, -0.5f, -0.8f};
    for (int c = 0; c < 3; ++c) out[c] = odd ? a[c] : b[c];
  }
}

inline void direction_colour(const Vec3& dir_world, double k, float out[3]) {
  const Vec3 d = dir_world.normalized();
  out[0] = static_cast<float>(0.8 * std::sin(k * (d.x() + 0.3 * d.z()) + 0.4));
  out[1] = static_cast<float>(0.8 * std::sin(k * (d.y() - 0.5 * d.z()) + 1.1));
  out[2] = static_cast<float>(0.8 * std::sin(k * (0.7 * d.x() + 0.6 * d.y() + d.z()) + 2.3));
}

}  // namespace detail

inline EmptyRoomRender render_empty_room(const CameraPose& pose, const CameraIntrinsics& intr,
                                         double ceiling, const TexturePattern& texture = {}) {
  intr.validate();
  const double h = pose.height();
  require(h > 0.0 && h < ceiling, "render_empty_room: camera height must lie in (0, C)");

  EmptyRoomRender out{RgbImage(intr.height, intr.width, 3, 0.0f), DepthMap(intr.height, intr.width),
                      Raster<std::uint8_t>(intr.height, intr.width, 1, 0)};

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec2 pixel(u, v);
      const auto floor_hit = intersect_ray_plane(pose, intr, pixel, 0.0);
      const auto ceil_hit = intersect_ray_plane(pose, intr, pixel, ceiling);

      const RayPlaneIntersection* nearest = nullptr;
      Surface surface = Surface::kNone;
      if (floor_hit.hit()) {
        nearest = &floor_hit;
        surface = Surface::kFloor;
      }
      if (ceil_hit.hit() && (nearest == nullptr || ceil_hit.lambda < nearest->lambda)) {
        nearest = &ceil_hit;
        surface = Surface::kCeiling;
      }

      float colour[3] = {0.0f, 0.0f, 0.0f};
      if (nearest != nullptr) {
        out.depth.set(v, u, depth_along_axis(pose, nearest->point));
        out.surface(v, u) = static_cast<std::uint8_t>(surface);
        if (texture.kind == TexturePattern::Kind::kCheckerboard)
          detail::checker_colour(nearest->point, surface, texture.period, colour);
      }
      if (texture.kind == TexturePattern::Kind::kSmoothDirection)
        detail::direction_colour(pose.rotation * intr.ray(u, v), texture.angular_frequency, colour);
      for (int c = 0; c < 3; ++c) out.rgb(v, u, c) = colour[c];
    }
  }
  return out;
}

}  // namespace posebias
