#pragma once

#include <algorithm>
#include <cmath>

#include "posebias/raster.hpp"

namespace posebias {

// Reflects a continuous coordinate into [0, size - 1] about the outermost pixel centres.
inline double reflect_coordinate(double x, int size) {
  if (size <= 1) return 0.0;
  const double period = 2.0 * (size - 1);
  x = std::fmod(std::abs(x), period);
  return x > size - 1 ? period - x : x;
}

// Bilinear sample of every channel at (x, y); coordinates must already lie inside the raster.
template <typename T>
void bilinear_sample(const Raster<T>& img, double x, double y, T* out) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), img.width() - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - ax) * img(y0, x0, c) + ax * img(y0, x1, c);
    const double bottom = (1.0 - ax) * img(y1, x0, c) + ax * img(y1, x1, c);
    out[c] = static_cast<T>((1.0 - ay) * top + ay * bottom);
  }
}

// Samples the axis-aligned window [x0, x0 + w) x [y0, y0 + h) (in pixel-edge units) onto
// an out_h x out_w grid. RGB is interpolated bilinearly; coordinates clamp at the border.
inline RgbImage resample_window(const RgbImage& img, double x0, double y0, double w, double h,
                                int out_h, int out_w) {
  RgbImage out(out_h, out_w, img.channels());
  const double sx = w / out_w;
  const double sy = h / out_h;
  for (int r = 0; r < out_h; ++r) {
    const double y = std::clamp(y0 + (r + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    for (int c = 0; c < out_w; ++c) {
      const double x = std::clamp(x0 + (c + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      bilinear_sample(img, x, y, &out(r, c));
    }
  }
  return out;
}

// Same window mapping as above with nearest-neighbour lookup, so depth values are copied.
inline DepthMap resample_window(const DepthMap& depth, double x0, double y0, double w, double h,
                                int out_h, int out_w) {
  DepthMap out(out_h, out_w);
  const double sx = w / out_w;
  const double sy = h / out_h;
  for (int r = 0; r < out_h; ++r) {
    const double y = y0 + (r + 0.5) * sy - 0.5;
    const int yi = std::clamp(static_cast<int>(std::floor(y + 0.5)), 0, depth.height() - 1);
    for (int c = 0; c < out_w; ++c) {
      const double x = x0 + (c + 0.5) * sx - 0.5;
      const int xi = std::clamp(static_cast<int>(std::floor(x + 0.5)), 0, depth.width() - 1);
      out.depth(r, c) = depth.depth(yi, xi);
      out.valid(r, c) = depth.valid(yi, xi);
    }
  }
  return out;
}

inline RgbImage resize(const RgbImage& img, int out_h, int out_w) {
  if (img.height() == out_h && img.width() == out_w) return img;
  return resample_window(img, 0.0, 0.0, img.width(), img.height(), out_h, out_w);
}

inline DepthMap resize(const DepthMap& depth, int out_h, int out_w) {
  if (depth.height() == out_h && depth.width() == out_w) return depth;
  return resample_window(depth, 0.0, 0.0, depth.width(), depth.height(), out_h, out_w);
}

}  // namespace posebias
