#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posebias/error.hpp"

namespace posebias {

// Row-major, channel-interleaved H x W x C raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    require(height >= 1 && width >= 1 && channels >= 1,
            "raster dimensions must be positive, got " + std::to_string(height) + "x" +
                std::to_string(width) + "x" + std::to_string(channels));
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  const T& operator()(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

// Three channels, values normalized to [-1, 1].
using RgbImage = Raster<float>;
using Mask = Raster<std::uint8_t>;

// Metric depth with a per-pixel validity flag. Valid pixels hold finite depth > 0.
struct DepthMap {
  Raster<double> depth;
  Mask valid;

  DepthMap() = default;
  DepthMap(int height, int width) : depth(height, width, 1, 0.0), valid(height, width, 1, 0) {}

  static DepthMap constant(int height, int width, double value) {
    DepthMap map(height, width);
    for (auto& d : map.depth.data()) d = value;
    for (auto& v : map.valid.data()) v = 1;
    return map;
  }

  int height() const { return depth.height(); }
  int width() const { return depth.width(); }
  bool is_valid(int row, int col) const { return valid(row, col) != 0; }

  void set(int row, int col, double value) {
    depth(row, col) = value;
    valid(row, col) = 1;
  }
  void invalidate(int row, int col) {
    depth(row, col) = 0.0;
    valid(row, col) = 0;
  }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid.data()) n += v != 0;
    return n;
  }

  bool operator==(const DepthMap&) const = default;
};

}  // namespace posebias
