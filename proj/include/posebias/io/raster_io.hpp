#pragma once

// Raster codecs.
//
//   *.png  depth: 16-bit grayscale, millimeters, 0 = invalid.
//          rgb:   8-bit RGB, [0, 255] <-> [-1, 1].
//   *.f32  float raster: "PBRASTER" magic, u32 version, u32 height, u32 width,
//          u32 channels, then row-major interleaved little-endian float32.
//          As depth, non-finite or non-positive values are invalid.

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "posebias/raster.hpp"

namespace posebias::io {

static_assert(std::endian::native == std::endian::little, "raster codecs assume a little-endian host");

inline constexpr double kMaxPngDepth = 65.535;

namespace detail {

struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major interleaved
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

inline void write_png(const std::filesystem::path& path, const PngData& img) {
  ensure_parent(path);
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  require(file != nullptr, "png: cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: out of memory writing " + path.string());
  }
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels * (img.bit_depth / 8);
  std::vector<png_byte> row(row_bytes);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t per_row = static_cast<std::size_t>(img.width) * img.channels;
  for (int r = 0; r < img.height; ++r) {
    const auto* src = img.samples.data() + r * per_row;
    for (std::size_t i = 0; i < per_row; ++i) {
      if (img.bit_depth == 16) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);  // PNG is big-endian
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline PngData read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  require(file != nullptr, "png: cannot open " + path.string());
  png_byte sig[8];
  require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0,
          "png: " + path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: out of memory reading " + path.string());
  }
  PngData img;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: corrupt file " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && img.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  row.resize(png_get_rowbytes(png, info));
  const std::size_t per_row = static_cast<std::size_t>(img.width) * img.channels;
  img.samples.resize(per_row * img.height);
  for (int r = 0; r < img.height; ++r) {
    png_read_row(png, row.data(), nullptr);
    auto* dst = img.samples.data() + r * per_row;
    for (std::size_t i = 0; i < per_row; ++i)
      dst[i] = img.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]) : row[i];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline std::string extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace detail

inline void write_f32(const std::filesystem::path& path, const Raster<float>& raster) {
  detail::ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "f32: cannot write " + path.string());
  const std::uint32_t header[4] = {1u, static_cast<std::uint32_t>(raster.height()),
                                   static_cast<std::uint32_t>(raster.width()),
                                   static_cast<std::uint32_t>(raster.channels())};
  out.write("PBRASTER", 8);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(raster.data().data()),
            static_cast<std::streamsize>(raster.size() * sizeof(float)));
  require(out.good(), "f32: write failed for " + path.string());
}

inline Raster<float> read_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "f32: cannot open " + path.string());
  char magic[8];
  std::uint32_t header[4];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  require(in.good() && std::memcmp(magic, "PBRASTER", 8) == 0, "f32: " + path.string() + " is not a float raster");
  require(header[0] == 1u, "f32: unsupported raster version " + std::to_string(header[0]));
  Raster<float> raster(static_cast<int>(header[1]), static_cast<int>(header[2]), static_cast<int>(header[3]));
  in.read(reinterpret_cast<char*>(raster.data().data()), static_cast<std::streamsize>(raster.size() * sizeof(float)));
  require(in.gcount() == static_cast<std::streamsize>(raster.size() * sizeof(float)),
          "f32: truncated raster " + path.string());
  return raster;
}

inline void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  const auto ext = detail::extension(path);
  if (ext == ".f32") {
    Raster<float> raw(depth.height(), depth.width(), 1, 0.0f);
    for (int r = 0; r < depth.height(); ++r)
      for (int c = 0; c < depth.width(); ++c)
        if (depth.is_valid(r, c)) raw(r, c) = static_cast<float>(depth.depth(r, c));
    write_f32(path, raw);
    return;
  }
  require(ext == ".png", "depth: unknown raster format '" + ext + "' for " + path.string() + " (use .png or .f32)");
  detail::PngData img{depth.width(), depth.height(), 1, 16, {}};
  img.samples.resize(static_cast<std::size_t>(depth.width()) * depth.height(), 0);
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      if (!depth.is_valid(r, c)) continue;
      const double d = depth.depth(r, c);
      require(d <= kMaxPngDepth, "depth: " + std::to_string(d) + " m exceeds the 16-bit PNG range of 65.535 m in " +
                                     path.string() + "; mask it out or store the map as .f32");
      const auto mm = std::lround(d * 1000.0);
      require(mm >= 1, "depth: valid depth " + std::to_string(d) + " m rounds to the 0 mm invalid sentinel in " +
                           path.string());
      img.samples[static_cast<std::size_t>(r) * depth.width() + c] = static_cast<std::uint16_t>(mm);
    }
  }
  detail::write_png(path, img);
}

inline DepthMap read_depth(const std::filesystem::path& path) {
  const auto ext = detail::extension(path);
  if (ext == ".f32") {
    const auto raw = read_f32(path);
    require(raw.channels() == 1, "depth: " + path.string() + " has " + std::to_string(raw.channels()) + " channels");
    DepthMap out(raw.height(), raw.width());
    for (int r = 0; r < raw.height(); ++r) {
      for (int c = 0; c < raw.width(); ++c) {
        const double d = raw(r, c);
        if (std::isfinite(d) && d > 0.0) out.set(r, c, d);
      }
    }
    return out;
  }
  require(ext == ".png", "depth: unknown raster format '" + ext + "' for " + path.string() + " (use .png or .f32)");
  const auto img = detail::read_png(path);
  require(img.channels == 1 && img.bit_depth == 16,
          "depth: " + path.string() + " is not a 16-bit single-channel PNG");
  DepthMap out(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const auto mm = img.samples[static_cast<std::size_t>(r) * img.width + c];
      if (mm != 0) out.set(r, c, mm / 1000.0);
    }
  }
  return out;
}

inline void write_rgb(const std::filesystem::path& path, const RgbImage& rgb) {
  require(rgb.channels() == 3, "rgb: expected 3 channels");
  const auto ext = detail::extension(path);
  if (ext == ".f32") {
    write_f32(path, rgb);
    return;
  }
  require(ext == ".png", "rgb: unknown raster format '" + ext + "' for " + path.string());
  detail::PngData img{rgb.width(), rgb.height(), 3, 8, {}};
  img.samples.resize(rgb.size());
  const auto src = rgb.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    img.samples[i] = static_cast<std::uint16_t>(std::clamp(std::lround((src[i] + 1.0) * 127.5), 0L, 255L));
  detail::write_png(path, img);
}

inline RgbImage read_rgb(const std::filesystem::path& path) {
  const auto ext = detail::extension(path);
  if (ext == ".f32") {
    auto raw = read_f32(path);
    require(raw.channels() == 3, "rgb: " + path.string() + " does not have 3 channels");
    return raw;
  }
  require(ext == ".png", "rgb: unknown raster format '" + ext + "' for " + path.string());
  const auto img = detail::read_png(path);
  require(img.bit_depth == 8 && (img.channels == 3 || img.channels == 1),
          "rgb: " + path.string() + " is not an 8-bit RGB or grayscale PNG");
  RgbImage out(img.height, img.width, 3);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const int src_ch = img.channels == 3 ? ch : 0;
        const auto s = img.samples[(static_cast<std::size_t>(r) * img.width + c) * img.channels + src_ch];
        out(r, c, ch) = static_cast<float>(s / 127.5 - 1.0);
      }
    }
  }
  return out;
}

// Writes a double raster (e.g. an encoded pose map) as float32.
inline void write_f32(const std::filesystem::path& path, const Raster<double>& raster) {
  Raster<float> out(raster.height(), raster.width(), raster.channels());
  auto dst = out.data();
  auto src = raster.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]);
  write_f32(path, out);
}

}  // namespace posebias::io
