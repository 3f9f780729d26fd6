#pragma once

// Versioned CSV dataset index. Angles on disk are degrees; in memory they are radians.
//
//   # posebias-manifest v1
//   rgb,depth,fx,fy,cx,cy,width,height,roll,pitch,height_m,scene[,extra columns...]
//   rgb/000000.png,depth/000000.png,300,300,159.5,119.5,320,240,0,90,1.5,scene_000

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "posebias/sampling.hpp"

namespace posebias::io {

inline constexpr std::string_view kManifestMagic = "# posebias-manifest";
inline constexpr std::string_view kManifestVersion = "v1";
inline constexpr std::array<std::string_view, 12> kManifestColumns = {
    "rgb", "depth", "fx", "fy", "cx", "cy", "width", "height", "roll", "pitch", "height_m", "scene"};

struct Manifest {
  std::vector<std::string> extra_columns;
  std::vector<SampleRecord> records;
  std::vector<std::vector<std::string>> extras;  // one entry per record, aligned with extra_columns

  std::size_t size() const { return records.size(); }

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t i = 0; i < extra_columns.size(); ++i)
      if (extra_columns[i] == name) return i;
    return std::nullopt;
  }

  std::optional<std::string> extra(std::size_t row, std::string_view name) const {
    const auto col = column_index(name);
    if (!col) return std::nullopt;
    return extras[row][*col];
  }

  void add_row(SampleRecord record, std::vector<std::string> extra_values = {}) {
    extra_values.resize(extra_columns.size());
    records.push_back(std::move(record));
    extras.push_back(std::move(extra_values));
  }

  // Sets a column value, creating the column (empty for other rows) if needed.
  void set_extra(std::size_t row, const std::string& name, std::string value) {
    auto col = column_index(name);
    if (!col) {
      extra_columns.push_back(name);
      for (auto& e : extras) e.emplace_back();
      col = extra_columns.size() - 1;
    }
    extras[row][*col] = std::move(value);
  }

  Manifest subset(const Selection& rows) const {
    Manifest out;
    out.extra_columns = extra_columns;
    for (auto i : rows) {
      out.records.push_back(records[i]);
      out.extras.push_back(extras[i]);
    }
    return out;
  }
};

namespace detail {

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  require(!quoted, "manifest line " + std::to_string(line_no) + ": unterminated quoted field");
  return fields;
}

inline double parse_number(const std::string& s, std::string_view column, std::size_t line_no) {
  double x = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, x);
  require(ec == std::errc() && ptr == end && !s.empty(),
          "manifest line " + std::to_string(line_no) + ": column '" + std::string(column) +
              "' is not a number: '" + s + "'");
  return x;
}

inline int parse_int(const std::string& s, std::string_view column, std::size_t line_no) {
  int x = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, x);
  require(ec == std::errc() && ptr == end && !s.empty(),
          "manifest line " + std::to_string(line_no) + ": column '" + std::string(column) +
              "' is not an integer: '" + s + "'");
  return x;
}

}  // namespace detail

inline Manifest parse_manifest(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  require(static_cast<bool>(std::getline(in, line)), "manifest: empty file, missing version header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line.rfind(kManifestMagic, 0) == 0, "manifest line 1: missing '# posebias-manifest' header");
  const std::string version = line.substr(kManifestMagic.size() + (line.size() > kManifestMagic.size()));
  require(version == kManifestVersion, "manifest line 1: unknown manifest version '" + version + "'");

  ++line_no;
  require(static_cast<bool>(std::getline(in, line)), "manifest line 2: missing column header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::csv_split(line, line_no);
  require(header.size() >= kManifestColumns.size(), "manifest line 2: too few columns in header");
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i)
    require(header[i] == kManifestColumns[i], "manifest line 2: expected column '" +
                                                  std::string(kManifestColumns[i]) + "', got '" + header[i] + "'");

  Manifest m;
  m.extra_columns.assign(header.begin() + kManifestColumns.size(), header.end());
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = detail::csv_split(line, line_no);
    require(f.size() == header.size(), "manifest line " + std::to_string(line_no) + ": expected " +
                                           std::to_string(header.size()) + " fields, got " +
                                           std::to_string(f.size()));
    SampleRecord r;
    r.rgb = f[0];
    r.depth = f[1];
    r.intrinsics.fx = detail::parse_number(f[2], "fx", line_no);
    r.intrinsics.fy = detail::parse_number(f[3], "fy", line_no);
    r.intrinsics.cx = detail::parse_number(f[4], "cx", line_no);
    r.intrinsics.cy = detail::parse_number(f[5], "cy", line_no);
    r.intrinsics.width = detail::parse_int(f[6], "width", line_no);
    r.intrinsics.height = detail::parse_int(f[7], "height", line_no);
    r.prior.roll = deg2rad(detail::parse_number(f[8], "roll", line_no));
    r.prior.pitch = deg2rad(detail::parse_number(f[9], "pitch", line_no));
    r.prior.height = detail::parse_number(f[10], "height_m", line_no);
    r.scene = f[11];
    try {
      r.validate();
    } catch (const Error& e) {
      throw Error("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    m.records.push_back(std::move(r));
    m.extras.emplace_back(f.begin() + kManifestColumns.size(), f.end());
  }
  return m;
}

inline void format_manifest(const Manifest& m, std::ostream& out) {
  out << kManifestMagic << ' ' << kManifestVersion << '\n';
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i) out << (i ? "," : "") << kManifestColumns[i];
  for (const auto& c : m.extra_columns) out << ',' << detail::csv_escape(c);
  out << '\n';
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const auto& k = r.intrinsics;
    out << detail::csv_escape(r.rgb) << ',' << detail::csv_escape(r.depth) << ',' << detail::format_number(k.fx)
        << ',' << detail::format_number(k.fy) << ',' << detail::format_number(k.cx) << ','
        << detail::format_number(k.cy) << ',' << k.width << ',' << k.height << ','
        << detail::format_number(rad2deg(r.prior.roll)) << ',' << detail::format_number(rad2deg(r.prior.pitch))
        << ',' << detail::format_number(r.prior.height) << ',' << detail::csv_escape(r.scene);
    for (const auto& e : m.extras[i]) out << ',' << detail::csv_escape(e);
    out << '\n';
  }
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "manifest: cannot open " + path.string());
  try {
    return parse_manifest(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "manifest: cannot write " + path.string());
  format_manifest(m, out);
}

}  // namespace posebias::io
