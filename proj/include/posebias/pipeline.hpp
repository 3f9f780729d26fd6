#pragma once

// Dataset-level operations behind the command-line tool. Each run_* function validates
// its options up front, processes records independently (optionally in parallel), and
// writes outputs whose bytes depend only on the options, the inputs and the seed.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "posebias/geometry.hpp"
#include "posebias/image_ops.hpp"
#include "posebias/io/manifest.hpp"
#include "posebias/io/raster_io.hpp"
#include "posebias/metrics.hpp"
#include "posebias/pda.hpp"
#include "posebias/pose_encoding.hpp"
#include "posebias/render.hpp"
#include "posebias/sampling.hpp"

namespace posebias::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// splitmix64 finalizer over (global seed, record index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(index));
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware concurrency).
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

struct RunSummary {
  std::size_t processed = 0;
  std::size_t skipped = 0;
  fs::path record_path;  // where the reproducibility record goes

  int exit_code() const { return skipped > 0 ? 2 : 0; }
};

struct CommonOptions {
  std::uint64_t seed = 0;
  unsigned jobs = 0;
};

// Record paths are relative to the manifest that lists them.
inline fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base_dir / path).lexically_normal();
}

inline std::string relative_to(const fs::path& target, const fs::path& dir) {
  const auto abs_target = fs::absolute(target).lexically_normal();
  const auto abs_dir = fs::absolute(dir).lexically_normal();
  auto rel = abs_target.lexically_relative(abs_dir);
  return (rel.empty() ? abs_target : rel).generic_string();
}

inline fs::path manifest_dir(const fs::path& manifest) {
  return manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
}

// Rewrites rgb/depth paths of `m` (relative to from_dir) so they resolve from to_dir.
inline void rebase(io::Manifest& m, const fs::path& from_dir, const fs::path& to_dir,
                   const std::vector<std::string>& path_columns = {}) {
  for (auto& r : m.records) {
    r.rgb = relative_to(resolve(from_dir, r.rgb), to_dir);
    r.depth = relative_to(resolve(from_dir, r.depth), to_dir);
  }
  for (const auto& col : path_columns) {
    const auto idx = m.column_index(col);
    if (!idx) continue;
    for (auto& e : m.extras)
      if (!e[*idx].empty()) e[*idx] = relative_to(resolve(from_dir, e[*idx]), to_dir);
  }
}

inline std::string record_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

inline void check_dims(const CameraIntrinsics& intr, int height, int width, const std::string& what) {
  require(height == intr.height && width == intr.width,
          what + " is " + std::to_string(height) + "x" + std::to_string(width) + " but the manifest intrinsics say " +
              std::to_string(intr.height) + "x" + std::to_string(intr.width));
}

namespace detail {

inline void log_skip(std::size_t index, const std::string& message) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "record " << index << " skipped: " << message << '\n';
}

// Per-record results assembled in index order regardless of worker scheduling.
template <typename T>
struct Slots {
  explicit Slots(std::size_t n) : values(n) {}
  std::vector<std::optional<T>> values;
};

inline io::Manifest load_manifest(const fs::path& path) { return io::read_manifest(path); }

}  // namespace detail

// ---------------------------------------------------------------------------- split

struct SplitOptions {
  fs::path manifest;
  double ratio = 0.85;
  fs::path out_dir;
};

inline RunSummary run_split(const SplitOptions& opt, const CommonOptions& common) {
  auto m = detail::load_manifest(opt.manifest);
  const auto split = split_scenes(m.records, opt.ratio, common.seed);
  auto train = m.subset(split.train);
  auto test = m.subset(split.test);
  rebase(train, manifest_dir(opt.manifest), opt.out_dir);
  rebase(test, manifest_dir(opt.manifest), opt.out_dir);
  io::write_manifest(opt.out_dir / "train.csv", train);
  io::write_manifest(opt.out_dir / "test.csv", test);
  return {m.size(), 0, opt.out_dir / "run.json"};
}

// ---------------------------------------------------------------------------- sample

struct SampleOptions {
  fs::path manifest;
  SamplingSpec spec;
  fs::path out;
};

inline RunSummary run_sample(const SampleOptions& opt, const CommonOptions& common) {
  auto m = detail::load_manifest(opt.manifest);
  SamplingSpec spec = opt.spec;
  spec.seed = common.seed;
  auto picked = m.subset(sample(m.records, spec));
  rebase(picked, manifest_dir(opt.manifest), manifest_dir(opt.out));
  io::write_manifest(opt.out, picked);
  return {picked.size(), 0, fs::path(opt.out.string() + ".run.json")};
}

// ---------------------------------------------------------------------------- augment

enum class AugmentMethod { kNone, kPda, kCda };

struct AugmentOptions {
  fs::path manifest;
  fs::path out_dir;
  AugmentMethod method = AugmentMethod::kPda;
  PdaConfig pda;
  CdaConfig cda;
  // Working resolution (height, width); nullopt keeps each record's native size.
  std::optional<std::pair<int, int>> resolution = std::pair{240, 320};
};

inline RunSummary run_augment(const AugmentOptions& opt, const CommonOptions& common) {
  opt.pda.validate();
  opt.cda.validate();
  const auto m = detail::load_manifest(opt.manifest);
  const fs::path in_dir = manifest_dir(opt.manifest);
  fs::create_directories(opt.out_dir);

  struct Output {
    SampleRecord record;
  };
  detail::Slots<Output> slots(m.size());
  parallel_for(m.size(), common.jobs, [&](std::size_t i) {
    try {
      SampleRecord rec = m.records[i];
      const fs::path rgb_in = resolve(in_dir, rec.rgb);
      const fs::path depth_in = resolve(in_dir, rec.depth);
      RgbImage rgb = io::read_rgb(rgb_in);
      DepthMap depth = io::read_depth(depth_in);
      check_dims(rec.intrinsics, rgb.height(), rgb.width(), rgb_in.string());
      check_dims(rec.intrinsics, depth.height(), depth.width(), depth_in.string());

      if (opt.resolution) {
        const auto [h, w] = *opt.resolution;
        rgb = resize(rgb, h, w);
        depth = resize(depth, h, w);
        if (h != rec.intrinsics.height || w != rec.intrinsics.width) rec.intrinsics = rec.intrinsics.rescaled(h, w);
      }

      Rng rng(derive_seed(common.seed, i));
      switch (opt.method) {
        case AugmentMethod::kNone:
          break;
        case AugmentMethod::kPda: {
          const auto delta = sample_rotation_perturbation(opt.pda, rng);
          const auto view = perturb_view(rec.prior, 0.0, delta);
          auto warped = warp_rgbd(rgb, depth, rec.intrinsics, view.relative, opt.pda.interpolation);
          rgb = std::move(warped.rgb);
          depth = std::move(warped.depth);
          rec.prior = view.prior;
          break;
        }
        case AugmentMethod::kCda: {
          auto cropped = cda_crop(rgb, depth, opt.cda, rng);
          rgb = std::move(cropped.first);
          depth = std::move(cropped.second);
          break;
        }
      }

      const std::string name = record_name(i);
      const fs::path rgb_rel = fs::path("rgb") / (name + io::detail::extension(rgb_in));
      const fs::path depth_rel = fs::path("depth") / (name + io::detail::extension(depth_in));
      if (io::detail::extension(depth_in) == ".png") {
        // Rotations can push depth past the 16-bit range; such pixels leave the mask.
        for (int r = 0; r < depth.height(); ++r)
          for (int c = 0; c < depth.width(); ++c)
            if (depth.is_valid(r, c) && depth.depth(r, c) > io::kMaxPngDepth) depth.invalidate(r, c);
      }
      io::write_rgb(opt.out_dir / rgb_rel, rgb);
      io::write_depth(opt.out_dir / depth_rel, depth);
      rec.rgb = rgb_rel.generic_string();
      rec.depth = depth_rel.generic_string();
      slots.values[i] = Output{std::move(rec)};
    } catch (const std::exception& e) {
      detail::log_skip(i, e.what());
    }
  });

  // Extra columns (encoded maps, predictions) describe the input images, not the
  // augmented ones, so they are dropped.
  io::Manifest out;
  RunSummary summary{0, 0, opt.out_dir / "run.json"};
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!slots.values[i]) {
      ++summary.skipped;
      continue;
    }
    out.add_row(slots.values[i]->record);
    ++summary.processed;
  }
  io::write_manifest(opt.out_dir / "manifest.csv", out);
  return summary;
}

// ---------------------------------------------------------------------------- encode

struct EncodeOptions {
  fs::path manifest;
  fs::path out_dir;
  CppConfig cpp;
  bool export_raw = false;  // also write the pre-transform pseudo-depth map
  double pitch_noise = 0.0;   // radians, uniform jitter before encoding
  double height_noise = 0.0;  // meters
};

inline RunSummary run_encode(const EncodeOptions& opt, const CommonOptions& common) {
  opt.cpp.validate();
  require(opt.pitch_noise >= 0.0 && opt.height_noise >= 0.0, "encode: noise levels must be non-negative");
  auto m = detail::load_manifest(opt.manifest);
  fs::create_directories(opt.out_dir);

  struct Output {
    std::string cpp;
    std::string raw;
  };
  detail::Slots<Output> slots(m.size());
  parallel_for(m.size(), common.jobs, [&](std::size_t i) {
    try {
      const auto& rec = m.records[i];
      PosePrior prior = rec.prior;
      if (opt.pitch_noise > 0.0 || opt.height_noise > 0.0) {
        Rng rng(derive_seed(common.seed, i));
        prior = perturb_prior(prior, opt.pitch_noise, opt.height_noise, rng, opt.cpp.ceiling);
      }
      const auto map = encode(prior, 0.0, rec.intrinsics, opt.cpp);
      Output o;
      const std::string name = record_name(i) + ".f32";
      o.cpp = (fs::path("cpp") / name).generic_string();
      io::write_f32(opt.out_dir / o.cpp, map.values);
      if (opt.export_raw) {
        const auto raw =
            pseudo_depth(pose_from_prior(apply_overrides(prior, opt.cpp)), rec.intrinsics, opt.cpp.ceiling);
        o.raw = (fs::path("cpp_raw") / name).generic_string();
        io::write_f32(opt.out_dir / o.raw, raw);
      }
      slots.values[i] = std::move(o);
    } catch (const std::exception& e) {
      detail::log_skip(i, e.what());
    }
  });

  io::Manifest out;
  out.extra_columns = m.extra_columns;
  RunSummary summary{0, 0, opt.out_dir / "run.json"};
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!slots.values[i]) {
      ++summary.skipped;
      continue;
    }
    out.add_row(m.records[i], m.extras[i]);
    const auto row = out.size() - 1;
    out.set_extra(row, "cpp", slots.values[i]->cpp);
    if (opt.export_raw) out.set_extra(row, "cpp_raw", slots.values[i]->raw);
    ++summary.processed;
  }
  rebase(out, manifest_dir(opt.manifest), opt.out_dir);
  io::write_manifest(opt.out_dir / "manifest.csv", out);
  return summary;
}

// ---------------------------------------------------------------------------- synth

struct SynthOptions {
  fs::path out_dir;
  std::size_t count = 10;
  std::size_t scenes = 5;
  int height = 240;
  int width = 320;
  double hfov = deg2rad(60.0);
  double ceiling = 3.0;
  Range pitch{deg2rad(60.0), deg2rad(120.0)};
  Range roll{deg2rad(-10.0), deg2rad(10.0)};
  Range camera_height{1.0, 2.0};
  std::vector<PosePrior> priors;  // explicit priors replace random ones
  TexturePattern texture;
  std::string depth_format = "f32";  // "f32" or "png"
  std::optional<double> max_depth;   // pixels beyond are left invalid
};

inline CameraIntrinsics synth_intrinsics(const SynthOptions& opt) {
  const double f = 0.5 * opt.width / std::tan(0.5 * opt.hfov);
  return {f, f, 0.5 * (opt.width - 1), 0.5 * (opt.height - 1), opt.width, opt.height};
}

inline RunSummary run_synth(const SynthOptions& opt, const CommonOptions& common) {
  require(opt.depth_format == "f32" || opt.depth_format == "png", "synth: depth format must be f32 or png");
  require(opt.scenes >= 1, "synth: need at least one scene");
  require(opt.hfov > 0.0 && opt.hfov < kPi, "synth: horizontal field of view must lie in (0, 180) degrees");
  const CameraIntrinsics intr = synth_intrinsics(opt);
  intr.validate();
  const std::size_t n = opt.priors.empty() ? opt.count : opt.priors.size();
  for (const auto& p : opt.priors) {
    p.validate();
    require(p.height < opt.ceiling, "synth: prior height must lie below the ceiling");
  }
  if (opt.priors.empty()) {
    require(opt.pitch.lo > 0.0 && opt.pitch.hi < kPi && opt.pitch.lo <= opt.pitch.hi, "synth: invalid pitch range");
    require(opt.camera_height.lo > 0.0 && opt.camera_height.hi < opt.ceiling &&
                opt.camera_height.lo <= opt.camera_height.hi,
            "synth: camera height range must lie inside (0, C)");
  }
  const std::optional<double> max_depth =
      opt.max_depth ? opt.max_depth : (opt.depth_format == "png" ? std::optional(io::kMaxPngDepth) : std::nullopt);
  fs::create_directories(opt.out_dir);

  std::vector<SampleRecord> records(n);
  parallel_for(n, common.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(common.seed, i));
    auto draw = [&](const Range& r) { return r.lo == r.hi ? r.lo : std::uniform_real_distribution(r.lo, r.hi)(rng); };
    PosePrior prior;
    if (opt.priors.empty()) {
      prior.pitch = draw(opt.pitch);
      prior.roll = draw(opt.roll);
      prior.height = draw(opt.camera_height);
    } else {
      prior = opt.priors[i];
    }
    const double yaw = std::uniform_real_distribution(-kPi, kPi)(rng);
    auto scene = render_empty_room(pose_from_prior(prior, yaw), intr, opt.ceiling, opt.texture);
    if (max_depth) {
      for (int r = 0; r < scene.depth.height(); ++r)
        for (int c = 0; c < scene.depth.width(); ++c)
          if (scene.depth.is_valid(r, c) && scene.depth.depth(r, c) > *max_depth) scene.depth.invalidate(r, c);
    }
    const std::string name = record_name(i);
    SampleRecord rec;
    rec.rgb = "rgb/" + name + ".png";
    rec.depth = "depth/" + name + "." + opt.depth_format;
    rec.intrinsics = intr;
    rec.prior = prior;
    rec.scene = "scene_" + record_name(i % opt.scenes);
    io::write_rgb(opt.out_dir / rec.rgb, scene.rgb);
    io::write_depth(opt.out_dir / rec.depth, scene.depth);
    records[i] = std::move(rec);
  });

  io::Manifest out;
  for (auto& r : records) out.add_row(std::move(r));
  io::write_manifest(opt.out_dir / "manifest.csv", out);
  return {n, 0, opt.out_dir / "run.json"};
}

// ---------------------------------------------------------------------------- eval / breakdown

// Where predictions come from. Exactly one source must be set.
struct PredictionSource {
  std::optional<fs::path> pred_dir;          // file named like the gt depth file
  std::optional<std::string> pred_column;    // manifest column holding a depth raster path
  std::optional<fs::path> baseline_train;    // average depth map of this manifest
};

namespace detail {

class Predictor {
 public:
  Predictor(const PredictionSource& src, const io::Manifest& gt, const fs::path& gt_dir)
      : src_(src), gt_(gt), gt_dir_(gt_dir) {
    const int sources = src.pred_dir.has_value() + src.pred_column.has_value() + src.baseline_train.has_value();
    require(sources == 1, "eval: give exactly one of --pred-dir, --pred-column, --baseline-train");
    if (src.pred_column)
      require(gt.column_index(*src.pred_column).has_value(),
              "eval: manifest has no column '" + *src.pred_column + "'");
    if (src.baseline_train) {
      const auto train = io::read_manifest(*src.baseline_train);
      require(train.size() > 0, "eval: baseline train manifest is empty");
      DepthAverager avg;
      for (const auto& r : train.records) avg.add(io::read_depth(resolve(manifest_dir(*src.baseline_train), r.depth)));
      baseline_ = avg.result();
    }
  }

  DepthMap predict(std::size_t i) const {
    if (baseline_) return *baseline_;
    if (src_.pred_dir) return io::read_depth(*src_.pred_dir / fs::path(gt_.records[i].depth).filename());
    const auto value = *gt_.extra(i, *src_.pred_column);
    require(!value.empty(), "no prediction path in column '" + *src_.pred_column + "'");
    return io::read_depth(resolve(gt_dir_, value));
  }

 private:
  PredictionSource src_;
  const io::Manifest& gt_;
  fs::path gt_dir_;
  std::optional<DepthMap> baseline_;
};

inline std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string metrics_fields(const MetricsReport& r) {
  return std::to_string(r.n_pixels) + "," + fmt9(r.abs_rel) + "," + fmt9(r.sq_rel) + "," + fmt9(r.rms_log) + "," +
         fmt9(r.delta1) + "," + fmt9(r.delta2);
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  out << text;
}

}  // namespace detail

struct EvalOptions {
  fs::path manifest;
  PredictionSource pred;
  EvalConfig eval;
  bool per_image = false;
  fs::path out;
};

inline constexpr const char* kEvalHeader = "scope,n_images,n_pixels,abs_rel,sq_rel,rms_log,delta1,delta2";
inline constexpr const char* kBreakdownHeader = "bin,lo,hi,count,n_pixels,abs_rel,sq_rel,rms_log,delta1,delta2";

inline RunSummary run_eval(const EvalOptions& opt, const CommonOptions& common) {
  opt.eval.validate();
  const auto m = detail::load_manifest(opt.manifest);
  const fs::path gt_dir = manifest_dir(opt.manifest);
  const detail::Predictor predictor(opt.pred, m, gt_dir);

  detail::Slots<MetricsAccumulator> slots(m.size());
  parallel_for(m.size(), common.jobs, [&](std::size_t i) {
    try {
      const auto gt = io::read_depth(resolve(gt_dir, m.records[i].depth));
      const auto pred = predictor.predict(i);
      check_dims(m.records[i].intrinsics, gt.height(), gt.width(), "ground truth");
      MetricsAccumulator acc(opt.eval);
      acc.add(pred, gt);
      slots.values[i] = std::move(acc);
    } catch (const std::exception& e) {
      detail::log_skip(i, e.what());
    }
  });

  RunSummary summary{0, 0, fs::path(opt.out.string() + ".run.json")};
  MetricsAccumulator total(opt.eval);
  std::string rows;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!slots.values[i]) {
      ++summary.skipped;
      continue;
    }
    ++summary.processed;
    total.merge(*slots.values[i]);
    if (opt.per_image && slots.values[i]->count() > 0)
      rows += record_name(i) + ",1," + detail::metrics_fields(slots.values[i]->report()) + "\n";
  }
  std::string text = std::string(kEvalHeader) + "\n";
  text += "all," + std::to_string(summary.processed) + "," + detail::metrics_fields(total.report()) + "\n";
  text += rows;
  detail::write_text(opt.out, text);
  return summary;
}

struct BreakdownOptions {
  fs::path manifest;
  PredictionSource pred;
  EvalConfig eval;
  BinKey key = BinKey::kPitch;
  BinEdges edges = BinEdges::uniform(0.0, kPi, 18);
  Aggregation aggregation = Aggregation::kPooled;
  fs::path out;
};

inline RunSummary run_breakdown(const BreakdownOptions& opt, const CommonOptions& common) {
  opt.eval.validate();
  opt.edges.validate();
  const auto m = detail::load_manifest(opt.manifest);
  const fs::path gt_dir = manifest_dir(opt.manifest);
  const detail::Predictor predictor(opt.pred, m, gt_dir);

  detail::Slots<MetricsAccumulator> slots(m.size());
  parallel_for(m.size(), common.jobs, [&](std::size_t i) {
    try {
      const auto gt = io::read_depth(resolve(gt_dir, m.records[i].depth));
      const auto pred = predictor.predict(i);
      MetricsAccumulator one(opt.eval);
      one.add(pred, gt);
      slots.values[i] = std::move(one);
    } catch (const std::exception& e) {
      detail::log_skip(i, e.what());
    }
  });

  Breakdown acc(opt.edges, opt.key, opt.eval, opt.aggregation);
  RunSummary summary{0, 0, fs::path(opt.out.string() + ".run.json")};
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!slots.values[i]) {
      ++summary.skipped;
      continue;
    }
    ++summary.processed;
    acc.add(m.records[i].prior, *slots.values[i]);
  }

  const bool angular = opt.key != BinKey::kHeight;
  std::string text = std::string(kBreakdownHeader) + "\n";
  for (const auto& bin : acc.result()) {
    text += std::to_string(bin.bin) + "," + detail::fmt9(angular ? rad2deg(bin.lo) : bin.lo) + "," +
            detail::fmt9(angular ? rad2deg(bin.hi) : bin.hi) + "," + std::to_string(bin.count) + ",";
    text += bin.metrics ? detail::metrics_fields(*bin.metrics) : std::string("0,,,,,");
    text += "\n";
  }
  detail::write_text(opt.out, text);
  return summary;
}

}  // namespace posebias::pipeline
