#pragma once

// Command-line front end. Exit codes: 0 success, 1 hard error (nothing trustworthy was
// written), 2 partial success (some records were skipped, see stderr).

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "posebias/pipeline.hpp"

namespace posebias::cli {

namespace fs = std::filesystem;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

inline double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw Error(what + ": '" + s + "' is not a number");
}

// "lo:hi" (degrees when angular) -> Range in internal units.
inline Range parse_range(const std::string& s, bool angular, const std::string& what) {
  const auto parts = split(s, ':');
  require(parts.size() == 2, what + ": expected lo:hi, got '" + s + "'");
  Range r{to_double(parts[0], what), to_double(parts[1], what)};
  require(r.lo <= r.hi, what + ": lo must not exceed hi");
  if (angular) r = {deg2rad(r.lo), deg2rad(r.hi)};
  return r;
}

// "lo:hi:count" -> equal-width bins.
inline BinEdges parse_bins(const std::string& s, bool angular, const std::string& what) {
  const auto parts = split(s, ':');
  require(parts.size() == 3, what + ": expected lo:hi:count, got '" + s + "'");
  double lo = to_double(parts[0], what);
  double hi = to_double(parts[1], what);
  const int count = static_cast<int>(to_double(parts[2], what));
  if (angular) {
    lo = deg2rad(lo);
    hi = deg2rad(hi);
  }
  return BinEdges::uniform(lo, hi, count);
}

inline std::optional<std::pair<int, int>> parse_resolution(const std::string& s) {
  if (s == "native") return std::nullopt;
  const auto parts = split(s, 'x');
  require(parts.size() == 2, "resolution: expected HxW or 'native', got '" + s + "'");
  const int h = static_cast<int>(to_double(parts[0], "resolution"));
  const int w = static_cast<int>(to_double(parts[1], "resolution"));
  require(h >= 1 && w >= 1, "resolution: dimensions must be positive");
  return std::pair{h, w};
}

// "roll,pitch,height" in degrees / meters.
inline PosePrior parse_prior(const std::string& s) {
  const auto parts = split(s, ',');
  require(parts.size() == 3, "prior: expected roll,pitch,height, got '" + s + "'");
  PosePrior p{deg2rad(to_double(parts[0], "prior roll")), deg2rad(to_double(parts[1], "prior pitch")),
              to_double(parts[2], "prior height")};
  p.validate();
  return p;
}

inline nlohmann::ordered_json describe(const CLI::App& app) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const auto name = opt->get_name();
    if (name == "--help" || name == "--config" || name == "--version") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ";") + r;
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  return out;
}

inline void write_run_record(const fs::path& path, const CLI::App& app, const CLI::App& sub,
                             const pipeline::CommonOptions& common, const pipeline::RunSummary& summary) {
  nlohmann::ordered_json rec;
  rec["tool"] = "posebias";
  rec["version"] = pipeline::kVersion;
  rec["subcommand"] = sub.get_name();
  rec["seed"] = common.seed;
  rec["global"] = describe(app);
  rec["options"] = describe(sub);
  rec["processed"] = summary.processed;
  rec["skipped"] = summary.skipped;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write run record " + path.string());
  out << rec.dump(2) << '\n';
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"posebias: pose-aware RGB-D augmentation, camera pose encoding and depth evaluation"};
  app.set_version_flag("--version", pipeline::kVersion);
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  pipeline::CommonOptions common;
  app.add_option("--seed", common.seed, "Global random seed")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads (0 = all cores)")->capture_default_str();

  // split
  pipeline::SplitOptions split_opt;
  auto* split = app.add_subcommand("split", "Scene-disjoint train/test split");
  split->add_option("--manifest", split_opt.manifest, "Input manifest")->required();
  split->add_option("--ratio", split_opt.ratio, "Train fraction of scenes")->capture_default_str();
  split->add_option("--out-dir", split_opt.out_dir, "Writes train.csv and test.csv here")->required();

  // sample
  pipeline::SampleOptions sample_opt;
  std::string strategy = "natural";
  std::string pitch_bins = "0:180:18", roll_bins = "-30:30:12", height_bins = "0:3:10";
  std::string r_pitch = "85:95", r_height = "1.45:1.55", r_roll = "-5:5";
  std::size_t sample_count = 0;
  auto* sample = app.add_subcommand("sample", "Draw a Natural / Uniform / Restricted / RS subset");
  sample->add_option("--manifest", sample_opt.manifest, "Input manifest")->required();
  sample->add_option("--strategy", strategy, "natural | uniform | restricted | rs")
      ->check(CLI::IsMember({"natural", "uniform", "restricted", "rs"}))
      ->capture_default_str();
  sample->add_option("--count", sample_count, "Number of output rows")->required();
  sample->add_option("--out", sample_opt.out, "Output manifest")->required();
  sample->add_option("--pitch-bins", pitch_bins, "lo:hi:count, degrees")->capture_default_str();
  sample->add_option("--roll-bins", roll_bins, "lo:hi:count, degrees")->capture_default_str();
  sample->add_option("--height-bins", height_bins, "lo:hi:count, meters")->capture_default_str();
  sample->add_option("--restrict-pitch", r_pitch, "lo:hi, degrees")->capture_default_str();
  sample->add_option("--restrict-height", r_height, "lo:hi, meters")->capture_default_str();
  sample->add_option("--restrict-roll", r_roll, "lo:hi, degrees")->capture_default_str();

  // augment
  pipeline::AugmentOptions aug_opt;
  std::string method = "pda", resolution = "240x320", depth_interp = "inverse";
  std::optional<int> scale;
  std::optional<double> range_all;
  auto* augment = app.add_subcommand("augment", "Perspective-aware (pda) or crop (cda) augmentation");
  augment->add_option("--manifest", aug_opt.manifest, "Input manifest")->required();
  augment->add_option("--out-dir", aug_opt.out_dir, "Output dataset directory")->required();
  augment->add_option("--method", method, "pda | cda | none")
      ->check(CLI::IsMember({"pda", "cda", "none"}))
      ->capture_default_str();
  augment->add_option("--scale", scale, "Perturb each axis within +-5*s degrees");
  augment->add_option("--range", range_all, "Perturb each axis within +-range radians");
  augment->add_option("--pitch-range", aug_opt.pda.pitch_range, "Radians")->capture_default_str();
  augment->add_option("--roll-range", aug_opt.pda.roll_range, "Radians")->capture_default_str();
  augment->add_option("--yaw-range", aug_opt.pda.yaw_range, "Radians")->capture_default_str();
  augment->add_option("--depth-interp", depth_interp, "inverse | linear")
      ->check(CLI::IsMember({"inverse", "linear"}))
      ->capture_default_str();
  augment->add_option("--min-crop", aug_opt.cda.min_scale, "Smallest crop side fraction (cda)")
      ->capture_default_str();
  augment->add_option("--resolution", resolution, "HxW working resolution or 'native'")->capture_default_str();

  // encode
  pipeline::EncodeOptions enc_opt;
  std::string variant = "atan";
  std::optional<double> fixed_pitch_deg, pitch_noise_deg;
  auto* encode_cmd = app.add_subcommand("encode", "Write per-record camera pose prior maps");
  encode_cmd->add_option("--manifest", enc_opt.manifest, "Input manifest")->required();
  encode_cmd->add_option("--out-dir", enc_opt.out_dir, "Output directory")->required();
  encode_cmd->add_option("--variant", variant, "atan | clip | naive")
      ->check(CLI::IsMember({"atan", "clip", "naive"}))
      ->capture_default_str();
  encode_cmd->add_option("--ceiling", enc_opt.cpp.ceiling, "Floor-to-ceiling distance C, meters")
      ->capture_default_str();
  encode_cmd->add_option("--tau", enc_opt.cpp.clip_threshold, "Clip threshold, meters (clip)")
      ->capture_default_str();
  encode_cmd->add_option("--fixed-pitch", fixed_pitch_deg, "Encode every record with this pitch, degrees");
  encode_cmd->add_option("--fixed-height", enc_opt.cpp.fixed_height, "Encode every record with this height, m");
  encode_cmd->add_option("--pitch-noise", pitch_noise_deg, "Uniform pitch jitter half-width, degrees");
  encode_cmd->add_option("--height-noise", enc_opt.height_noise, "Uniform height jitter half-width, m")
      ->capture_default_str();
  encode_cmd->add_flag("--export-raw", enc_opt.export_raw, "Also write the pre-atan pseudo depth (cpp_raw)");

  // synth
  pipeline::SynthOptions syn_opt;
  std::string syn_res = "240x320", syn_pitch = "60:120", syn_roll = "-10:10", syn_height = "1:2";
  std::string texture = "checker";
  double hfov_deg = 60.0;
  std::vector<std::string> priors;
  auto* synth = app.add_subcommand("synth", "Render analytic empty-room RGB-D fixtures");
  synth->add_option("--out-dir", syn_opt.out_dir, "Output dataset directory")->required();
  synth->add_option("--count", syn_opt.count, "Number of random views")->capture_default_str();
  synth->add_option("--scenes", syn_opt.scenes, "Number of scene ids to cycle through")->capture_default_str();
  synth->add_option("--resolution", syn_res, "HxW")->capture_default_str();
  synth->add_option("--hfov", hfov_deg, "Horizontal field of view, degrees")->capture_default_str();
  synth->add_option("--ceiling", syn_opt.ceiling, "Floor-to-ceiling distance, meters")->capture_default_str();
  synth->add_option("--pitch", syn_pitch, "Random pitch range lo:hi, degrees")->capture_default_str();
  synth->add_option("--roll", syn_roll, "Random roll range lo:hi, degrees")->capture_default_str();
  synth->add_option("--height", syn_height, "Random camera height range lo:hi, meters")->capture_default_str();
  synth->add_option("--prior", priors, "Explicit roll,pitch,height (degrees, m); repeatable");
  synth->add_option("--texture", texture, "checker | smooth")
      ->check(CLI::IsMember({"checker", "smooth"}))
      ->capture_default_str();
  synth->add_option("--depth-format", syn_opt.depth_format, "f32 | png")
      ->check(CLI::IsMember({"f32", "png"}))
      ->capture_default_str();
  synth->add_option("--max-depth", syn_opt.max_depth, "Mask depth beyond this range, meters");

  // eval / breakdown share prediction sources
  auto add_prediction_options = [](CLI::App* cmd, pipeline::PredictionSource& src, EvalConfig& cfg) {
    cmd->add_option("--pred-dir", src.pred_dir, "Directory of predictions named like the gt depth files");
    cmd->add_option("--pred-column", src.pred_column, "Manifest column holding prediction paths (e.g. cpp_raw)");
    cmd->add_option("--baseline-train", src.baseline_train, "Predict the average depth map of this manifest");
    cmd->add_option("--min-depth", cfg.min_depth, "Evaluation range lower end, meters")->capture_default_str();
    cmd->add_option("--max-depth", cfg.max_depth, "Evaluation range upper end, meters")->capture_default_str();
  };

  pipeline::EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Depth metrics over a manifest");
  eval->add_option("--manifest", eval_opt.manifest, "Ground-truth manifest")->required();
  eval->add_option("--out", eval_opt.out, "Output CSV")->required();
  eval->add_flag("--per-image", eval_opt.per_image, "Also emit one row per image");
  add_prediction_options(eval, eval_opt.pred, eval_opt.eval);

  pipeline::BreakdownOptions bd_opt;
  std::string key = "pitch", edges;
  bool per_image_mean = false;
  auto* bd = app.add_subcommand("breakdown", "Depth metrics per pitch / roll / height bin");
  bd->add_option("--manifest", bd_opt.manifest, "Ground-truth manifest")->required();
  bd->add_option("--out", bd_opt.out, "Output CSV")->required();
  bd->add_option("--key", key, "pitch | roll | height")
      ->check(CLI::IsMember({"pitch", "roll", "height"}))
      ->capture_default_str();
  bd->add_option("--edges", edges, "lo:hi:count (degrees for angles); default per key");
  bd->add_flag("--per-image-mean", per_image_mean, "Average per-image metrics instead of pooling pixels");
  add_prediction_options(bd, bd_opt.pred, bd_opt.eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const CLI::App* chosen = app.get_subcommands().front();
    pipeline::RunSummary summary;
    if (chosen == split) {
      summary = pipeline::run_split(split_opt, common);
    } else if (chosen == sample) {
      auto& spec = sample_opt.spec;
      spec.strategy = strategy == "natural"   ? Strategy::kNatural
                      : strategy == "uniform" ? Strategy::kUniform
                      : strategy == "rs"      ? Strategy::kResample
                                              : Strategy::kRestricted;
      spec.count = sample_count;
      spec.pitch_bins = detail::parse_bins(pitch_bins, true, "--pitch-bins");
      spec.roll_bins = detail::parse_bins(roll_bins, true, "--roll-bins");
      spec.height_bins = detail::parse_bins(height_bins, false, "--height-bins");
      spec.restricted.pitch = detail::parse_range(r_pitch, true, "--restrict-pitch");
      spec.restricted.height = detail::parse_range(r_height, false, "--restrict-height");
      spec.restricted.roll = detail::parse_range(r_roll, true, "--restrict-roll");
      summary = pipeline::run_sample(sample_opt, common);
    } else if (chosen == augment) {
      aug_opt.method = method == "pda"   ? pipeline::AugmentMethod::kPda
                       : method == "cda" ? pipeline::AugmentMethod::kCda
                                         : pipeline::AugmentMethod::kNone;
      require(!(scale && range_all), "augment: give at most one of --scale and --range");
      if (scale) {
        const auto interp = aug_opt.pda.interpolation;
        aug_opt.pda = PdaConfig::from_scale(*scale);
        aug_opt.pda.interpolation = interp;
      }
      if (range_all) aug_opt.pda.pitch_range = aug_opt.pda.roll_range = aug_opt.pda.yaw_range = *range_all;
      aug_opt.pda.interpolation =
          depth_interp == "linear" ? DepthInterpolation::kDepth : DepthInterpolation::kInverseDepth;
      aug_opt.resolution = detail::parse_resolution(resolution);
      summary = pipeline::run_augment(aug_opt, common);
    } else if (chosen == encode_cmd) {
      enc_opt.cpp.variant = variant == "atan"   ? CppVariant::kAtan
                            : variant == "clip" ? CppVariant::kClip
                                                : CppVariant::kNaive;
      if (fixed_pitch_deg) enc_opt.cpp.fixed_pitch = deg2rad(*fixed_pitch_deg);
      if (pitch_noise_deg) enc_opt.pitch_noise = deg2rad(*pitch_noise_deg);
      summary = pipeline::run_encode(enc_opt, common);
    } else if (chosen == synth) {
      const auto res = detail::parse_resolution(syn_res);
      require(res.has_value(), "synth: resolution must be HxW");
      syn_opt.height = res->first;
      syn_opt.width = res->second;
      syn_opt.hfov = deg2rad(hfov_deg);
      syn_opt.pitch = detail::parse_range(syn_pitch, true, "--pitch");
      syn_opt.roll = detail::parse_range(syn_roll, true, "--roll");
      syn_opt.camera_height = detail::parse_range(syn_height, false, "--height");
      for (const auto& p : priors) syn_opt.priors.push_back(detail::parse_prior(p));
      syn_opt.texture.kind =
          texture == "smooth" ? TexturePattern::Kind::kSmoothDirection : TexturePattern::Kind::kCheckerboard;
      summary = pipeline::run_synth(syn_opt, common);
    } else if (chosen == eval) {
      summary = pipeline::run_eval(eval_opt, common);
    } else if (chosen == bd) {
      bd_opt.key = key == "pitch" ? BinKey::kPitch : key == "roll" ? BinKey::kRoll : BinKey::kHeight;
      if (edges.empty()) edges = key == "pitch" ? "0:180:18" : key == "roll" ? "-30:30:12" : "0:3:10";
      bd_opt.edges = detail::parse_bins(edges, key != "height", "--edges");
      bd_opt.aggregation = per_image_mean ? Aggregation::kPerImage : Aggregation::kPooled;
      summary = pipeline::run_breakdown(bd_opt, common);
    }
    detail::write_run_record(summary.record_path, app, *chosen, common, summary);
    if (summary.skipped > 0)
      std::cerr << chosen->get_name() << ": " << summary.skipped << " record(s) skipped, " << summary.processed
                << " processed\n";
    return summary.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("posebias");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace posebias::cli
