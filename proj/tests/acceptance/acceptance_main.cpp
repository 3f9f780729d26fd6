// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits non-zero if any
// criterion fails. Usage: acceptance [--cli path/to/posebias] [--only N] [--workdir DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "posebias/cli.hpp"
#include "../test_support.hpp"

namespace fs = std::filesystem;
using namespace posebias;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 240x320 camera with a randomised focal length and principal point.
CameraIntrinsics random_intrinsics(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(150.0, 450.0), aspect(0.9, 1.1), dc(-20.0, 20.0);
  const double fx = f(rng);
  return {fx, fx * aspect(rng), 159.5 + dc(rng), 119.5 + dc(rng), 320, 240};
}

// The synth default camera: 240x320 with a 60 degree horizontal field of view.
CameraIntrinsics make_standard() {
  const double f = 160.0 / std::tan(deg2rad(30.0));
  return {f, f, 159.5, 119.5, 320, 240};
}

// ---------------------------------------------------------------------------- 1

Outcome range_bound() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const CameraIntrinsics k = make_standard();
  std::uniform_real_distribution<double> pitch(1e-3, kPi - 1e-3), roll(deg2rad(-30), deg2rad(30)), unit(0.0, 1.0);
  int violating = 0, tight_violating = 0;
  double worst = 0.0;
  std::string example;
  for (int i = 0; i < 1000; ++i) {
    const double c = 3.0 + (i % 6);
    double h = 0.0;
    while (h <= 0.0 || h >= c) h = unit(rng) * c;
    const PosePrior p{roll(rng), pitch(rng), h};
    CppConfig cfg;
    cfg.ceiling = c;
    const auto map = encode_cpp(p, 0.0, k, cfg);
    const double lo = cpp_nominal_lower_bound(h, c);
    const double tight = cpp_lower_bound(h, c, k);
    bool bad = false, tight_bad = false;
    for (double x : map.values.data()) {
      if (x < lo - 1e-9 || x > kPi / 2 + 1e-9) {
        bad = true;
        if (lo - x > worst) {
          worst = lo - x;
          example = fmt("pitch=%.1fdeg h=%.2f C=%.0f value=%.4f bound=%.4f", rad2deg(p.pitch), h, c, x, lo);
        }
      }
      if (x < tight - 1e-9 || x > kPi / 2 + 1e-9) tight_bad = true;
    }
    violating += bad;
    tight_violating += tight_bad;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = violating == 0 && secs < 10.0;
  o.detail = fmt("%d/1000 priors leave [atan(min(h,C-h)), pi/2]; worst deficit %.4f rad", violating, worst);
  if (!example.empty()) o.detail += " (" + example + ")";
  o.detail += fmt("; corner-ray bound atan(min(h,C-h)/max|K^-1 q|) violated by %d/1000; %.2fs", tight_violating, secs);
  return o;
}

// ---------------------------------------------------------------------------- 2

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  double worst = 0.0;
  std::size_t checked = 0, inf_mismatch = 0;
  for (int i = 0; i < 200; ++i) {
    const CameraIntrinsics k = random_intrinsics(rng);
    const double c = 3.0 + (i % 6);
    const PosePrior p = posebias::testing::random_prior(rng, c);
    const CameraPose pose = pose_from_prior(p, yaw(rng));
    const auto m = pseudo_depth(pose, k, c);
    const auto scene = render_empty_room(pose, k, c);
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        if (!scene.depth.is_valid(v, u)) {
          inf_mismatch += !std::isinf(m(v, u));
          continue;
        }
        const double g = scene.depth.depth(v, u);
        worst = std::max(worst, std::abs(m(v, u) - g) / g);
        ++checked;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && inf_mismatch == 0 && secs < 30.0,
          fmt("max relative error %.3g over %zu renderer-valid pixels; %zu invalid pixels not +inf; %.2fs", worst,
              checked, inf_mismatch, secs)};
}

// ---------------------------------------------------------------------------- 3

Outcome closed_form() {
  const CameraIntrinsics k{300, 300, 160, 120, 320, 240};
  const auto down = encode_cpp(pose_from_prior({0.0, kPi, 1.5}), k, CppConfig{});
  double worst = 0.0;
  for (double x : down.values.data()) worst = std::max(worst, std::abs(x - std::atan(1.5)));
  const auto level = encode_cpp(pose_from_prior({0.0, kPi / 2, 1.5}), k, CppConfig{});
  int off = 0;
  for (int u = 0; u < k.width; ++u) off += level.values(120, u) != kPi / 2;
  return {worst <= 1e-9 && off == 0,
          fmt("straight-down max |value - atan(1.5)| = %.3g; horizon row entries != pi/2: %d", worst, off)};
}

// ---------------------------------------------------------------------------- 4

Outcome yaw_invariance() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), shift(-50.0, 50.0);
  double worst = 0.0, worst_shift = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics k = random_intrinsics(rng);
    const PosePrior p = posebias::testing::random_prior(rng);
    const auto a = encode_cpp(p, yaw(rng), k, CppConfig{});
    const auto b = encode_cpp(p, yaw(rng), k, CppConfig{});
    CameraPose moved = pose_from_prior(p, yaw(rng));
    moved.position.x() += shift(rng);
    moved.position.y() += shift(rng);
    const auto c = encode_cpp(moved, k, CppConfig{});
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      worst = std::max(worst, std::abs(a.values.data()[j] - b.values.data()[j]));
      worst_shift = std::max(worst_shift, std::abs(a.values.data()[j] - c.values.data()[j]));
    }
  }
  return {worst <= 1e-12 && worst_shift <= 1e-12,
          fmt("max |difference| across yaw %.3g, across horizontal translation %.3g", worst, worst_shift)};
}

// ---------------------------------------------------------------------------- 5

Outcome pda_round_trip() {
  const CameraIntrinsics k = make_standard();
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> delta(-0.2, 0.2);
  const TexturePattern smooth{TexturePattern::Kind::kSmoothDirection};

  bool identity_exact = true;
  double worst_depth = 0.0, worst_rgb = 0.0;
  std::size_t checked = 0;
  for (int i = 0; i < 100; ++i) {
    const PosePrior p = posebias::testing::random_prior(rng);
    const double yaw = delta(rng) * 10;
    const auto scene = render_empty_room(pose_from_prior(p, yaw), k, 3.0, smooth);
    if (i < 5) {
      const auto same = warp_rgbd(scene.rgb, scene.depth, k, Mat3::Identity());
      identity_exact = identity_exact && same.rgb == scene.rgb && same.depth.depth == scene.depth.depth &&
                       same.depth.valid == scene.depth.valid;
    }
    const auto view = perturb_view(p, yaw, {delta(rng), delta(rng), delta(rng)});
    const auto there = warp_rgbd(scene.rgb, scene.depth, k, view.relative);
    const auto back = warp_rgbd(there.rgb, there.depth, k, view.relative.transpose());
    Mask both(k.height, k.width, 1, 0);
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u) both(v, u) = scene.depth.is_valid(v, u) && back.depth.is_valid(v, u);
    const Mask inner = posebias::testing::interior(both, scene.surface, 2);
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        if (!inner(v, u)) continue;
        const double g = scene.depth.depth(v, u);
        worst_depth = std::max(worst_depth, std::abs(back.depth.depth(v, u) - g) / g);
        for (int c = 0; c < 3; ++c) worst_rgb = std::max(worst_rgb, double(std::abs(back.rgb(v, u, c) - scene.rgb(v, u, c))));
        ++checked;
      }
    }
  }
  return {identity_exact && worst_depth <= 0.01 && worst_rgb <= 2.0 / 255.0 && checked > 0,
          fmt("identity exact: %s; round trip over %zu interior pixels: max depth rel error %.3g, max rgb error %.3g "
              "(limit %.4f)",
              identity_exact ? "yes" : "no", checked, worst_depth, worst_rgb, 2.0 / 255.0)};
}

// ---------------------------------------------------------------------------- 6

struct OracleStats {
  double min_fraction = 1.0;
  double mean_void = 0.0;
};

OracleStats pda_oracle_at(int scale, int trials, std::mt19937_64& rng, DepthInterpolation interp) {
  const CameraIntrinsics k = make_standard();
  Rng prng(rng());
  OracleStats s;
  for (int t = 0; t < trials; ++t) {
    const PosePrior p = posebias::testing::random_prior(rng);
    const auto delta = sample_rotation_perturbation(PdaConfig::from_scale(scale), prng);
    const auto view = perturb_view(p, 0.0, delta);
    const auto src = render_empty_room(pose_from_prior(p), k, 3.0);
    const auto expected = render_empty_room(pose_from_prior(view.prior, view.yaw), k, 3.0);
    const auto out = warp_rgbd(src.rgb, src.depth, k, view.relative, interp);
    std::size_t valid = 0, good = 0, renderable = 0, voids = 0;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        if (expected.depth.is_valid(v, u)) {
          ++renderable;
          voids += !out.depth.is_valid(v, u);
        }
        if (!out.depth.is_valid(v, u)) continue;
        ++valid;
        if (!expected.depth.is_valid(v, u)) continue;
        const double g = expected.depth.depth(v, u);
        good += std::abs(out.depth.depth(v, u) - g) <= 0.01 * g;
      }
    }
    s.min_fraction = std::min(s.min_fraction, valid ? double(good) / valid : 0.0);
    s.mean_void += renderable ? double(voids) / renderable / trials : 0.0;
  }
  return s;
}

Outcome pda_oracle() {
  std::mt19937_64 rng(606);
  std::string detail;
  bool pass = true;
  for (int s = 1; s <= 4; ++s) {
    const auto st = pda_oracle_at(s, 25, rng, DepthInterpolation::kInverseDepth);
    pass = pass && st.min_fraction >= 0.99;
    detail += fmt("s=%d worst within-1%% fraction %.4f; ", s, st.min_fraction);
  }
  std::vector<double> voids;
  for (int s : {1, 4, 8, 16}) voids.push_back(pda_oracle_at(s, 10, rng, DepthInterpolation::kInverseDepth).mean_void);
  const bool trend = voids[0] < voids[1] && voids[1] < voids[2] && voids[2] < voids[3];
  detail += fmt("void fraction s=1/4/8/16: %.3f/%.3f/%.3f/%.3f (%s)", voids[0], voids[1], voids[2], voids[3],
                trend ? "growing" : "not monotone");
  return {pass, detail};
}

// ---------------------------------------------------------------------------- 7

Outcome roll_ninety() {
  const int n = 241;
  const CameraIntrinsics k{200, 200, 120, 120, n, n};
  const auto depth = DepthMap::constant(n, n, 2.75);
  const RgbImage rgb(n, n, 3, 0.0f);
  const auto view = perturb_view({0.0, 1.3, 1.5}, 0.0, {0.0, kPi / 2, 0.0});
  const auto out = warp_rgbd(rgb, depth, k, view.relative);
  double worst = 0.0;
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      if (out.depth.is_valid(v, u)) worst = std::max(worst, std::abs(out.depth.depth(v, u) - 2.75));
  const bool full = out.depth.valid_count() == static_cast<std::size_t>(n) * n;
  return {worst <= 1e-6 && full,
          fmt("max |z - z0| = %.3g; %zu/%d pixels valid", worst, out.depth.valid_count(), n * n)};
}

// ---------------------------------------------------------------------------- 8

Outcome metrics_oracle() {
  const auto a = compute_metrics(DepthMap::constant(16, 16, 2.4), DepthMap::constant(16, 16, 2.0));
  const auto b = compute_metrics(DepthMap::constant(16, 16, 2.6), DepthMap::constant(16, 16, 2.0));
  const bool first = std::abs(a.abs_rel - 0.2) <= 1e-6 && std::abs(a.sq_rel - 0.08) <= 1e-6 &&
                     std::abs(a.rms_log - 0.182322) <= 1e-6 && std::abs(a.delta1 - 1.0) <= 1e-6 &&
                     std::abs(a.delta2 - 1.0) <= 1e-6;
  const bool second = std::abs(b.delta1) <= 1e-6 && std::abs(b.delta2 - 1.0) <= 1e-6;
  const bool ends = normalize_depth(1.0) == -1.0 && normalize_depth(10.0) == 1.0;
  return {first && second && ends,
          fmt("(2.0,2.4): abs_rel %.6f sq_rel %.6f rms_log %.6f d1 %.3f d2 %.3f; (2.0,2.6): d1 %.3f d2 %.3f; "
              "normalize(1)=%g normalize(10)=%g",
              a.abs_rel, a.sq_rel, a.rms_log, a.delta1, a.delta2, b.delta1, b.delta2, normalize_depth(1.0),
              normalize_depth(10.0))};
}

// ---------------------------------------------------------------------------- 9

SampleRecord synthetic_record(double roll_deg, double pitch_deg, double height, std::string scene) {
  SampleRecord r;
  r.rgb = "rgb.png";
  r.depth = "depth.png";
  r.intrinsics = make_standard();
  r.prior = {deg2rad(roll_deg), deg2rad(pitch_deg), height};
  r.scene = std::move(scene);
  return r;
}

Outcome samplers() {
  std::mt19937_64 gen(909);
  std::string detail;

  // Restricted: exhaustive comparison with a degree-space oracle on a population that
  // sits on and around every range edge.
  const std::vector<double> pitches = {80, 84.5, 85, 85.5, 90, 94.5, 95, 95.5, 100, 120};
  const std::vector<double> heights = {1.40, 1.449, 1.45, 1.5, 1.55, 1.551, 1.6};
  const std::vector<double> rolls = {-10, -5.5, -5, 0, 4.5, 5, 5.5};
  std::vector<SampleRecord> pop;
  std::set<std::size_t> oracle;
  std::uniform_int_distribution<std::size_t> pi(0, pitches.size() - 1), hi(0, heights.size() - 1),
      ri(0, rolls.size() - 1);
  for (std::size_t i = 0; i < 10000; ++i) {
    const double p = pitches[pi(gen)], h = heights[hi(gen)], r = rolls[ri(gen)];
    pop.push_back(synthetic_record(r, p, h, "s"));
    if (p >= 85 && p <= 95 && h >= 1.45 && h <= 1.55 && r >= -5 && r <= 5) oracle.insert(i);
  }
  std::size_t accept_mismatch = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) accept_mismatch += RestrictedRanges{}.accepts(pop[i].prior) != oracle.contains(i);
  std::mt19937_64 rng(1);
  const auto all = sample_restricted(pop, oracle.size(), RestrictedRanges{}, rng);
  const bool restricted_ok =
      accept_mismatch == 0 && std::set<std::size_t>(all.begin(), all.end()) == oracle && all.size() == oracle.size();
  detail += fmt("restricted: %zu eligible, %zu disagreements; ", oracle.size(), accept_mismatch);

  // Uniform: skewed but sufficiently populated bins.
  std::vector<SampleRecord> skewed;
  std::uniform_real_distribution<double> wide(0.5, 179.5), peak(85, 95), roll(-29, 29), height(0.1, 2.9);
  for (int i = 0; i < 7000; ++i) skewed.push_back(synthetic_record(roll(gen), peak(gen), height(gen), "s"));
  for (int i = 0; i < 3000; ++i) skewed.push_back(synthetic_record(roll(gen), wide(gen), height(gen), "s"));
  SamplingSpec spec;
  spec.strategy = Strategy::kUniform;
  spec.count = 1800;
  spec.seed = 3;
  std::map<int, int> hist;
  for (auto i : sample(skewed, spec)) ++hist[*spec.pitch_bins.locate(skewed[i].prior.pitch)];
  int lo = 1 << 30, hi_count = 0;
  for (const auto& [b, n] : hist) {
    lo = std::min(lo, n);
    hi_count = std::max(hi_count, n);
  }
  const bool uniform_ok = hist.size() == 18 && hi_count - lo <= 1;
  detail += fmt("uniform: %zu bins, counts %d..%d; ", hist.size(), lo, hi_count);

  // RS with replacement at n = 1e5.
  spec.strategy = Strategy::kResample;
  spec.count = 100000;
  std::map<int, int> rs;
  for (auto i : sample(skewed, spec)) ++rs[*spec.pitch_bins.locate(skewed[i].prior.pitch)];
  const double expected = 100000.0 / rs.size();
  double worst_rs = 0.0;
  for (const auto& [b, n] : rs) worst_rs = std::max(worst_rs, std::abs(n - expected) / expected);
  const bool rs_ok = worst_rs <= 0.05;
  detail += fmt("rs: max deviation from equal %.4f; ", worst_rs);

  // Scene splits.
  bool split_ok = true;
  for (int scenes : {2, 7, 20, 37, 100, 263}) {
    std::vector<SampleRecord> recs;
    for (int s = 0; s < scenes; ++s)
      for (int j = 0; j < 1 + s % 3; ++j) recs.push_back(synthetic_record(0, 90, 1.5, "scene" + std::to_string(s)));
    const auto split = split_scenes(recs, 0.85, 11 + scenes);
    std::set<std::string> train, test;
    for (auto i : split.train) train.insert(recs[i].scene);
    for (auto i : split.test) test.insert(recs[i].scene);
    bool disjoint = true;
    for (const auto& s : train) disjoint = disjoint && !test.contains(s);
    split_ok = split_ok && disjoint && train.size() + test.size() == static_cast<std::size_t>(scenes) &&
               std::abs(double(train.size()) - 0.85 * scenes) <= 1.0;
    if (scenes == 100) detail += fmt("split of 100 scenes: %zu/%zu", train.size(), test.size());
  }
  return {restricted_ok && uniform_ok && rs_ok && split_ok, detail};
}

// ---------------------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int invoke(const std::string& cli, const std::vector<std::string>& args) {
  if (cli.empty()) return posebias::cli::run(args);
  std::string cmd = "\"" + cli + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " 2>&1";
  return std::system(cmd.c_str()) == 0 ? 0 : 1;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return files;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string data = (work / "data").string();
  if (invoke(cli, {"--seed", "2024", "synth", "--out-dir", data, "--count", "500", "--scenes", "50",
                   "--depth-format", "png"}) != 0)
    return {false, "synth failed"};

  const fs::path run = work / "run";
  auto pipeline = [&]() -> std::string {
    const std::string r = run.string();
    const std::vector<std::vector<std::string>> steps = {
        {"--seed", "7", "sample", "--manifest", data + "/manifest.csv", "--strategy", "uniform", "--count", "400",
         "--out", r + "/sample.csv"},
        {"--seed", "7", "augment", "--manifest", r + "/sample.csv", "--out-dir", r + "/aug", "--scale", "2"},
        {"--seed", "7", "encode", "--manifest", r + "/aug/manifest.csv", "--out-dir", r + "/enc", "--export-raw"},
        {"--seed", "7", "eval", "--manifest", r + "/enc/manifest.csv", "--pred-column", "cpp_raw", "--out",
         r + "/eval.csv"},
    };
    for (const auto& s : steps)
      if (invoke(cli, s) != 0) return "step '" + s[2] + "' failed";
    return "";
  };

  const auto t0 = Clock::now();
  if (auto err = pipeline(); !err.empty()) return {false, "first run: " + err};
  const double first = seconds_since(t0);
  fs::rename(run, work / "first");
  const auto t1 = Clock::now();
  if (auto err = pipeline(); !err.empty()) return {false, "second run: " + err};
  const double second = seconds_since(t1);

  const auto a = snapshot(work / "first");
  const auto b = snapshot(run);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    differing += it == b.end() || it->second != bytes;
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;

  std::istringstream eval(slurp(run / "eval.csv"));
  std::string header, row;
  std::getline(eval, header);
  std::getline(eval, row);
  const bool fast = std::max(first, second) < 120.0;
  return {differing == 0 && a.size() > 1000 && fast,
          fmt("%zu output files, %zu differ; runs took %.1fs and %.1fs; eval of warped gt vs pose map: %s", a.size(),
              differing, first, second, row.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  int only = 0;
  fs::path work = fs::temp_directory_path() / "posebias_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (a == "--workdir" && i + 1 < argc) work = argv[++i];
    else {
      std::cerr << "usage: acceptance [--cli PATH] [--only N] [--workdir DIR]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "CPP range bound", range_bound},
      {2, "CPP oracle equivalence", oracle_equivalence},
      {3, "straight-down closed form", closed_form},
      {4, "CPP yaw / horizontal-translation invariance", yaw_invariance},
      {5, "PDA identity and round trip", pda_round_trip},
      {6, "PDA analytic oracle", pda_oracle},
      {7, "roll-90 depth invariance", roll_ninety},
      {8, "metrics hand oracle", metrics_oracle},
      {9, "samplers and splits", samplers},
      {10, "end-to-end determinism", [&] { return determinism(cli, work); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.title << ": " << o.detail
              << fmt(" [%.1fs]", seconds_since(t0)) << std::endl;
  }
  std::cout << (failed ? fmt("%d criterion(s) failed", failed) : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
