#pragma once

// Dataset subset construction. Every sampler returns indices into its input so callers
// can carry extra per-row data through unchanged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "posebias/geometry.hpp"

namespace posebias {

struct SampleRecord {
  std::string rgb;
  std::string depth;
  CameraIntrinsics intrinsics;
  PosePrior prior;
  std::optional<CameraPose> pose;
  std::string scene;

  void validate() const {
    require(!rgb.empty() && !depth.empty(), "record: rgb and depth paths must be non-empty");
    intrinsics.validate();
    prior.validate();
  }
};

using Selection = std::vector<std::size_t>;

template <typename T>
std::vector<T> select(std::span<const T> items, const Selection& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

// Strictly increasing bin edges. The lower edge of each bin is inclusive; the last bin
// also includes its upper edge.
struct BinEdges {
  std::vector<double> edges;

  static BinEdges uniform(double lo, double hi, int count) {
    require(count >= 1 && hi > lo, "bins: need count >= 1 and hi > lo");
    BinEdges b;
    for (int i = 0; i <= count; ++i) b.edges.push_back(lo + (hi - lo) * i / count);
    return b;
  }

  void validate() const {
    require(edges.size() >= 2, "bins: need at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
      require(edges[i] > edges[i - 1], "bins: edges must be strictly increasing");
  }

  int count() const { return static_cast<int>(edges.size()) - 1; }

  std::optional<int> locate(double x) const {
    if (!(x >= edges.front() && x <= edges.back())) return std::nullopt;
    if (x == edges.back()) return count() - 1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<int>(it - edges.begin()) - 1;
  }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct RestrictedRanges {
  Range pitch{deg2rad(85.0), deg2rad(95.0)};
  Range height{1.45, 1.55};
  Range roll{deg2rad(-5.0), deg2rad(5.0)};

  bool accepts(const PosePrior& p) const {
    return pitch.contains(p.pitch) && height.contains(p.height) && roll.contains(p.roll);
  }
};

enum class Strategy { kNatural, kUniform, kRestricted, kResample };

struct SamplingSpec {
  Strategy strategy = Strategy::kNatural;
  std::size_t count = 1;
  BinEdges pitch_bins = BinEdges::uniform(0.0, kPi, 18);
  BinEdges roll_bins = BinEdges::uniform(deg2rad(-30.0), deg2rad(30.0), 12);
  BinEdges height_bins = BinEdges::uniform(0.0, 3.0, 10);
  RestrictedRanges restricted;
  std::uint64_t seed = 0;

  void validate() const {
    require(count >= 1, "sampling: target count must be >= 1");
    pitch_bins.validate();
    roll_bins.validate();
    height_bins.validate();
  }
};

struct SceneSplit {
  Selection train;
  Selection test;
};

// Assigns whole scenes to train or test, so no scene contributes to both sides.
inline SceneSplit split_scenes(std::span<const SampleRecord> records, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, "split: ratio must lie in (0, 1)");
  std::vector<std::string> scenes;
  {
    std::set<std::string> unique;
    for (const auto& r : records) unique.insert(r.scene);
    scenes.assign(unique.begin(), unique.end());
  }
  require(scenes.size() >= 2, "split: need at least two distinct scenes, got " + std::to_string(scenes.size()));

  std::mt19937_64 rng(seed);
  std::shuffle(scenes.begin(), scenes.end(), rng);
  const auto n = static_cast<long>(scenes.size());
  const long n_train = std::clamp(std::lround(ratio * n), 1L, n - 1);
  const std::set<std::string> train_scenes(scenes.begin(), scenes.begin() + n_train);

  SceneSplit split;
  for (std::size_t i = 0; i < records.size(); ++i)
    (train_scenes.contains(records[i].scene) ? split.train : split.test).push_back(i);
  return split;
}

namespace detail {

// k distinct indices drawn uniformly from `pool`, returned in pool order.
inline Selection choose_without_replacement(Selection pool, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Deals `total` units one at a time round-robin over bins that still have capacity,
// starting from a random bin. Bins with zero capacity get nothing; when `bounded` is
// false the remaining capacities are ignored.
inline std::vector<std::size_t> round_robin_quotas(std::size_t total, const std::vector<std::size_t>& capacity,
                                                   bool bounded, std::mt19937_64& rng) {
  const std::size_t bins = capacity.size();
  std::vector<std::size_t> quota(bins, 0);
  std::vector<std::size_t> open;
  for (std::size_t b = 0; b < bins; ++b)
    if (capacity[b] > 0) open.push_back(b);
  if (open.empty()) return quota;

  std::size_t cursor = std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng);
  // Whole rounds first, then the remainder one by one.
  while (total > 0 && !open.empty()) {
    const std::size_t rounds = bounded ? 1 : total / open.size();
    if (rounds > 1) {
      for (auto b : open) quota[b] += rounds;
      total -= rounds * open.size();
      continue;
    }
    cursor %= open.size();
    const std::size_t b = open[cursor];
    ++quota[b];
    --total;
    if (bounded && quota[b] == capacity[b]) {
      open.erase(open.begin() + static_cast<long>(cursor));
    } else {
      ++cursor;
    }
  }
  return quota;
}

using BinnedIndices = std::map<int, Selection>;

inline BinnedIndices bin_by(std::span<const SampleRecord> records, const Selection& pool, const BinEdges& edges,
                            double PosePrior::*field) {
  BinnedIndices out;
  for (auto i : pool)
    if (auto b = edges.locate(records[i].prior.*field)) out[*b].push_back(i);
  return out;
}

// Splits `quota` evenly over the bins of `groups` (respecting each bin's size).
inline std::vector<std::pair<Selection, std::size_t>> balance(const BinnedIndices& groups, std::size_t quota,
                                                              std::mt19937_64& rng) {
  std::vector<std::size_t> caps;
  for (const auto& [bin, members] : groups) caps.push_back(members.size());
  const auto quotas = round_robin_quotas(quota, caps, true, rng);
  std::vector<std::pair<Selection, std::size_t>> out;
  std::size_t k = 0;
  for (const auto& [bin, members] : groups) out.emplace_back(members, quotas[k++]);
  return out;
}

}  // namespace detail

// Uniform random subset of size n, returned in input order.
inline Selection sample_natural(std::span<const SampleRecord> records, std::size_t n, std::mt19937_64& rng) {
  require(n >= 1, "sample_natural: n must be >= 1");
  require(n <= records.size(), "sample_natural: requested " + std::to_string(n) + " records but only " +
                                   std::to_string(records.size()) + " available");
  Selection all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return detail::choose_without_replacement(std::move(all), n, rng);
}

// Approximately equal counts per pitch bin, then per roll bin inside each pitch bin, then
// per height bin. Sparse bins give up their shortfall to the others round-robin. Records
// outside any bin range are not eligible.
inline Selection sample_uniform(std::span<const SampleRecord> records, std::size_t n, const SamplingSpec& spec,
                                std::mt19937_64& rng) {
  spec.validate();
  Selection all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  Selection eligible;
  for (auto i : all) {
    const auto& p = records[i].prior;
    if (spec.pitch_bins.locate(p.pitch) && spec.roll_bins.locate(p.roll) && spec.height_bins.locate(p.height))
      eligible.push_back(i);
  }
  const auto by_pitch = detail::bin_by(records, eligible, spec.pitch_bins, &PosePrior::pitch);
  require(!by_pitch.empty(), "sample_uniform: every pose bin is empty");
  require(n >= by_pitch.size(), "sample_uniform: n=" + std::to_string(n) + " is smaller than the " +
                                    std::to_string(by_pitch.size()) + " non-empty pitch bins");
  require(n <= eligible.size(), "sample_uniform: requested " + std::to_string(n) + " records but only " +
                                    std::to_string(eligible.size()) + " fall inside the bins");

  Selection out;
  for (const auto& [pitch_members, pitch_quota] : detail::balance(by_pitch, n, rng)) {
    const auto by_roll = detail::bin_by(records, pitch_members, spec.roll_bins, &PosePrior::roll);
    for (const auto& [roll_members, roll_quota] : detail::balance(by_roll, pitch_quota, rng)) {
      const auto by_height = detail::bin_by(records, roll_members, spec.height_bins, &PosePrior::height);
      for (const auto& [members, quota] : detail::balance(by_height, roll_quota, rng)) {
        const auto chosen = detail::choose_without_replacement(members, quota, rng);
        out.insert(out.end(), chosen.begin(), chosen.end());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Selection sample_restricted(std::span<const SampleRecord> records, std::size_t n,
                                   const RestrictedRanges& ranges, std::mt19937_64& rng) {
  require(n >= 1, "sample_restricted: n must be >= 1");
  Selection eligible;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (ranges.accepts(records[i].prior)) eligible.push_back(i);
  require(eligible.size() >= n, "sample_restricted: only " + std::to_string(eligible.size()) +
                                    " records fall inside the restricted ranges, " + std::to_string(n) +
                                    " requested (short by " + std::to_string(n - eligible.size()) + ")");
  return detail::choose_without_replacement(std::move(eligible), n, rng);
}

// Draws with replacement so every non-empty pitch bin contributes an equal share
// (differing by at most one) of the n output rows.
inline Selection resample_flat(std::span<const SampleRecord> records, std::size_t n, const BinEdges& pitch_bins,
                               std::mt19937_64& rng) {
  require(!records.empty(), "resample_flat: empty input");
  require(n >= 1, "resample_flat: n must be >= 1");
  pitch_bins.validate();
  Selection all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto by_pitch = detail::bin_by(records, all, pitch_bins, &PosePrior::pitch);
  require(!by_pitch.empty(), "resample_flat: no record falls inside the pitch bins");

  std::vector<std::size_t> caps(by_pitch.size(), 1);
  const auto quotas = detail::round_robin_quotas(n, caps, false, rng);
  Selection out;
  std::size_t k = 0;
  for (const auto& [bin, members] : by_pitch) {
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t j = 0; j < quotas[k]; ++j) out.push_back(members[pick(rng)]);
    ++k;
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline Selection sample(std::span<const SampleRecord> records, const SamplingSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  switch (spec.strategy) {
    case Strategy::kNatural:
      return sample_natural(records, spec.count, rng);
    case Strategy::kUniform:
      return sample_uniform(records, spec.count, spec, rng);
    case Strategy::kRestricted:
      return sample_restricted(records, spec.count, spec.restricted, rng);
    case Strategy::kResample:
      return resample_flat(records, spec.count, spec.pitch_bins, rng);
  }
  throw Error("sampling: unknown strategy");
}

}  // namespace posebias
