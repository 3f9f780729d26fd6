#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "posebias/raster.hpp"
#include "posebias/sampling.hpp"

namespace posebias {

struct EvalConfig {
  double min_depth = 1.0;  // E_min, meters
  double max_depth = 10.0;  // E_max, meters
  double delta_base = 1.25;

  void validate() const {
    require(min_depth > 0.0 && min_depth < max_depth, "eval: need 0 < E_min < E_max");
    require(delta_base > 1.0, "eval: delta base must exceed 1");
  }
};

// Affine map of [E_min, E_max] onto [-1, 1]; values outside pass through the same map.
inline double normalize_depth(double y, const EvalConfig& cfg = {}) {
  return ((y - cfg.min_depth) / (cfg.max_depth - cfg.min_depth) - 0.5) * 2.0;
}

inline double denormalize_depth(double y, const EvalConfig& cfg = {}) {
  return (y / 2.0 + 0.5) * (cfg.max_depth - cfg.min_depth) + cfg.min_depth;
}

struct MetricsReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rms_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::size_t n_pixels = 0;
};

// Running sums over eligible pixels; merging two accumulators pools their pixels.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(EvalConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  // Returns the number of eligible pixels contributed by this pair.
  std::size_t add(const DepthMap& pred, const DepthMap& gt) {
    require(pred.height() == gt.height() && pred.width() == gt.width(),
            "metrics: prediction and ground truth sizes differ");
    const double t1 = cfg_.delta_base;
    const double t2 = cfg_.delta_base * cfg_.delta_base;
    std::size_t added = 0;
    for (int r = 0; r < gt.height(); ++r) {
      for (int c = 0; c < gt.width(); ++c) {
        if (!gt.is_valid(r, c) || !pred.is_valid(r, c)) continue;
        const double g = gt.depth(r, c);
        if (g < cfg_.min_depth || g > cfg_.max_depth) continue;
        const double p = pred.depth(r, c);
        require(p > 0.0 && std::isfinite(p), "metrics: prediction must be positive and finite on evaluated pixels");
        const double diff = p - g;
        abs_rel_ += std::abs(diff) / g;
        sq_rel_ += diff * diff / g;
        const double log_diff = std::log(p) - std::log(g);
        sq_log_ += log_diff * log_diff;
        const double ratio = std::max(p / g, g / p);
        within1_ += ratio < t1;
        within2_ += ratio < t2;
        ++added;
      }
    }
    n_ += added;
    return added;
  }

  void merge(const MetricsAccumulator& other) {
    abs_rel_ += other.abs_rel_;
    sq_rel_ += other.sq_rel_;
    sq_log_ += other.sq_log_;
    within1_ += other.within1_;
    within2_ += other.within2_;
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }

  MetricsReport report() const {
    require(n_ > 0, "metrics: no pixel has ground truth inside the evaluation range");
    const auto n = static_cast<double>(n_);
    return {abs_rel_ / n, sq_rel_ / n, std::sqrt(sq_log_ / n), within1_ / n, within2_ / n, n_};
  }

 private:
  EvalConfig cfg_;
  double abs_rel_ = 0.0;
  double sq_rel_ = 0.0;
  double sq_log_ = 0.0;
  double within1_ = 0.0;
  double within2_ = 0.0;
  std::size_t n_ = 0;
};

inline MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const EvalConfig& cfg = {}) {
  MetricsAccumulator acc(cfg);
  acc.add(pred, gt);
  return acc.report();
}

enum class BinKey { kPitch, kRoll, kHeight };

// kPooled weights every eligible pixel equally; kPerImage averages per-image metrics.
enum class Aggregation { kPooled, kPerImage };

inline double prior_value(const PosePrior& p, BinKey key) {
  switch (key) {
    case BinKey::kPitch:
      return p.pitch;
    case BinKey::kRoll:
      return p.roll;
    case BinKey::kHeight:
      return p.height;
  }
  return 0.0;
}

struct BinReport {
  int bin = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;  // images
  std::optional<MetricsReport> metrics;
};

class Breakdown {
 public:
  Breakdown(BinEdges edges, BinKey key, EvalConfig cfg = {}, Aggregation aggregation = Aggregation::kPooled)
      : edges_(std::move(edges)), key_(key), cfg_(cfg), aggregation_(aggregation) {
    edges_.validate();
    bins_.resize(edges_.count(), Bin{MetricsAccumulator(cfg_), {}, 0});
  }

  void add(const PosePrior& prior, const DepthMap& pred, const DepthMap& gt) {
    MetricsAccumulator one(cfg_);
    one.add(pred, gt);
    add(prior, one);
  }

  // Adds one image's already-accumulated pixels.
  void add(const PosePrior& prior, const MetricsAccumulator& image) {
    const auto b = edges_.locate(prior_value(prior, key_));
    if (!b) return;
    Bin& bin = bins_[*b];
    ++bin.images;
    if (aggregation_ == Aggregation::kPooled) {
      bin.pooled.merge(image);
    } else if (image.count() > 0) {
      bin.per_image.push_back(image.report());
    }
  }

  std::vector<BinReport> result() const {
    std::vector<BinReport> out;
    for (int b = 0; b < edges_.count(); ++b) {
      const Bin& bin = bins_[b];
      BinReport rep{b, edges_.edges[b], edges_.edges[b + 1], bin.images, std::nullopt};
      if (aggregation_ == Aggregation::kPooled) {
        if (bin.pooled.count() > 0) rep.metrics = bin.pooled.report();
      } else if (!bin.per_image.empty()) {
        MetricsReport mean;
        for (const auto& r : bin.per_image) {
          mean.abs_rel += r.abs_rel;
          mean.sq_rel += r.sq_rel;
          mean.rms_log += r.rms_log;
          mean.delta1 += r.delta1;
          mean.delta2 += r.delta2;
          mean.n_pixels += r.n_pixels;
        }
        const auto k = static_cast<double>(bin.per_image.size());
        mean.abs_rel /= k;
        mean.sq_rel /= k;
        mean.rms_log /= k;
        mean.delta1 /= k;
        mean.delta2 /= k;
        rep.metrics = mean;
      }
      out.push_back(rep);
    }
    return out;
  }

 private:
  struct Bin {
    MetricsAccumulator pooled;
    std::vector<MetricsReport> per_image;
    std::size_t images = 0;
  };

  BinEdges edges_;
  BinKey key_;
  EvalConfig cfg_;
  Aggregation aggregation_;
  std::vector<Bin> bins_;
};

inline std::vector<BinReport> breakdown(std::span<const SampleRecord> records, std::span<const DepthMap> preds,
                                        std::span<const DepthMap> gts, BinKey key, const BinEdges& edges,
                                        const EvalConfig& cfg = {}, Aggregation aggregation = Aggregation::kPooled) {
  require(records.size() == preds.size() && preds.size() == gts.size(),
          "breakdown: records, predictions and ground truths must have equal length");
  Breakdown acc(edges, key, cfg, aggregation);
  for (std::size_t i = 0; i < records.size(); ++i) acc.add(records[i].prior, preds[i], gts[i]);
  return acc.result();
}

// Per-pixel mean over the inputs that are valid there.
class DepthAverager {
 public:
  void add(const DepthMap& d) {
    if (sum_.empty()) {
      sum_ = Raster<double>(d.height(), d.width(), 1, 0.0);
      count_ = Raster<double>(d.height(), d.width(), 1, 0.0);
    }
    require(d.height() == sum_.height() && d.width() == sum_.width(), "average depth: input sizes differ");
    for (int r = 0; r < d.height(); ++r) {
      for (int c = 0; c < d.width(); ++c) {
        if (!d.is_valid(r, c)) continue;
        sum_(r, c) += d.depth(r, c);
        count_(r, c) += 1.0;
      }
    }
  }

  DepthMap result() const {
    require(!sum_.empty(), "average depth: no input maps");
    DepthMap out(sum_.height(), sum_.width());
    for (int r = 0; r < out.height(); ++r)
      for (int c = 0; c < out.width(); ++c)
        if (count_(r, c) > 0.0) out.set(r, c, sum_(r, c) / count_(r, c));
    return out;
  }

 private:
  Raster<double> sum_;
  Raster<double> count_;
};

inline DepthMap average_depth_baseline(std::span<const DepthMap> depths) {
  require(!depths.empty(), "average depth: no input maps");
  DepthAverager avg;
  for (const auto& d : depths) avg.add(d);
  return avg.result();
}

}  // namespace posebias
