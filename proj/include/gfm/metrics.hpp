#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gfm/core.hpp"

namespace gfm {

struct EvalConfig {
  double depth_cap = 80.0;               // meters
  std::optional<double> near_cap;        // meters, e.g. 20/40/60
  bool median_scale = false;
  double gamma_abs_tol = 0.01;
  double log_offset = 1.0;               // gamma rmse_log uses log(gamma + offset)
  double min_depth = 1e-3;               // prediction clip floor

  void validate() const;
};

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t count = 0;
  double scale_ratio = 1.0;  // median-scaling ratio applied, 1 when off

  bool operator==(const DepthMetrics&) const = default;
};

struct GammaMetrics {
  double abs_diff = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t count = 0;
  double log_offset = 1.0;

  bool operator==(const GammaMetrics&) const = default;
};

// Pixels enter when gt is valid, 0 < gt <= cap (and <= near_cap when set)
// and pred is valid. Predictions are clipped to [min_depth, cap].
DepthMetrics depth_metrics(const ScalarField& pred, const ScalarField& gt, const EvalConfig& cfg);

// A pixel counts as correct for delta_i when |pred - gt| < gamma_abs_tol, or
// when both are positive and max(pred/gt, gt/pred) < 1.25^i. When gt_depth
// is given, the depth cap masks pixels exactly as for depth evaluation.
GammaMetrics gamma_metrics(const ScalarField& pred, const ScalarField& gt, const EvalConfig& cfg,
                           const ScalarField* gt_depth = nullptr);

// pred * median(gt) / median(pred) over pixels valid in both.
std::pair<ScalarField, double> median_scale(const ScalarField& pred, const ScalarField& gt);

struct CappedMetrics {
  double cap = 0.0;
  std::optional<DepthMetrics> metrics;  // empty when no pixel survives the cap
};

std::vector<CappedMetrics> range_capped_eval(const ScalarField& pred, const ScalarField& gt,
                                             const std::vector<double>& caps,
                                             const EvalConfig& cfg = {});

}  // namespace gfm
