#include "gfm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gfm {

namespace {

constexpr double kThresholds[3] = {1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};

bool inside_caps(double gt, const EvalConfig& cfg) {
  if (!(gt > 0.0) || gt > cfg.depth_cap) return false;
  return !cfg.near_cap || gt <= *cfg.near_cap;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

void EvalConfig::validate() const {
  if (!(depth_cap > 0.0)) fail(ErrorKind::InvalidParameter, "depth cap must be positive");
  if (near_cap && !(*near_cap > 0.0)) fail(ErrorKind::InvalidParameter, "near cap must be positive");
  if (!(gamma_abs_tol > 0.0)) fail(ErrorKind::InvalidParameter, "gamma tolerance must be positive");
  if (!(min_depth > 0.0)) fail(ErrorKind::InvalidParameter, "minimum depth must be positive");
}

DepthMetrics depth_metrics(const ScalarField& pred, const ScalarField& gt, const EvalConfig& cfg) {
  cfg.validate();
  if (!pred.same_shape(gt)) fail(ErrorKind::ShapeError, "prediction and ground truth sizes differ");

  ScalarField masked(gt.width(), gt.height(), FieldRole::Depth);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid(i) && pred.valid(i) && inside_caps(gt[i], cfg)) masked.set(i, pred[i]);
  }
  if (masked.valid_count() == 0) {
    fail(ErrorKind::EmptyEvaluation, "no valid pixels survive the depth caps");
  }
  double ratio = 1.0;
  if (cfg.median_scale) {
    auto scaled = median_scale(masked, gt);
    masked = std::move(scaled.first);
    ratio = scaled.second;
  }

  const double cap = cfg.near_cap ? std::min(cfg.depth_cap, *cfg.near_cap) : cfg.depth_cap;
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  double hits[3] = {0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!masked.valid(i)) continue;
    const double g = gt[i];
    const double p = std::clamp(static_cast<double>(masked[i]), cfg.min_depth, std::max(cap, cfg.min_depth));
    const double diff = p - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double dl = std::log(p) - std::log(g);
    sq_log += dl * dl;
    const double r = std::max(p / g, g / p);
    for (int k = 0; k < 3; ++k) hits[k] += r < kThresholds[k] ? 1.0 : 0.0;
    ++n;
  }
  const double inv = 1.0 / static_cast<double>(n);
  DepthMetrics m;
  m.abs_rel = abs_rel * inv;
  m.sq_rel = sq_rel * inv;
  m.rmse = std::sqrt(sq * inv);
  m.rmse_log = std::sqrt(sq_log * inv);
  m.delta1 = hits[0] * inv;
  m.delta2 = hits[1] * inv;
  m.delta3 = hits[2] * inv;
  m.count = n;
  m.scale_ratio = ratio;
  return m;
}

GammaMetrics gamma_metrics(const ScalarField& pred, const ScalarField& gt, const EvalConfig& cfg,
                           const ScalarField* gt_depth) {
  cfg.validate();
  if (!pred.same_shape(gt)) fail(ErrorKind::ShapeError, "prediction and ground truth sizes differ");
  if (gt_depth && !gt_depth->same_shape(gt)) fail(ErrorKind::ShapeError, "depth mask size differs");

  double abs_sum = 0.0, sq = 0.0, sq_log = 0.0;
  double hits[3] = {0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i) || !pred.valid(i)) continue;
    if (gt_depth && (!gt_depth->valid(i) || !inside_caps((*gt_depth)[i], cfg))) continue;
    const double p = pred[i];
    const double g = gt[i];
    const double diff = p - g;
    abs_sum += std::abs(diff);
    sq += diff * diff;
    const double dl = std::log(std::max(p + cfg.log_offset, 1e-6)) -
                      std::log(std::max(g + cfg.log_offset, 1e-6));
    sq_log += dl * dl;
    const bool close = std::abs(diff) < cfg.gamma_abs_tol;
    const bool ratio_ok = p > 0.0 && g > 0.0;
    const double r = ratio_ok ? std::max(p / g, g / p) : 0.0;
    for (int k = 0; k < 3; ++k) hits[k] += close || (ratio_ok && r < kThresholds[k]) ? 1.0 : 0.0;
    ++n;
  }
  if (n == 0) fail(ErrorKind::EmptyEvaluation, "no valid gamma pixels to evaluate");
  const double inv = 1.0 / static_cast<double>(n);
  GammaMetrics m;
  m.abs_diff = abs_sum * inv;
  m.rmse = std::sqrt(sq * inv);
  m.rmse_log = std::sqrt(sq_log * inv);
  m.delta1 = hits[0] * inv;
  m.delta2 = hits[1] * inv;
  m.delta3 = hits[2] * inv;
  m.count = n;
  m.log_offset = cfg.log_offset;
  return m;
}

std::pair<ScalarField, double> median_scale(const ScalarField& pred, const ScalarField& gt) {
  if (!pred.same_shape(gt)) fail(ErrorKind::ShapeError, "prediction and ground truth sizes differ");
  std::vector<double> p, g;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid(i) && pred.valid(i)) {
      p.push_back(pred[i]);
      g.push_back(gt[i]);
    }
  }
  if (p.empty()) fail(ErrorKind::EmptyEvaluation, "median scaling needs at least one valid pixel");
  const double mp = median_of(std::move(p));
  if (!(mp > 0.0)) fail(ErrorKind::DegenerateScale, "median prediction is not positive");
  const double ratio = median_of(std::move(g)) / mp;
  ScalarField scaled(pred.width(), pred.height(), pred.role());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.valid(i)) scaled.set(i, static_cast<float>(pred[i] * ratio));
  }
  return {std::move(scaled), ratio};
}

std::vector<CappedMetrics> range_capped_eval(const ScalarField& pred, const ScalarField& gt,
                                             const std::vector<double>& caps,
                                             const EvalConfig& cfg) {
  if (caps.empty()) fail(ErrorKind::InvalidParameter, "no evaluation caps given");
  if (!std::is_sorted(caps.begin(), caps.end())) {
    fail(ErrorKind::InvalidParameter, "evaluation caps must be sorted ascending");
  }
  std::vector<CappedMetrics> rows;
  for (double cap : caps) {
    EvalConfig row_cfg = cfg;
    row_cfg.depth_cap = cap;
    row_cfg.near_cap.reset();
    CappedMetrics row{cap, std::nullopt};
    try {
      row.metrics = depth_metrics(pred, gt, row_cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyEvaluation) throw;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gfm
