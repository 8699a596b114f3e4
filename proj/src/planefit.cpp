#include "gfm/planefit.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gfm/gamma_map.hpp"
#include "gfm/parallel.hpp"
#include "gfm/random.hpp"

namespace gfm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

struct Hypothesis {
  Vec3 normal;
  double offset = 0.0;
  bool ok = false;
};

Hypothesis plane_through(const PlanePoints& pts, std::size_t a, std::size_t b, std::size_t c) {
  const Vec3 p1(pts.x[a], pts.y[a], pts.z[a]);
  const Vec3 p2(pts.x[b], pts.y[b], pts.z[b]);
  const Vec3 p3(pts.x[c], pts.y[c], pts.z[c]);
  const Vec3 e1 = p2 - p1;
  const Vec3 e2 = p3 - p1;
  const Vec3 n = e1.cross(e2);
  const double scale = e1.norm() * e2.norm();
  Hypothesis h;
  if (!(n.norm() > 1e-9 * scale) || !(scale > 0.0)) return h;
  h.normal = n.normalized();
  h.offset = -h.normal.dot(p1);
  h.ok = true;
  return h;
}

Hypothesis least_squares_plane(const PlanePoints& pts, const Vec3& normal, double offset,
                               double threshold) {
  Vec3 centroid = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = normal.x() * pts.x[i] + normal.y() * pts.y[i] + normal.z() * pts.z[i] + offset;
    if (std::abs(r) < threshold) {
      centroid += Vec3(pts.x[i], pts.y[i], pts.z[i]);
      ++n;
    }
  }
  Hypothesis h;
  if (n < 3) return h;
  centroid /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = normal.x() * pts.x[i] + normal.y() * pts.y[i] + normal.z() * pts.z[i] + offset;
    if (std::abs(r) < threshold) {
      const Vec3 d = Vec3(pts.x[i], pts.y[i], pts.z[i]) - centroid;
      cov += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.info() != Eigen::Success) return h;
  // Eigenvalues are sorted ascending; the first eigenvector is the normal.
  h.normal = eig.eigenvectors().col(0).normalized();
  if (h.normal.dot(normal) < 0.0) h.normal = -h.normal;
  h.offset = -h.normal.dot(centroid);
  h.ok = h.normal.allFinite() && std::isfinite(h.offset);
  return h;
}

}  // namespace

bool Trapezoid::contains(int x, int y, int width, int height) const {
  const double xn = (x + 0.5) / width;
  const double yn = (y + 0.5) / height;
  if (yn < top_y) return false;
  const double t = top_y >= 1.0 ? 1.0 : (yn - top_y) / (1.0 - top_y);
  const double half = 0.5 * (top_width + (bottom_width - top_width) * t);
  return std::abs(xn - center_x) <= half;
}

void Trapezoid::validate() const {
  if (!(top_y >= 0.0 && top_y < 1.0) || !(top_width >= 0.0) || !(bottom_width > 0.0)) {
    fail(ErrorKind::InvalidParameter, "trapezoid ROI is malformed");
  }
}

void RansacConfig::validate() const {
  if (iterations < 1) fail(ErrorKind::InvalidParameter, "RANSAC needs at least one iteration");
  if (!(inlier_threshold > 0.0)) fail(ErrorKind::InvalidParameter, "inlier threshold must be positive");
  if (!(max_range > 0.0)) fail(ErrorKind::InvalidParameter, "max range must be positive");
  roi.validate();
}

PlaneModel FittedPlane::to_plane_model() const {
  if (!(offset > 0.0)) {
    fail(ErrorKind::DegenerateGeometry, "fitted plane passes above or through the camera");
  }
  return PlaneModel(normal, offset);
}

void RoadMaskConfig::validate() const {
  if (!(theta_tol_deg > 0.0 && theta_tol_deg < 90.0)) {
    fail(ErrorKind::InvalidParameter, "theta_tol must lie in (0, 90) degrees");
  }
  if (!(sigma_w > 0.0) || !(sigma_h > 0.0)) {
    fail(ErrorKind::InvalidParameter, "gaussian sigmas must be positive");
  }
  if (normal_offset < 1) fail(ErrorKind::InvalidParameter, "normal offset must be >= 1");
  roi.validate();
}

NormalField local_normals(const ScalarField& depth, const CameraIntrinsics& K, int delta) {
  if (delta < 1) fail(ErrorKind::InvalidParameter, "normal offset must be >= 1");
  if (depth.width() != K.width || depth.height() != K.height) {
    fail(ErrorKind::ShapeError, "depth size does not match the camera");
  }
  if (depth.valid_count() == 0) fail(ErrorKind::EmptyInput, "depth has no valid pixels");
  const int w = depth.width();
  const int h = depth.height();
  NormalField out(w, h);
  auto point = [&](int x, int y) -> Vec3 { return static_cast<double>(depth.at(x, y)) * K.ray(x, y); };
  parallel::for_each_row(h, [&](int y) {
    const int y0 = reflect(y - delta, h);
    const int y1 = reflect(y + delta, h);
    for (int x = 0; x < w; ++x) {
      const int x0 = reflect(x - delta, w);
      const int x1 = reflect(x + delta, w);
      if (!depth.valid(x, y) || !depth.valid(x0, y) || !depth.valid(x1, y) ||
          !depth.valid(x, y0) || !depth.valid(x, y1)) {
        continue;
      }
      const Vec3 dx = point(x1, y) - point(x0, y);
      const Vec3 dy = point(x, y1) - point(x, y0);
      Vec3 n = dx.cross(dy);
      const double len = n.norm();
      if (!(len >= 1e-12)) continue;
      n /= len;
      if (n.dot(point(x, y)) > 0.0) n = -n;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.normals[i] = n;
      out.valid[i] = 1;
    }
  });
  return out;
}

PlanePoints ransac_candidates(const ScalarField& depth, const CameraIntrinsics& K,
                              const RansacConfig& cfg) {
  if (depth.width() != K.width || depth.height() != K.height) {
    fail(ErrorKind::ShapeError, "depth size does not match the camera");
  }
  PlanePoints pts;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double d = depth.at(x, y);
      if (!(d > 0.0) || d > cfg.max_range) continue;
      if (!cfg.roi.contains(x, y, depth.width(), depth.height())) continue;
      const Vec3 p = d * K.ray(x, y);
      pts.x.push_back(p.x());
      pts.y.push_back(p.y());
      pts.z.push_back(p.z());
    }
  }
  return pts;
}

std::size_t count_inliers(const PlanePoints& pts, const Vec3& normal, double offset,
                          double threshold) {
  const double nx = normal.x(), ny = normal.y(), nz = normal.z();
  const double* px = pts.x.data();
  const double* py = pts.y.data();
  const double* pz = pts.z.data();
  const std::size_t n = pts.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = nx * px[i] + ny * py[i] + nz * pz[i] + offset;
    count += std::abs(r) < threshold ? 1 : 0;
  }
  return count;
}

FittedPlane ransac_plane(const ScalarField& depth, const CameraIntrinsics& K,
                         const RansacConfig& cfg, const Vec3& n_ref) {
  cfg.validate();
  return ransac_plane(ransac_candidates(depth, K, cfg), cfg, n_ref);
}

FittedPlane ransac_plane(const PlanePoints& pts, const RansacConfig& cfg, const Vec3& n_ref) {
  cfg.validate();
  const std::size_t n = pts.size();
  if (n < 3) {
    fail(ErrorKind::InsufficientPoints,
         "RANSAC needs at least 3 candidate points, got " + std::to_string(n));
  }

  // Samples are drawn serially so the hypothesis set depends only on the seed.
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::array<std::size_t, 3>> samples(static_cast<std::size_t>(cfg.iterations));
  for (auto& s : samples) {
    s[0] = uniform_index(rng, n);
    do { s[1] = uniform_index(rng, n); } while (s[1] == s[0]);
    do { s[2] = uniform_index(rng, n); } while (s[2] == s[0] || s[2] == s[1]);
  }

  std::vector<Hypothesis> hyps(samples.size());
  std::vector<std::size_t> counts(samples.size(), 0);
  parallel::for_each_index(cfg.iterations, [&](int i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    hyps[i] = plane_through(pts, s[0], s[1], s[2]);
    if (hyps[i].ok) counts[i] = count_inliers(pts, hyps[i].normal, hyps[i].offset, cfg.inlier_threshold);
  });

  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (!hyps[i].ok) continue;
    if (best < 0 || counts[i] > counts[static_cast<std::size_t>(best)]) {
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) {
    fail(ErrorKind::DegenerateGeometry, "every sampled point triple was collinear");
  }

  Hypothesis winner = hyps[static_cast<std::size_t>(best)];
  std::size_t winner_count = counts[static_cast<std::size_t>(best)];
  if (cfg.refine) {
    const Hypothesis refit = least_squares_plane(pts, winner.normal, winner.offset, cfg.inlier_threshold);
    if (refit.ok) {
      const std::size_t refit_count = count_inliers(pts, refit.normal, refit.offset, cfg.inlier_threshold);
      if (refit_count >= winner_count) {
        winner = refit;
        winner_count = refit_count;
      }
    }
  }

  FittedPlane fit;
  fit.normal = winner.normal;
  fit.offset = winner.offset;
  if (fit.normal.dot(n_ref) < 0.0) {
    fit.normal = -fit.normal;
    fit.offset = -fit.offset;
  }
  fit.inlier_count = winner_count;
  fit.inlier_ratio = static_cast<double>(winner_count) / static_cast<double>(n);
  return fit;
}

std::pair<ScalarField, FittedPlane> gamma_from_depth_ransac(const ScalarField& depth,
                                                            const CameraIntrinsics& K,
                                                            const RansacConfig& cfg,
                                                            const Vec3& n_ref) {
  FittedPlane fit = ransac_plane(depth, K, cfg, n_ref);
  ScalarField gamma = gamma_from_depth_plane(depth, fit.to_plane_model(), K);
  return {std::move(gamma), fit};
}

ScalarField angular_deviation(const NormalField& normals, const Vec3& n_pred) {
  const Vec3 ref = normalized(n_pred);
  ScalarField theta(normals.width, normals.height, FieldRole::Generic);
  parallel::for_each_row(normals.height, [&](int y) {
    for (int x = 0; x < normals.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * normals.width + x;
      if (!normals.valid[i]) continue;
      const Vec3& n = normals.normals[i];
      const double c = std::clamp(n.dot(ref) / n.norm(), -1.0, 1.0);
      theta.set(i, static_cast<float>(std::acos(c)));
    }
  });
  return theta;
}

ScalarField road_probability(const ScalarField& theta, const RoadMaskConfig& cfg) {
  cfg.validate();
  const double cos_tol = std::cos(cfg.theta_tol_deg * kDegToRad);
  ScalarField p(theta.width(), theta.height(), FieldRole::Mask);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!theta.valid(i)) continue;
    const double ramp = std::cos(static_cast<double>(theta[i])) / cos_tol;
    p.set(i, static_cast<float>(std::clamp(ramp, 0.0, 1.0)));
  }
  return p;
}

ScalarField gaussian_prior(int width, int height, const RoadMaskConfig& cfg) {
  cfg.validate();
  if (width <= 0 || height <= 0) fail(ErrorKind::ShapeError, "prior size must be positive");
  const double cx = cfg.center_x * width;
  const double cy = cfg.center_y * height;
  const double sw = cfg.sigma_w * width;
  const double sh = cfg.sigma_h * height;
  std::vector<double> g(static_cast<std::size_t>(width) * height);
  double peak = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double du = x - cx;
      const double dv = y - cy;
      const double v = std::exp(-du * du / (2.0 * sw * sw) - dv * dv / (2.0 * sh * sh));
      g[static_cast<std::size_t>(y) * width + x] = v;
      peak = std::max(peak, v);
    }
  }
  ScalarField out(width, height, FieldRole::Mask);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.set(i, peak > 0.0 ? static_cast<float>(g[i] / peak) : 0.0f);
  }
  return out;
}

ScalarField road_mask(const ScalarField& depth, const CameraIntrinsics& K, const Vec3& n_pred,
                      const RoadMaskConfig& cfg) {
  cfg.validate();
  const int w = depth.width();
  const int h = depth.height();
  ScalarField mask = ScalarField::filled(w, h, FieldRole::Mask, 0.0f);
  if (depth.valid_count() == 0) return mask;

  const ScalarField p_angle = road_probability(
      angular_deviation(local_normals(depth, K, cfg.normal_offset), n_pred), cfg);
  const ScalarField prior = gaussian_prior(w, h, cfg);
  std::vector<float> roi_values;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!p_angle.valid(x, y) || !cfg.roi.contains(x, y, w, h)) continue;
      const float m = p_angle.at(x, y) * prior.at(x, y);
      mask.set(x, y, m);
      if (m > 0.0f) roi_values.push_back(m);
    }
  }
  if (cfg.binarize && !roi_values.empty()) {
    const auto mid = roi_values.begin() + static_cast<std::ptrdiff_t>(roi_values.size() / 2);
    std::nth_element(roi_values.begin(), mid, roi_values.end());
    const float threshold = *mid;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      mask.set(i, mask[i] >= threshold && mask[i] > 0.0f ? 1.0f : 0.0f);
    }
  }
  return mask;
}

}  // namespace gfm
