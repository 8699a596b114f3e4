#include "gfm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gfm/gamma_map.hpp"
#include "gfm/parallel.hpp"
#include "gfm/warp.hpp"

namespace gfm {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

void require_same(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeError, "image sizes differ");
}

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorKind::InvalidParameter, "SSIM/L1 balance must lie in [0, 1]");
  }
}

}  // namespace

void LossWeights::validate() const {
  require_alpha(alpha_ssim);
  if (!(lambda_norm >= 0.0) || !(lambda_smooth >= 0.0)) {
    fail(ErrorKind::InvalidParameter, "loss weights must be non-negative");
  }
  if (!(theta_thres_deg >= 0.0 && theta_thres_deg <= 180.0)) {
    fail(ErrorKind::InvalidParameter, "theta_thres must lie in [0, 180] degrees");
  }
}

ScalarField ssim(const RgbImage& a, const RgbImage& b) {
  require_same(a, b);
  const int w = a.width();
  const int h = a.height();
  ScalarField out(w, h, FieldRole::Generic);
  parallel::for_each_row(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int dy = -1; dy <= 1 && ok; ++dy) {
        for (int dx = -1; dx <= 1 && ok; ++dx) {
          const int xx = reflect(x + dx, w);
          const int yy = reflect(y + dy, h);
          ok = a.valid(xx, yy) && b.valid(xx, yy);
        }
      }
      if (!ok) continue;
      double total = 0.0;
      for (int c = 0; c < 3; ++c) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = reflect(x + dx, w);
            const int yy = reflect(y + dy, h);
            const double va = a.at(xx, yy, c);
            const double vb = b.at(xx, yy, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double mu_a = sa / 9.0;
        const double mu_b = sb / 9.0;
        const double var_a = saa / 9.0 - mu_a * mu_a;
        const double var_b = sbb / 9.0 - mu_b * mu_b;
        const double cov = sab / 9.0 - mu_a * mu_b;
        const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
        const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        total += num / den;
      }
      out.set(x, y, static_cast<float>(std::clamp(total / 3.0, -1.0, 1.0)));
    }
  });
  return out;
}

ScalarField photometric_error(const RgbImage& pred, const RgbImage& target, double alpha) {
  require_same(pred, target);
  require_alpha(alpha);
  const ScalarField s = ssim(pred, target);
  ScalarField pe(pred.width(), pred.height(), FieldRole::Generic);
  parallel::for_each_row(pred.height(), [&](int y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (!s.valid(x, y)) continue;
      double l1 = 0.0;
      for (int c = 0; c < 3; ++c) {
        l1 += std::abs(static_cast<double>(pred.at(x, y, c)) - target.at(x, y, c));
      }
      l1 /= 3.0;
      const double value = alpha * (1.0 - s.at(x, y)) / 2.0 + (1.0 - alpha) * l1;
      pe.set(x, y, static_cast<float>(value));
    }
  });
  return pe;
}

MinReprojection min_reprojection(const std::vector<ScalarField>& pe_maps,
                                 const std::vector<ScalarField>& identity_pe_maps) {
  if (pe_maps.empty()) fail(ErrorKind::EmptyInput, "min_reprojection needs at least one source");
  if (identity_pe_maps.size() != pe_maps.size()) {
    fail(ErrorKind::InvalidParameter, "identity and warped error maps differ in count");
  }
  const int w = pe_maps.front().width();
  const int h = pe_maps.front().height();
  for (const auto* list : {&pe_maps, &identity_pe_maps}) {
    for (const auto& m : *list) {
      if (m.width() != w || m.height() != h) fail(ErrorKind::ShapeError, "error maps differ in size");
    }
  }
  MinReprojection out{ScalarField(w, h, FieldRole::Generic), ScalarField(w, h, FieldRole::Mask)};
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    bool have = false;
    float best = 0.0f;
    for (const auto& m : pe_maps) {
      if (m.valid(i) && (!have || m[i] < best)) {
        best = m[i];
        have = true;
      }
    }
    if (!have) continue;
    bool have_id = false;
    float best_id = 0.0f;
    for (const auto& m : identity_pe_maps) {
      if (m.valid(i) && (!have_id || m[i] < best_id)) {
        best_id = m[i];
        have_id = true;
      }
    }
    out.min_error.set(i, best);
    out.automask.set(i, !have_id || best < best_id ? 1.0f : 0.0f);
  }
  return out;
}

double masked_mean(const ScalarField& values, const ScalarField* weights) {
  if (weights && !weights->same_shape(values)) fail(ErrorKind::ShapeError, "weight size differs");
  const int w = values.width();
  struct Acc {
    double sum = 0.0;
    double count = 0.0;
    Acc& operator+=(const Acc& o) {
      sum += o.sum;
      count += o.count;
      return *this;
    }
  };
  const Acc acc = parallel::reduce_rows(values.height(), Acc{}, [&](int y) {
    Acc row;
    for (int x = 0; x < w; ++x) {
      if (!values.valid(x, y)) continue;
      if (weights && !weights->valid(x, y)) continue;
      const double wt = weights ? weights->at(x, y) : 1.0;
      row.sum += wt * values.at(x, y);
      row.count += 1.0;
    }
    return row;
  });
  return acc.count > 0.0 ? acc.sum / acc.count : 0.0;
}

double homography_loss(const RgbImage& warped_source, const RgbImage& target,
                       const ScalarField& road_mask, double alpha) {
  require_same(warped_source, target);
  if (road_mask.width() != target.width() || road_mask.height() != target.height()) {
    fail(ErrorKind::ShapeError, "road mask size does not match the images");
  }
  const ScalarField pe = photometric_error(warped_source, target, alpha);
  return masked_mean(pe, &road_mask);
}

double normal_consistency(const Vec3& n_pred, const Vec3& n_ref, double theta_thres_deg) {
  if (std::abs(n_pred.norm() - 1.0) > 1e-6 || std::abs(n_ref.norm() - 1.0) > 1e-6) {
    fail(ErrorKind::InvalidParameter, "normal consistency expects unit normals");
  }
  const double c = std::clamp(n_pred.dot(n_ref) / (n_pred.norm() * n_ref.norm()), -1.0, 1.0);
  const double hinge = std::max(0.0, std::cos(theta_thres_deg * std::numbers::pi / 180.0) - c);
  return (1.0 - c) + hinge * hinge;
}

double smoothness(const ScalarField& field, const RgbImage& guide) {
  if (field.width() != guide.width() || field.height() != guide.height()) {
    fail(ErrorKind::ShapeError, "field and guide sizes differ");
  }
  const int w = field.width();
  const int h = field.height();
  double abs_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.valid(i)) continue;
    abs_sum += std::abs(static_cast<double>(field[i]));
    ++n;
  }
  if (n == 0) return 0.0;
  const double norm = abs_sum / static_cast<double>(n) + 1e-7;
  auto edge = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < 3; ++c) g += std::abs(static_cast<double>(guide.at(x1, y1, c)) - guide.at(x0, y0, c));
    return std::exp(-g / 3.0);
  };
  double sx = 0.0, sy = 0.0;
  std::size_t nx = 0, ny = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!field.valid(x, y)) continue;
      const double f = field.at(x, y) / norm;
      if (x + 1 < w && field.valid(x + 1, y)) {
        sx += std::abs(field.at(x + 1, y) / norm - f) * edge(x, y, x + 1, y);
        ++nx;
      }
      if (y + 1 < h && field.valid(x, y + 1)) {
        sy += std::abs(field.at(x, y + 1) / norm - f) * edge(x, y, x, y + 1);
        ++ny;
      }
    }
  }
  return (nx ? sx / static_cast<double>(nx) : 0.0) + (ny ? sy / static_cast<double>(ny) : 0.0);
}

LossReport total_loss(const LossComponents& c, const LossWeights& weights) {
  weights.validate();
  LossReport r;
  r.photo = c.photo;
  r.homo = c.homo;
  r.norm = c.norm;
  r.smooth = c.smooth;
  r.total = c.photo + c.homo + weights.lambda_norm * c.norm + weights.lambda_smooth * c.smooth;
  return r;
}

LossReport evaluate_loss(const LossInputs& in) {
  in.weights.validate();
  if (in.sources.empty()) fail(ErrorKind::EmptyInput, "loss needs at least one source image");
  if (in.poses.size() != in.sources.size()) {
    fail(ErrorKind::InvalidParameter, "one pose is needed per source image");
  }
  if (!in.visibility.empty() && in.visibility.size() != in.sources.size()) {
    fail(ErrorKind::InvalidParameter, "one visibility mask is needed per source image");
  }
  const CameraIntrinsics& K = in.camera;
  K.validate();
  const int w = K.width;
  const int h = K.height;
  if (in.target.width() != w || in.target.height() != h || in.gamma.width() != w || in.gamma.height() != h) {
    fail(ErrorKind::ShapeError, "target, gamma and camera sizes differ");
  }

  const ScalarField depth = depth_from_gamma(in.gamma, in.plane, K);
  const ScalarField mask = road_mask(depth, K, in.plane.normal(), in.road_mask);

  std::vector<ScalarField> pe, pe_identity;
  double homo_sum = 0.0;
  LossReport report;
  for (std::size_t s = 0; s < in.sources.size(); ++s) {
    const RgbImage& src = in.sources[s];
    if (!src.same_shape(in.target)) fail(ErrorKind::ShapeError, "source and target sizes differ");
    const RelativePose& pose = in.poses[s];
    const Homography H = plane_homography(pose, in.plane, K);
    RgbImage planar = homography_warp(src, H);
    const Epipole e = epipole(K, pose);
    const FlowField flow = residual_flow(in.gamma, e.t_z, source_camera_height(in.plane, pose), e);
    RgbImage synthesized = flow_warp(planar, flow);
    if (!in.visibility.empty()) {
      const ScalarField& vis = in.visibility[s];
      if (vis.width() != w || vis.height() != h) fail(ErrorKind::ShapeError, "visibility mask size differs");
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (vis.valid(x, y) && vis.at(x, y) > 0.0f) continue;
          synthesized.invalidate(x, y);
          planar.invalidate(x, y);
        }
      }
    }
    pe.push_back(photometric_error(synthesized, in.target, in.weights.alpha_ssim));
    pe_identity.push_back(photometric_error(src, in.target, in.weights.alpha_ssim));
    const ScalarField homo_map = photometric_error(planar, in.target, in.weights.alpha_ssim);
    homo_sum += masked_mean(homo_map, &mask);
    if (s == 0) report.homo_map = homo_map;
  }

  const MinReprojection mr = min_reprojection(pe, pe_identity);
  LossComponents c;
  if (in.automask) {
    c.photo = masked_mean(mr.min_error, &mr.automask);
  } else {
    c.photo = masked_mean(mr.min_error);
  }
  c.homo = homo_sum / static_cast<double>(in.sources.size());
  c.norm = normal_consistency(in.plane.normal(), normalized(in.n_ref), in.weights.theta_thres_deg);
  c.smooth = smoothness(in.gamma, in.target);

  LossReport out = total_loss(c, in.weights);
  out.photo_map = mr.min_error;
  out.homo_map = std::move(report.homo_map);
  out.automask = mr.automask;
  return out;
}

}  // namespace gfm
