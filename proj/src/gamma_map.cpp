#include "gfm/gamma_map.hpp"

#include <cmath>

#include "gfm/parallel.hpp"

namespace gfm {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    fail(ErrorKind::InvalidParameter, "alpha must be positive");
  }
}

void require_camera_shape(const ScalarField& f, const CameraIntrinsics& K) {
  if (f.width() != K.width || f.height() != K.height) {
    fail(ErrorKind::ShapeError, "field size does not match the camera");
  }
}

}  // namespace

void GammaRange::validate() const {
  require_alpha(alpha);
  if (!(gamma_min < gamma_max)) {
    fail(ErrorKind::InvalidParameter, "gamma range needs gamma_min < gamma_max");
  }
}

double gamma_to_logspace(double gamma, double alpha) {
  require_alpha(alpha);
  const double mag = std::log1p(alpha * std::abs(gamma));
  return gamma < 0.0 ? -mag : mag;
}

double logspace_to_gamma(double gtilde, double alpha) {
  require_alpha(alpha);
  const double mag = std::expm1(std::abs(gtilde)) / alpha;
  return gtilde < 0.0 ? -mag : mag;
}

double sigmoid_to_gamma(double sigma, const GammaRange& range) {
  range.validate();
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    fail(ErrorKind::InvalidParameter, "sigmoid output must lie in [0, 1]");
  }
  const double lo = gamma_to_logspace(range.gamma_min, range.alpha);
  const double hi = gamma_to_logspace(range.gamma_max, range.alpha);
  return logspace_to_gamma(lo + (hi - lo) * sigma, range.alpha);
}

ScalarField depth_from_gamma(const ScalarField& gamma, const PlaneModel& plane,
                             const CameraIntrinsics& K) {
  require_camera_shape(gamma, K);
  const Vec3 n_down = plane.down();
  const double h_c = plane.camera_height();
  ScalarField depth(gamma.width(), gamma.height(), FieldRole::Depth);
  parallel::for_each_row(gamma.height(), [&](int y) {
    for (int x = 0; x < gamma.width(); ++x) {
      if (!gamma.valid(x, y)) continue;
      const double denom = static_cast<double>(gamma.at(x, y)) + n_down.dot(K.ray(x, y));
      if (denom <= kDenominatorEpsilon) continue;
      depth.set(x, y, static_cast<float>(h_c / denom));
    }
  });
  return depth;
}

ScalarField height_from_gamma(const ScalarField& gamma, const ScalarField& depth) {
  if (!gamma.same_shape(depth)) {
    fail(ErrorKind::ShapeError, "gamma and depth sizes differ");
  }
  ScalarField height(gamma.width(), gamma.height(), FieldRole::Height);
  parallel::for_each_row(gamma.height(), [&](int y) {
    for (int x = 0; x < gamma.width(); ++x) {
      if (!gamma.valid(x, y) || !depth.valid(x, y)) continue;
      height.set(x, y, static_cast<float>(static_cast<double>(gamma.at(x, y)) * depth.at(x, y)));
    }
  });
  return height;
}

ScalarField gamma_from_depth_plane(const ScalarField& depth, const PlaneModel& plane,
                                   const CameraIntrinsics& K) {
  require_camera_shape(depth, K);
  const Vec3 n = plane.normal();
  const double h_c = plane.camera_height();
  ScalarField gamma(depth.width(), depth.height(), FieldRole::Gamma);
  parallel::for_each_row(depth.height(), [&](int y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double d = depth.at(x, y);
      if (!(d > 0.0)) continue;
      // (n . (d r) + h_c) / d, written to stay exact for on-plane points.
      gamma.set(x, y, static_cast<float>(n.dot(K.ray(x, y)) + h_c / d));
    }
  });
  return gamma;
}

Epipole epipole(const CameraIntrinsics& K, const RelativePose& pose) {
  const Vec3 c = pose.source_center();
  if (!(std::abs(c.z()) > 1e-9)) {
    fail(ErrorKind::DegenerateTranslation, "epipole needs a non-zero forward translation");
  }
  return {K.cx + K.fx * c.x() / c.z(), K.cy + K.fy * c.y() / c.z(), c.z()};
}

double source_camera_height(const PlaneModel& plane, const RelativePose& pose) {
  return plane.height_of(pose.source_center());
}

FlowField residual_flow(const ScalarField& gamma, double t_z, double h_c, const Epipole& epi) {
  if (!(h_c > 0.0)) {
    fail(ErrorKind::InvalidParameter, "camera height must be positive");
  }
  if (!(std::abs(t_z) > 1e-9)) {
    fail(ErrorKind::DegenerateTranslation, "residual flow needs T_z != 0");
  }
  FlowField flow{ScalarField(gamma.width(), gamma.height(), FieldRole::FlowU),
                 ScalarField(gamma.width(), gamma.height(), FieldRole::FlowV)};
  const double ratio = t_z / h_c;
  parallel::for_each_row(gamma.height(), [&](int y) {
    for (int x = 0; x < gamma.width(); ++x) {
      if (!gamma.valid(x, y)) continue;
      const double k = static_cast<double>(gamma.at(x, y)) * ratio;
      const double guard = 1.0 - k;
      if (guard < kDenominatorEpsilon) continue;
      const double scale = -k / guard;
      flow.u.set(x, y, static_cast<float>(scale * (x - epi.u)));
      flow.v.set(x, y, static_cast<float>(scale * (y - epi.v)));
    }
  });
  return flow;
}

}  // namespace gfm
