#include "gfm/warp.hpp"

#include <Eigen/LU>

#include <cmath>

#include "gfm/parallel.hpp"

namespace gfm {

Homography::Homography(const Mat3& m) : m_(m) {
  if (!m.allFinite()) fail(ErrorKind::InvalidParameter, "homography is not finite");
  if (std::abs(m_(2, 2)) > 1e-9) m_ /= m_(2, 2);
  if (!(std::abs(m_.determinant()) > 1e-12)) {
    fail(ErrorKind::InvalidParameter, "homography is singular");
  }
}

std::optional<Pixel> Homography::apply(double u, double v) const {
  const double x = m_(0, 0) * u + m_(0, 1) * v + m_(0, 2);
  const double y = m_(1, 0) * u + m_(1, 1) * v + m_(1, 2);
  const double w = m_(2, 0) * u + m_(2, 1) * v + m_(2, 2);
  if (!(std::abs(w) > 1e-12)) return std::nullopt;
  return Pixel{x / w, y / w};
}

SamplingGrid::SamplingGrid(int w, int h, int sw, int sh)
    : width(w), height(h), src_width(sw), src_height(sh),
      u(static_cast<std::size_t>(w) * h, 0.0), v(static_cast<std::size_t>(w) * h, 0.0),
      defined(static_cast<std::size_t>(w) * h, 0), valid(static_cast<std::size_t>(w) * h, 0) {}

void SamplingGrid::set(int x, int y, double su, double sv) {
  const std::size_t i = index(x, y);
  u[i] = su;
  v[i] = sv;
  defined[i] = std::isfinite(su) && std::isfinite(sv) ? 1 : 0;
  valid[i] = defined[i] && su >= 0.0 && sv >= 0.0 && su <= src_width - 1 &&
                     sv <= src_height - 1
                 ? 1
                 : 0;
}

std::size_t SamplingGrid::valid_count() const {
  std::size_t n = 0;
  for (auto b : valid) n += b;
  return n;
}

SamplingGrid identity_grid(int width, int height) {
  SamplingGrid g(width, height, width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) g.set(x, y, x, y);
  }
  return g;
}

Homography plane_homography(const RelativePose& pose, const PlaneModel& plane,
                            const CameraIntrinsics& K) {
  // Road points satisfy N_down . P = h_c, so R P + t = (R + t N_down^T / h_c) P.
  const Mat3 euclid =
      pose.rotation() + pose.translation() * plane.down().transpose() / plane.camera_height();
  if (!(std::abs(euclid.determinant()) > 1e-12)) {
    fail(ErrorKind::DegeneratePlane, "source camera centre lies on the road plane");
  }
  return Homography(K.matrix() * euclid * K.inverse());
}

RgbImage bilinear_sample(const RgbImage& img, const SamplingGrid& grid) {
  if (grid.src_width != img.width() || grid.src_height != img.height()) {
    fail(ErrorKind::ShapeError, "sampling grid was built for a different source size");
  }
  const int w = img.width();
  const int h = img.height();
  RgbImage out(grid.width, grid.height);
  parallel::for_each_row(grid.height, [&](int y) {
    for (int x = 0; x < grid.width; ++x) {
      const std::size_t i = grid.index(x, y);
      if (!grid.valid[i]) {
        out.invalidate(x, y);
        continue;
      }
      const double su = grid.u[i];
      const double sv = grid.v[i];
      int x0 = static_cast<int>(std::floor(su));
      int y0 = static_cast<int>(std::floor(sv));
      if (x0 >= w - 1) x0 = std::max(w - 2, 0);
      if (y0 >= h - 1) y0 = std::max(h - 2, 0);
      const double fx = su - x0;
      const double fy = sv - y0;
      const double wts[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
      const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
      double acc[3] = {0.0, 0.0, 0.0};
      bool ok = true;
      for (int k = 0; k < 4 && ok; ++k) {
        if (wts[k] == 0.0) continue;
        if (tx[k] < 0 || ty[k] < 0 || tx[k] >= w || ty[k] >= h || !img.valid(tx[k], ty[k])) {
          ok = false;
          break;
        }
        for (int c = 0; c < 3; ++c) acc[c] += wts[k] * img.at(tx[k], ty[k], c);
      }
      if (!ok) {
        out.invalidate(x, y);
        continue;
      }
      out.set(x, y, static_cast<float>(std::clamp(acc[0], 0.0, 1.0)),
              static_cast<float>(std::clamp(acc[1], 0.0, 1.0)),
              static_cast<float>(std::clamp(acc[2], 0.0, 1.0)));
    }
  });
  return out;
}

SamplingGrid homography_grid(const Homography& H, int width, int height, int src_width,
                             int src_height) {
  SamplingGrid grid(width, height, src_width, src_height);
  parallel::for_each_row(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      if (const auto p = H.apply(x, y)) grid.set(x, y, p->u, p->v);
    }
  });
  return grid;
}

RgbImage homography_warp(const RgbImage& source, const Homography& H) {
  return bilinear_sample(source,
                         homography_grid(H, source.width(), source.height(), source.width(),
                                         source.height()));
}

SamplingGrid flow_grid(const FlowField& flow, int src_width, int src_height) {
  if (!flow.u.same_shape(flow.v)) fail(ErrorKind::ShapeError, "flow components differ in size");
  SamplingGrid grid(flow.u.width(), flow.u.height(), src_width, src_height);
  parallel::for_each_row(grid.height, [&](int y) {
    for (int x = 0; x < grid.width; ++x) {
      if (!flow.u.valid(x, y) || !flow.v.valid(x, y)) continue;
      grid.set(x, y, x - static_cast<double>(flow.u.at(x, y)),
               y - static_cast<double>(flow.v.at(x, y)));
    }
  });
  return grid;
}

RgbImage flow_warp(const RgbImage& img, const FlowField& flow) {
  if (flow.u.width() != img.width() || flow.u.height() != img.height()) {
    fail(ErrorKind::ShapeError, "flow size does not match the image");
  }
  return bilinear_sample(img, flow_grid(flow, img.width(), img.height()));
}

SamplingGrid depth_reprojection_grid(const ScalarField& depth_t, const RelativePose& pose,
                                     const CameraIntrinsics& K) {
  if (depth_t.width() != K.width || depth_t.height() != K.height) {
    fail(ErrorKind::ShapeError, "depth size does not match the camera");
  }
  SamplingGrid grid(K.width, K.height, K.width, K.height);
  const Mat3& R = pose.rotation();
  const Vec3& t = pose.translation();
  parallel::for_each_row(K.height, [&](int y) {
    for (int x = 0; x < K.width; ++x) {
      if (!depth_t.valid(x, y)) continue;
      const Vec3 ps = R * (static_cast<double>(depth_t.at(x, y)) * K.ray(x, y)) + t;
      if (!(ps.z() > 0.0)) continue;
      grid.set(x, y, K.cx + K.fx * ps.x() / ps.z(), K.cy + K.fy * ps.y() / ps.z());
    }
  });
  return grid;
}

std::size_t DecompositionReport::within(double tolerance) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < discrepancy.size(); ++i) {
    n += discrepancy.valid(i) && discrepancy[i] <= tolerance ? 1 : 0;
  }
  return n;
}

DecompositionReport parallax_decomposition_check(const ScalarField& depth_t,
                                                 const ScalarField& gamma_t,
                                                 const PlaneModel& plane,
                                                 const RelativePose& pose,
                                                 const CameraIntrinsics& K,
                                                 double epipole_radius) {
  if (!depth_t.same_shape(gamma_t)) fail(ErrorKind::ShapeError, "depth and gamma sizes differ");
  const Epipole e = epipole(K, pose);
  const double h_src = source_camera_height(plane, pose);
  const FlowField flow = residual_flow(gamma_t, e.t_z, h_src, e);
  const Homography H = plane_homography(pose, plane, K);
  const SamplingGrid by_depth = depth_reprojection_grid(depth_t, pose, K);

  DecompositionReport report;
  report.discrepancy = ScalarField(K.width, K.height, FieldRole::Generic);
  const double r2 = epipole_radius * epipole_radius;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const std::size_t i = by_depth.index(x, y);
      if (!by_depth.defined[i] || !flow.u.valid(x, y) || !gamma_t.valid(x, y)) continue;
      const double du = x - e.u;
      const double dv = y - e.v;
      if (du * du + dv * dv <= r2) continue;
      const auto q = H.apply(x - static_cast<double>(flow.u.at(x, y)),
                             y - static_cast<double>(flow.v.at(x, y)));
      if (!q) continue;
      const double err = std::hypot(by_depth.u[i] - q->u, by_depth.v[i] - q->v);
      report.discrepancy.set(x, y, static_cast<float>(err));
      report.max_discrepancy = std::max(report.max_discrepancy, err);
      ++report.compared;
    }
  }
  return report;
}

}  // namespace gfm
