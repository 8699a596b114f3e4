#include "gfm/reference.hpp"

#include <algorithm>
#include <cmath>

namespace gfm::reference {

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

void check_camera(const ScalarField& f, const CameraIntrinsics& K) {
  if (f.width() != K.width || f.height() != K.height) {
    fail(ErrorKind::ShapeError, "field size does not match the camera");
  }
}

}  // namespace

ScalarField depth_from_gamma(const ScalarField& gamma, const PlaneModel& plane,
                             const CameraIntrinsics& K) {
  check_camera(gamma, K);
  const Vec3 n_down = plane.down();
  ScalarField depth(gamma.width(), gamma.height(), FieldRole::Depth);
  for (int y = 0; y < gamma.height(); ++y) {
    for (int x = 0; x < gamma.width(); ++x) {
      if (!gamma.valid(x, y)) continue;
      const double denom = static_cast<double>(gamma.at(x, y)) + n_down.dot(K.ray(x, y));
      if (denom > kDenominatorEpsilon) {
        depth.set(x, y, static_cast<float>(plane.camera_height() / denom));
      }
    }
  }
  return depth;
}

ScalarField gamma_from_depth_plane(const ScalarField& depth, const PlaneModel& plane,
                                   const CameraIntrinsics& K) {
  check_camera(depth, K);
  ScalarField gamma(depth.width(), depth.height(), FieldRole::Gamma);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double d = depth.at(x, y);
      if (d > 0.0) {
        gamma.set(x, y, static_cast<float>(plane.normal().dot(K.ray(x, y)) + plane.camera_height() / d));
      }
    }
  }
  return gamma;
}

FlowField residual_flow(const ScalarField& gamma, double t_z, double h_c, const Epipole& epi) {
  if (!(h_c > 0.0)) fail(ErrorKind::InvalidParameter, "camera height must be positive");
  if (!(std::abs(t_z) > 1e-9)) fail(ErrorKind::DegenerateTranslation, "residual flow needs T_z != 0");
  FlowField flow{ScalarField(gamma.width(), gamma.height(), FieldRole::FlowU),
                 ScalarField(gamma.width(), gamma.height(), FieldRole::FlowV)};
  for (int y = 0; y < gamma.height(); ++y) {
    for (int x = 0; x < gamma.width(); ++x) {
      if (!gamma.valid(x, y)) continue;
      const double k = static_cast<double>(gamma.at(x, y)) * (t_z / h_c);
      if (1.0 - k < kDenominatorEpsilon) continue;
      const double scale = -k / (1.0 - k);
      flow.u.set(x, y, static_cast<float>(scale * (x - epi.u)));
      flow.v.set(x, y, static_cast<float>(scale * (y - epi.v)));
    }
  }
  return flow;
}

RgbImage bilinear_sample(const RgbImage& img, const SamplingGrid& grid) {
  if (grid.src_width != img.width() || grid.src_height != img.height()) {
    fail(ErrorKind::ShapeError, "sampling grid was built for a different source size");
  }
  const int w = img.width();
  const int h = img.height();
  RgbImage out(grid.width, grid.height);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const std::size_t i = grid.index(x, y);
      if (!grid.valid[i]) {
        out.invalidate(x, y);
        continue;
      }
      int x0 = static_cast<int>(std::floor(grid.u[i]));
      int y0 = static_cast<int>(std::floor(grid.v[i]));
      if (x0 >= w - 1) x0 = std::max(w - 2, 0);
      if (y0 >= h - 1) y0 = std::max(h - 2, 0);
      const double fx = grid.u[i] - x0;
      const double fy = grid.v[i] - y0;
      const double weight[2][2] = {{(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy)},
                                   {(1.0 - fx) * fy, fx * fy}};
      double acc[3] = {0.0, 0.0, 0.0};
      bool ok = true;
      for (int dy = 0; dy < 2 && ok; ++dy) {
        for (int dx = 0; dx < 2 && ok; ++dx) {
          if (weight[dy][dx] == 0.0) continue;
          const int xx = x0 + dx;
          const int yy = y0 + dy;
          ok = xx >= 0 && yy >= 0 && xx < w && yy < h && img.valid(xx, yy);
          if (!ok) break;
          for (int c = 0; c < 3; ++c) acc[c] += weight[dy][dx] * img.at(xx, yy, c);
        }
      }
      if (!ok) {
        out.invalidate(x, y);
        continue;
      }
      out.set(x, y, static_cast<float>(std::clamp(acc[0], 0.0, 1.0)),
              static_cast<float>(std::clamp(acc[1], 0.0, 1.0)),
              static_cast<float>(std::clamp(acc[2], 0.0, 1.0)));
    }
  }
  return out;
}

ScalarField ssim(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeError, "image sizes differ");
  const int w = a.width();
  const int h = a.height();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  ScalarField out(w, h, FieldRole::Generic);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int k = 0; k < 9 && ok; ++k) {
        const int xx = mirror(x + k % 3 - 1, w);
        const int yy = mirror(y + k / 3 - 1, h);
        ok = a.valid(xx, yy) && b.valid(xx, yy);
      }
      if (!ok) continue;
      double total = 0.0;
      for (int c = 0; c < 3; ++c) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int k = 0; k < 9; ++k) {
          const int xx = mirror(x + k % 3 - 1, w);
          const int yy = mirror(y + k / 3 - 1, h);
          const double va = a.at(xx, yy, c);
          const double vb = b.at(xx, yy, c);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
        const double ma = sa / 9.0;
        const double mb = sb / 9.0;
        const double num = (2.0 * ma * mb + c1) * (2.0 * (sab / 9.0 - ma * mb) + c2);
        const double den = (ma * ma + mb * mb + c1) * ((saa / 9.0 - ma * ma) + (sbb / 9.0 - mb * mb) + c2);
        total += num / den;
      }
      out.set(x, y, static_cast<float>(std::clamp(total / 3.0, -1.0, 1.0)));
    }
  }
  return out;
}

NormalField local_normals(const ScalarField& depth, const CameraIntrinsics& K, int delta) {
  if (delta < 1) fail(ErrorKind::InvalidParameter, "normal offset must be >= 1");
  check_camera(depth, K);
  if (depth.valid_count() == 0) fail(ErrorKind::EmptyInput, "depth has no valid pixels");
  const int w = depth.width();
  const int h = depth.height();
  NormalField out(w, h);
  auto point = [&](int x, int y) -> Vec3 { return static_cast<double>(depth.at(x, y)) * K.ray(x, y); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = mirror(x - delta, w), xr = mirror(x + delta, w);
      const int yu = mirror(y - delta, h), yd = mirror(y + delta, h);
      if (!(depth.valid(x, y) && depth.valid(xl, y) && depth.valid(xr, y) && depth.valid(x, yu) &&
            depth.valid(x, yd))) {
        continue;
      }
      Vec3 n = (point(xr, y) - point(xl, y)).cross(point(x, yd) - point(x, yu));
      const double len = n.norm();
      if (!(len >= 1e-12)) continue;
      n /= len;
      if (n.dot(point(x, y)) > 0.0) n = -n;
      out.normals[static_cast<std::size_t>(y) * w + x] = n;
      out.valid[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return out;
}

std::size_t count_inliers(const PlanePoints& pts, const Vec3& normal, double offset,
                          double threshold) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = normal.x() * pts.x[i] + normal.y() * pts.y[i] + normal.z() * pts.z[i] + offset;
    if (std::abs(r) < threshold) ++count;
  }
  return count;
}

}  // namespace gfm::reference
