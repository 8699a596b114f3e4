#include "gfm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "gfm/parallel.hpp"
#include "gfm/random.hpp"

namespace gfm::synth {

namespace {

constexpr double kBumpFloor = 0.011108996538242306;  // exp(-4.5)
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Frame {
  Vec3 origin, right, forward, up;
  double camera_height;
};

Frame road_frame(const PlaneModel& plane) {
  Frame f;
  f.up = plane.normal();
  f.camera_height = plane.camera_height();
  f.origin = -plane.camera_height() * f.up;
  const Vec3 z(0.0, 0.0, 1.0);
  Vec3 fwd = z - z.dot(f.up) * f.up;
  if (fwd.norm() < 1e-9) fail(ErrorKind::InvalidParameter, "road plane faces the optical axis");
  f.forward = fwd.normalized();
  f.right = f.forward.cross(f.up);
  return f;
}

// Ray in road coordinates: (a, b, h)(s) = base + s * slope, s = view depth.
struct RoadRay {
  double a0, b0, h0;
  double da, db, dh;

  double a(double s) const { return a0 + s * da; }
  double b(double s) const { return b0 + s * db; }
  double h(double s) const { return h0 + s * dh; }
};

struct TerrainSample {
  double value = 0.0;
  double grad_a = 0.0;
  double grad_b = 0.0;
};

double bump_value(const GaussianBump& g, double a, double b, double* ga, double* gb) {
  const double da = a - g.a;
  const double db = b - g.b;
  const double r2 = da * da + db * db;
  const double s2 = g.radius * g.radius;
  if (r2 >= 9.0 * s2) return 0.0;
  const double e = std::exp(-r2 / (2.0 * s2));
  const double k = g.height / (1.0 - kBumpFloor);
  if (ga) *ga += -k * e * da / s2;
  if (gb) *gb += -k * e * db / s2;
  return k * (e - kBumpFloor);
}

double ramp_value(const Ramp& r, double b, double* gb) {
  const double slope = std::tan(r.slope_deg * std::numbers::pi / 180.0);
  const double x = b - r.start;
  if (x <= 0.0) return 0.0;
  if (x >= r.length) return slope * r.length;
  if (gb) *gb += slope;
  return slope * x;
}

TerrainSample terrain(const SceneSpec& spec, double a, double b, int* owner) {
  TerrainSample t;
  double best = 0.0;
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    double v = 0.0;
    if (const auto* g = std::get_if<GaussianBump>(&spec.primitives[i])) {
      v = bump_value(*g, a, b, &t.grad_a, &t.grad_b);
    } else if (const auto* r = std::get_if<Ramp>(&spec.primitives[i])) {
      v = ramp_value(*r, b, &t.grad_b);
    } else {
      continue;
    }
    t.value += v;
    if (owner && v > best) {
      best = v;
      *owner = static_cast<int>(i);
    }
  }
  return t;
}

double terrain_height(const SceneSpec& spec, double a, double b) {
  double h = 0.0;
  for (const auto& p : spec.primitives) {
    if (const auto* g = std::get_if<GaussianBump>(&p)) h += bump_value(*g, a, b, nullptr, nullptr);
    else if (const auto* r = std::get_if<Ramp>(&p)) h += ramp_value(*r, b, nullptr);
  }
  return h;
}

// Upper bound on the summed height field.
double terrain_ceiling(const SceneSpec& spec) {
  double top = 0.0;
  for (const auto& p : spec.primitives) {
    if (const auto* g = std::get_if<GaussianBump>(&p)) top += std::max(g->height, 0.0);
    else if (const auto* r = std::get_if<Ramp>(&p)) top += std::max(ramp_value(*r, r->start + r->length, nullptr), 0.0);
  }
  return top;
}

struct Interval {
  double lo, hi, step;
};

// Depth ranges where the ray passes over the support of a height-field
// primitive, with a march step fine enough to catch every crossing.
std::vector<Interval> support_intervals(const SceneSpec& spec, const RoadRay& ray, double s_max) {
  std::vector<Interval> out;
  const double speed = std::hypot(ray.da, ray.db);
  for (const auto& p : spec.primitives) {
    if (const auto* g = std::get_if<GaussianBump>(&p)) {
      const double R = 3.0 * g->radius;
      const double oa = ray.a0 - g->a;
      const double ob = ray.b0 - g->b;
      const double qa = ray.da * ray.da + ray.db * ray.db;
      const double qb = 2.0 * (oa * ray.da + ob * ray.db);
      const double qc = oa * oa + ob * ob - R * R;
      double lo, hi;
      if (qa < 1e-18) {
        if (qc > 0.0) continue;
        lo = 0.0;
        hi = s_max;
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc <= 0.0) continue;
        const double sq = std::sqrt(disc);
        lo = (-qb - sq) / (2.0 * qa);
        hi = (-qb + sq) / (2.0 * qa);
      }
      const double step = speed > 1e-12 ? g->radius / (8.0 * speed) : kInf;
      out.push_back({lo, hi, step});
    } else if (const auto* r = std::get_if<Ramp>(&p)) {
      double lo = 0.0, hi = s_max;
      if (std::abs(ray.db) < 1e-15) {
        if (ray.b0 <= r->start) continue;
      } else if (ray.db > 0.0) {
        lo = (r->start - ray.b0) / ray.db;
      } else {
        hi = (r->start - ray.b0) / ray.db;
      }
      const double step = speed > 1e-12 ? r->length / (16.0 * speed) : kInf;
      out.push_back({lo, hi, step});
    }
  }
  double lo_all = 0.0, hi_all = s_max;
  const double top = terrain_ceiling(spec);
  if (ray.dh < 0.0) {
    lo_all = std::max(lo_all, (ray.h0 - top) / -ray.dh);
  } else if (ray.dh > 0.0) {
    hi_all = std::min(hi_all, (top - ray.h0) / ray.dh);
  } else if (ray.h0 > top) {
    return {};
  }
  std::vector<Interval> clipped;
  for (auto iv : out) {
    iv.lo = std::max(iv.lo, lo_all);
    iv.hi = std::min(iv.hi, hi_all);
    if (iv.hi > iv.lo) clipped.push_back(iv);
  }
  std::sort(clipped.begin(), clipped.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : clipped) {
    if (!merged.empty() && iv.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
      merged.back().step = std::min(merged.back().step, iv.step);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

// First depth in the intervals where the ray drops to or below the terrain.
std::optional<double> march_terrain(const SceneSpec& spec, const RoadRay& ray,
                                    const std::vector<Interval>& intervals) {
  auto f = [&](double s) { return ray.h(s) - terrain_height(spec, ray.a(s), ray.b(s)); };
  for (const auto& iv : intervals) {
    const double span = iv.hi - iv.lo;
    const double step = std::min(iv.step, span / 4.0);
    double prev = iv.lo;
    if (f(prev) <= 0.0) return prev;
    for (long i = 1;; ++i) {
      const double cur = std::min(iv.lo + static_cast<double>(i) * step, iv.hi);
      if (f(cur) <= 0.0) {
        double lo = prev, hi = cur;
        for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (f(mid) > 0.0 ? lo : hi) = mid;
        }
        return hi;
      }
      if (cur >= iv.hi) break;
      prev = cur;
    }
  }
  return std::nullopt;
}

struct BoxHit {
  double s;
  int axis;     // 0 = a, 1 = b, 2 = h
  double sign;  // outward face direction along the axis
};

std::optional<BoxHit> intersect_box(const Box& box, const RoadRay& ray) {
  const double lo[3] = {box.a - 0.5 * box.width, box.b - 0.5 * box.length, 0.0};
  const double hi[3] = {box.a + 0.5 * box.width, box.b + 0.5 * box.length, box.height};
  const double o[3] = {ray.a0, ray.b0, ray.h0};
  const double d[3] = {ray.da, ray.db, ray.dh};
  double t_near = -kInf, t_far = kInf;
  int axis = -1;
  double sign = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return std::nullopt;
      continue;
    }
    double t1 = (lo[k] - o[k]) / d[k];
    double t2 = (hi[k] - o[k]) / d[k];
    double face = -1.0;
    if (t1 > t2) {
      std::swap(t1, t2);
      face = 1.0;
    }
    if (t1 > t_near) {
      t_near = t1;
      axis = k;
      sign = face;
    }
    t_far = std::min(t_far, t2);
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(t_near));
  if (axis < 0 || t_near <= 0.0 || t_near > t_far + tol) return std::nullopt;
  return BoxHit{t_near, axis, sign};
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t key, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix64(key ^ mix64(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                            mix64(static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t key, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = fade(x - fx);
  const double ty = fade(y - fy);
  const double v00 = lattice(key, ix, iy);
  const double v10 = lattice(key, ix + 1, iy);
  const double v01 = lattice(key, ix, iy + 1);
  const double v11 = lattice(key, ix + 1, iy + 1);
  const double top = v00 + tx * (v10 - v00);
  const double bottom = v01 + tx * (v11 - v01);
  return top + ty * (bottom - top);
}

// Colour of a world direction seen from the target camera centre.
void shade(const TextureSpec& tex, const Vec3& dir, float rgb[3]) {
  const double az = std::atan2(dir.x(), dir.z());
  const double el = std::atan2(dir.y(), std::hypot(dir.x(), dir.z()));
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0, norm = 0.0, amp = 1.0, cell = tex.angular_cell;
    for (int o = 0; o < tex.octaves; ++o) {
      const std::uint64_t key = mix64(tex.seed * 0x100 + static_cast<std::uint64_t>(c * 16 + o));
      acc += amp * (value_noise(key, az / cell, el / cell) - 0.5);
      norm += amp;
      amp *= 0.5;
      cell *= 0.5;
    }
    rgb[c] = static_cast<float>(0.5 + tex.contrast * acc / norm);
  }
}

}  // namespace

void SceneSpec::validate() const {
  camera.validate();
  if (!(max_depth > 0.0)) fail(ErrorKind::InvalidParameter, "max_depth must be positive");
  if (!(texture.angular_cell > 0.0) || texture.octaves < 1 || texture.octaves > 8 ||
      !(texture.contrast >= 0.0 && texture.contrast <= 1.0)) {
    fail(ErrorKind::InvalidParameter, "texture parameters out of range");
  }
  for (const auto& p : primitives) {
    if (const auto* g = std::get_if<GaussianBump>(&p)) {
      if (!(g->radius > 0.0) || !std::isfinite(g->height)) {
        fail(ErrorKind::InvalidParameter, "bump radius must be positive");
      }
    } else if (const auto* b = std::get_if<Box>(&p)) {
      if (!(b->width > 0.0 && b->length > 0.0 && b->height > 0.0)) {
        fail(ErrorKind::InvalidParameter, "box dimensions must be positive");
      }
    } else if (const auto* r = std::get_if<Ramp>(&p)) {
      if (!(r->length > 0.0) || !(std::abs(r->slope_deg) < 60.0)) {
        fail(ErrorKind::InvalidParameter, "ramp needs positive length and |slope| < 60 deg");
      }
    }
  }
}

RenderedView render_view(const SceneSpec& spec, const RelativePose& pose) {
  spec.validate();
  const CameraIntrinsics& K = spec.camera;
  const Frame frame = road_frame(spec.plane);
  const Mat3 Rt = pose.rotation().transpose();
  const Vec3 center = pose.source_center();
  const Vec3 rel = center - frame.origin;
  if (!(rel.dot(frame.up) > 0.0)) fail(ErrorKind::InvalidParameter, "camera is not above the road");

  const int w = K.width;
  const int h = K.height;
  RenderedView view{RgbImage(w, h), ScalarField(w, h, FieldRole::Depth),
                    ScalarField(w, h, FieldRole::Gamma), ScalarField(w, h, FieldRole::Height),
                    NormalField(w, h), std::vector<std::int32_t>(static_cast<std::size_t>(w) * h, kLabelSky)};

  parallel::for_each_row(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const Vec3 dir = Rt * K.ray(x, y);
      RoadRay ray{rel.dot(frame.right), rel.dot(frame.forward), rel.dot(frame.up),
                  dir.dot(frame.right), dir.dot(frame.forward), dir.dot(frame.up)};

      double best = kInf;
      int label = kLabelSky;
      Vec3 normal = frame.up;
      bool on_road = false;

      const auto intervals = support_intervals(spec, ray, spec.max_depth);
      if (ray.dh < 0.0) {
        const double s_plane = -ray.h0 / ray.dh;
        bool covered = false;
        for (const auto& iv : intervals) covered = covered || (s_plane >= iv.lo && s_plane <= iv.hi);
        if (!covered && s_plane <= spec.max_depth) {
          best = s_plane;
          label = kLabelRoad;
          on_road = true;
        }
      }
      if (auto s = march_terrain(spec, ray, intervals); s && *s < best) {
        best = *s;
        int owner = -1;
        const TerrainSample t = terrain(spec, ray.a(best), ray.b(best), &owner);
        label = owner >= 0 ? owner + 1 : kLabelRoad;
        on_road = owner < 0;
        normal = (frame.up - t.grad_a * frame.right - t.grad_b * frame.forward).normalized();
      }
      for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const auto* box = std::get_if<Box>(&spec.primitives[i]);
        if (!box) continue;
        const auto hit = intersect_box(*box, ray);
        if (!hit || hit->s >= best || hit->s > spec.max_depth) continue;
        best = hit->s;
        label = static_cast<int>(i) + 1;
        on_road = false;
        const Vec3 axes[3] = {frame.right, frame.forward, frame.up};
        normal = hit->sign * axes[hit->axis];
      }

      view.labels[idx] = label;
      if (label == kLabelSky) {
        float rgb[3];
        shade(spec.texture, dir, rgb);
        view.image.set(x, y, rgb[0], rgb[1], rgb[2]);
        continue;
      }
      const Vec3 point = center + best * dir;
      float rgb[3];
      shade(spec.texture, point, rgb);
      view.image.set(x, y, rgb[0], rgb[1], rgb[2]);
      const double height = on_road ? 0.0 : std::max(0.0, ray.h(best));
      const float depth_f = static_cast<float>(best);
      view.depth.set(idx, depth_f);
      view.height.set(idx, static_cast<float>(height));
      view.gamma.set(idx, static_cast<float>(height / static_cast<double>(depth_f)));
      view.normals.normals[idx] = pose.rotation() * normal;
      view.normals.valid[idx] = 1;
    }
  });
  if (view.depth.valid_count() == 0) fail(ErrorKind::EmptyScene, "no geometry inside the view frustum");
  return view;
}

std::pair<RenderedView, RenderedView> render_pair(const SceneSpec& spec) {
  return {render_view(spec, RelativePose::identity()), render_view(spec, spec.source_pose)};
}

ScalarField covisibility(const RenderedView& target, const RenderedView& source,
                         const RelativePose& pose, const CameraIntrinsics& K) {
  const int w = target.depth.width();
  const int h = target.depth.height();
  if (source.depth.width() != w || source.depth.height() != h || K.width != w || K.height != h) {
    fail(ErrorKind::ShapeError, "views and camera differ in size");
  }
  ScalarField mask = ScalarField::filled(w, h, FieldRole::Mask, 0.0f);
  parallel::for_each_row(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!target.depth.valid(x, y)) continue;
      const Vec3 ps = pose.apply(K.ray(x, y) * target.depth.at(x, y));
      if (ps.z() <= 1e-9) continue;
      const double u = K.fx * ps.x() / ps.z() + K.cx;
      const double v = K.fy * ps.y() / ps.z() + K.cy;
      if (!(u >= 1.0 && v >= 1.0 && u <= w - 3.0 && v <= h - 3.0)) continue;
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const std::int32_t want = target.label(x, y);
      bool ok = true;
      for (int yy = y0 - 1; yy <= y0 + 2 && ok; ++yy) {
        for (int xx = x0 - 1; xx <= x0 + 2 && ok; ++xx) {
          ok = source.label(xx, yy) == want && source.depth.valid(xx, yy);
        }
      }
      if (!ok) continue;
      const double fx = u - x0;
      const double fy = v - y0;
      const double inv = (1 - fx) * (1 - fy) / source.depth.at(x0, y0) +
                         fx * (1 - fy) / source.depth.at(x0 + 1, y0) +
                         (1 - fx) * fy / source.depth.at(x0, y0 + 1) +
                         fx * fy / source.depth.at(x0 + 1, y0 + 1);
      if (std::abs(inv * ps.z() - 1.0) <= 1e-2) mask.set(x, y, 1.0f);
    }
  });
  return mask;
}

TreeBumpFixture tree_bump_fixture() {
  TreeBumpFixture f{{FixtureObject{"tree", 3.00, 2.00, 2.00 / 3.00, 3.50, 2.20, 2.20 / 3.50},
                 FixtureObject{"bump", 3.00, 0.150, 0.150 / 3.00, 3.20, 0.000, 0.000}},
                ScalarField(2, 1, FieldRole::Depth), ScalarField(2, 1, FieldRole::Height),
                ScalarField(2, 1, FieldRole::Gamma), ScalarField(2, 1, FieldRole::Depth),
                ScalarField(2, 1, FieldRole::Height), ScalarField(2, 1, FieldRole::Gamma)};
  for (int i = 0; i < 2; ++i) {
    const auto& o = f.objects[static_cast<std::size_t>(i)];
    f.depth_gt.set(i, 0, static_cast<float>(o.depth_gt));
    f.height_gt.set(i, 0, static_cast<float>(o.height_gt));
    f.gamma_gt.set(i, 0, static_cast<float>(o.gamma_gt));
    f.depth_pred.set(i, 0, static_cast<float>(o.depth_pred));
    f.height_pred.set(i, 0, static_cast<float>(o.height_pred));
    f.gamma_pred.set(i, 0, static_cast<float>(o.gamma_pred));
  }
  return f;
}

CameraIntrinsics default_camera() {
  return CameraIntrinsics::make(0.58 * 640, 1.92 * 192, 320.0, 96.0, 640, 192);
}

SceneSpec random_scene(std::uint64_t seed, const CameraIntrinsics& camera,
                       const RandomSceneOptions& opt) {
  std::mt19937_64 rng(seed);
  const double deg = std::numbers::pi / 180.0;
  SceneSpec spec;
  spec.camera = camera;
  spec.texture.seed = seed;

  const double pitch = uniform_real(rng, -opt.max_tilt_deg, opt.max_tilt_deg) * deg;
  const double roll = uniform_real(rng, -opt.max_tilt_deg, opt.max_tilt_deg) * deg;
  const Mat3 tilt = (Eigen::AngleAxisd(pitch, Vec3::UnitX()) * Eigen::AngleAxisd(roll, Vec3::UnitZ()))
                        .toRotationMatrix();
  spec.plane = PlaneModel(tilt * Vec3(0.0, -1.0, 0.0), uniform_real(rng, 1.5, 1.8));

  std::vector<int> kinds;
  if (opt.bumps) kinds.push_back(0);
  if (opt.boxes) kinds.push_back(1);
  if (opt.ramps) kinds.push_back(2);
  const double half_fov = camera.cx / camera.fx;
  const int lo = std::clamp(opt.min_primitives, 0, std::max(opt.max_primitives, 0));
  const int count =
      kinds.empty() ? 0 : lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(opt.max_primitives, 0) - lo + 1)));
  bool have_ramp = false;
  for (int i = 0; i < count; ++i) {
    const int kind = kinds[uniform_index(rng, kinds.size())];
    const double b = uniform_real(rng, 4.0, 20.0);
    const double a = uniform_real(rng, -0.5, 0.5) * b * half_fov;
    if (kind == 0) {
      spec.primitives.push_back(GaussianBump{a, b, uniform_real(rng, 0.05, 0.3), uniform_real(rng, 0.3, 1.0)});
    } else if (kind == 1) {
      const double lo = opt.tall_boxes_only ? 2.5 : 0.5;
      const double hi = opt.tall_boxes_only ? 4.0 : 2.5;
      spec.primitives.push_back(Box{a, b, uniform_real(rng, 0.5, 2.0), uniform_real(rng, 0.5, 2.0),
                                    uniform_real(rng, lo, hi)});
    } else if (!have_ramp) {
      have_ramp = true;
      spec.primitives.push_back(Ramp{uniform_real(rng, 8.0, 20.0), uniform_real(rng, 2.0, 6.0),
                                     uniform_real(rng, 2.0, 8.0)});
    }
  }

  const double forward = uniform_real(rng, opt.min_forward, opt.max_forward);
  const double lateral = uniform_real(rng, -0.05, 0.05);
  const double yaw = uniform_real(rng, -opt.max_yaw_deg, opt.max_yaw_deg) * deg;
  const Mat3 R = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
  const Vec3 c(lateral, 0.0, forward);
  spec.source_pose = RelativePose(R, -R * c);
  return spec;
}

}  // namespace gfm::synth
