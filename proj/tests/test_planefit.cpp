#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gfm/gamma_map.hpp"
#include "gfm/planefit.hpp"
#include "gfm/random.hpp"
#include "gfm/synth.hpp"

using namespace gfm;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

synth::SceneSpec flat_scene(const Vec3& normal = {0, -1, 0}, double h = 1.65) {
  synth::SceneSpec s;
  s.camera = synth::default_camera();
  s.plane = PlaneModel(normalized(normal), h);
  return s;
}

PlanePoints points_on(const Vec3& n, double h, int count, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  const Vec3 fwd = normalized(Vec3::UnitZ() - Vec3::UnitZ().dot(n) * n);
  const Vec3 right = fwd.cross(n);
  PlanePoints pts;
  for (int i = 0; i < count; ++i) {
    Vec3 p = -h * n + uniform_real(rng, -5, 5) * right + uniform_real(rng, 3, 30) * fwd;
    if (sigma > 0) p += Vec3(noise(rng), noise(rng), noise(rng)) * sigma;
    pts.x.push_back(p.x());
    pts.y.push_back(p.y());
    pts.z.push_back(p.z());
  }
  return pts;
}

}  // namespace

TEST_CASE("local normals of simple surfaces") {
  const auto spec = flat_scene();
  const auto view = synth::render_view(spec, RelativePose::identity());
  const auto normals = local_normals(view.depth, spec.camera, 2);
  std::size_t checked = 0;
  for (int y = 120; y < 190; ++y) {
    for (int x = 5; x < 635; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 640 + x;
      REQUIRE(normals.valid[i]);
      CHECK(angle_between(normals.normals[i], Vec3(0, -1, 0)) < 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 0);

  const auto K = CameraIntrinsics::make(50, 50, 15, 10, 30, 20);
  const auto wall = local_normals(ScalarField::filled(30, 20, FieldRole::Depth, 4.0f), K, 1);
  for (int y = 1; y < 19; ++y) {
    for (int x = 1; x < 29; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 30 + x;
      REQUIRE(wall.valid[i]);
      CHECK(std::abs(std::abs(wall.normals[i].z()) - 1.0) < 1e-9);
      CHECK(wall.normals[i].z() < 0);  // towards the camera
    }
  }
  // Reflection padding with offset 1 collapses the stencil on the border.
  CHECK_FALSE(wall.valid[0]);

  CHECK_THROWS_AS(local_normals(ScalarField(30, 20, FieldRole::Depth), K, 1), Error);
  CHECK_THROWS_AS(local_normals(ScalarField::filled(30, 20, FieldRole::Depth, 1.0f), K, 0), Error);
}

TEST_CASE("local normals of an inclined plane") {
  const Vec3 n = normalized(Vec3(0, -std::cos(10 * kDeg), -std::sin(10 * kDeg)));
  const auto spec = flat_scene(n);
  const auto view = synth::render_view(spec, RelativePose::identity());
  const auto normals = local_normals(view.depth, spec.camera, 2);
  std::size_t total = 0, good = 0;
  for (int y = 2; y < 190; ++y) {
    for (int x = 2; x < 638; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 640 + x;
      if (!view.depth.valid(i) || !normals.valid[i]) continue;
      ++total;
      good += angle_between(normals.normals[i], n) < 0.5 * kDeg;
    }
  }
  REQUIRE(total > 10000);
  CHECK(static_cast<double>(good) / total >= 0.99);
}

TEST_CASE("ransac on a noiseless plane") {
  const Vec3 n = normalized(Vec3(0.03, -1.0, -0.02));
  const auto pts = points_on(n, 1.65, 5000, 0.0, 1);
  RansacConfig cfg;
  cfg.iterations = 2000;
  const FittedPlane fit = ransac_plane(pts, cfg, {0, -1, 0});
  CHECK(angle_between(fit.normal, n) < 0.1 * kDeg);
  CHECK(std::abs(fit.offset - 1.65) < 1e-6);
  CHECK(fit.inlier_ratio == 1.0);
  CHECK(fit.inlier_count == 5000);
  CHECK(fit.to_plane_model().camera_height() == doctest::Approx(1.65));
}

TEST_CASE("ransac with noise and outliers") {
  const Vec3 n = normalized(Vec3(0.0, -1.0, 0.05));
  PlanePoints pts = points_on(n, 1.5, 4000, 0.005, 2);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    pts.x.push_back(uniform_real(rng, -5, 5));
    pts.y.push_back(uniform_real(rng, -3, 1));
    pts.z.push_back(uniform_real(rng, 3, 30));
  }
  RansacConfig cfg;
  cfg.iterations = 3000;
  const FittedPlane fit = ransac_plane(pts, cfg, {0, -1, 0});
  CHECK(angle_between(fit.normal, n) < 1.0 * kDeg);
  CHECK(std::abs(fit.offset - 1.5) < 0.01);
  CHECK(fit.normal.y() < 0);
}

TEST_CASE("ransac determinism and errors") {
  const auto pts = points_on(normalized(Vec3(0, -1, 0.02)), 1.7, 2000, 0.01, 4);
  RansacConfig cfg;
  cfg.iterations = 500;
  cfg.seed = 77;
  CHECK(ransac_plane(pts, cfg, {0, -1, 0}) == ransac_plane(pts, cfg, {0, -1, 0}));

  PlanePoints two;
  two.x = {0, 1};
  two.y = {1, 1};
  two.z = {3, 4};
  try {
    ransac_plane(two, cfg, {0, -1, 0});
    FAIL("expected InsufficientPoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientPoints);
  }

  PlanePoints line;
  for (int i = 0; i < 10; ++i) {
    line.x.push_back(i);
    line.y.push_back(1);
    line.z.push_back(5);
  }
  try {
    ransac_plane(line, cfg, {0, -1, 0});
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("gamma from depth via ransac on rendered scenes") {
  auto spec = flat_scene();
  spec.primitives = {synth::GaussianBump{0.0, 8.0, 0.15, 0.5}};
  const auto view = synth::render_view(spec, RelativePose::identity());
  RansacConfig cfg;
  cfg.iterations = 2000;
  const auto [gamma, fit] = gamma_from_depth_ransac(view.depth, spec.camera, cfg, {0, -1, 0});
  // Bump shoulders inside the inlier band pull the refit by a few millimetres.
  CHECK(std::abs(fit.offset - 1.65) < 1e-2);
  const auto via_plane = gamma_from_depth_plane(view.depth, PlaneModel(fit.normal, fit.offset), spec.camera);
  for (std::size_t i = 0; i < gamma.size(); i += 13) {
    REQUIRE(gamma.valid(i) == via_plane.valid(i));
    if (gamma.valid(i)) REQUIRE(gamma[i] == via_plane[i]);
  }
  // Bump apex straight ahead at 8 m lands on the image centre column.
  float apex = -1.0f;
  for (int y = 96; y < 192; ++y) {
    if (gamma.valid(320, y)) apex = std::max(apex, gamma.at(320, y));
  }
  CHECK(std::abs(apex - 0.15 / 8.0) < std::abs(fit.offset - 1.65) / 8.0 + 1e-4);

  auto tree = flat_scene();
  tree.primitives = {synth::Box{0.0, 3.5, 1.0, 1.0, 2.0}};
  const auto tv = synth::render_view(tree, RelativePose::identity());
  const auto [tg, tfit] = gamma_from_depth_ransac(tv.depth, tree.camera, cfg, {0, -1, 0});
  // Top edge of the front face at d = 3.
  float top = 0.0f;
  for (int y = 0; y < 192; ++y) {
    if (tv.label(320, y) == 1) {
      top = tg.at(320, y);
      break;
    }
  }
  CHECK(std::abs(top - 0.667) < 1e-3);

  auto empty_view = flat_scene();
  ScalarField none(640, 192, FieldRole::Depth);
  CHECK_THROWS_AS(gamma_from_depth_ransac(none, empty_view.camera, cfg, {0, -1, 0}), Error);
}

TEST_CASE("angular deviation and road probability") {
  NormalField nf(3, 1);
  nf.normals = {Vec3(0, -1, 0), Vec3(1, 0, 0), Vec3(0, -1, 1e-9).normalized()};
  nf.valid = {1, 1, 1};
  const auto theta = angular_deviation(nf, {0, -1, 0});
  CHECK(theta.at(0, 0) == 0.0f);
  CHECK(theta.at(1, 0) == doctest::Approx(std::numbers::pi / 2));
  CHECK(theta.at(2, 0) == doctest::Approx(0.0));
  CHECK_FALSE(std::isnan(theta.at(2, 0)));

  ScalarField t(3, 1, FieldRole::Generic);
  t.set(0, 0, 0.0f);
  t.set(1, 0, static_cast<float>(std::numbers::pi / 2));
  t.set(2, 0, static_cast<float>(60 * kDeg));
  const auto p = road_probability(t, RoadMaskConfig{});
  CHECK(p.at(0, 0) == 1.0f);
  CHECK(p.at(1, 0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(p.at(2, 0) == doctest::Approx(std::cos(60 * kDeg) / std::cos(5 * kDeg)).epsilon(1e-6));
  CHECK(p.at(2, 0) == doctest::Approx(0.50191).epsilon(1e-5));
}

TEST_CASE("gaussian prior") {
  RoadMaskConfig cfg;
  const auto g = gaussian_prior(640, 192, cfg);
  const int cx = 320, cy = 144;
  CHECK(g.at(cx, cy) == 1.0f);
  const int dx = static_cast<int>(cfg.sigma_w * 640);
  CHECK(g.at(cx + dx, cy) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  CHECK(g.at(cx + dx, cy) == doctest::Approx(0.60653).epsilon(1e-5));
  CHECK(g.at(0, 0) < g.at(cx, 191));
}

TEST_CASE("road mask on rendered scenes") {
  auto spec = flat_scene();
  spec.primitives = {synth::Box{0.0, 8.0, 3.0, 1.0, 3.0}};
  const auto view = synth::render_view(spec, RelativePose::identity());
  const RoadMaskConfig cfg;
  const auto mask = road_mask(view.depth, spec.camera, spec.plane.normal(), cfg);

  double road_sum = 0.0, wall_sum = 0.0;
  std::size_t road_n = 0, wall_n = 0;
  for (int y = 0; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      const auto label = view.label(x, y);
      if (label == synth::kLabelRoad && y > 160 && std::abs(x - 320) < 100) {
        road_sum += mask.at(x, y);
        ++road_n;
      }
      // Interior of the box face, away from its silhouette.
      bool interior = label == 1;
      for (int k = -3; k <= 3 && interior; ++k) {
        interior = x + k >= 0 && x + k < 640 && y + k >= 0 && y + k < 192 && view.label(x + k, y) == 1 &&
                   view.label(x, y + k) == 1;
      }
      if (interior) {
        wall_sum += mask.at(x, y);
        ++wall_n;
      }
    }
  }
  REQUIRE(road_n > 0);
  REQUIRE(wall_n > 0);
  CHECK(road_sum / road_n > 0.5);
  CHECK(wall_sum / wall_n < 1e-3);

  const auto flat = synth::render_view(flat_scene(), RelativePose::identity());
  const auto ortho = road_mask(flat.depth, spec.camera, {1, 0, 0}, cfg);
  double ortho_max = 0.0;
  for (std::size_t i = 0; i < ortho.size(); ++i) ortho_max = std::max(ortho_max, static_cast<double>(ortho[i]));
  CHECK(ortho_max < 0.1);

  const auto none = road_mask(ScalarField(640, 192, FieldRole::Depth), spec.camera, {0, -1, 0}, cfg);
  CHECK(none.valid_count() == none.size());
  for (std::size_t i = 0; i < none.size(); ++i) REQUIRE(none[i] == 0.0f);

  RoadMaskConfig bin = cfg;
  bin.binarize = true;
  const auto b = road_mask(view.depth, spec.camera, spec.plane.normal(), bin);
  for (std::size_t i = 0; i < b.size(); ++i) REQUIRE((b[i] == 0.0f || b[i] == 1.0f));
}

TEST_CASE("ransac candidates respect range and roi") {
  const auto spec = flat_scene();
  const auto view = synth::render_view(spec, RelativePose::identity());
  RansacConfig cfg;
  cfg.max_range = 20.0;
  const auto pts = ransac_candidates(view.depth, spec.camera, cfg);
  REQUIRE(pts.size() > 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    REQUIRE(pts.z[i] <= 20.0 + 1e-9);
  }
  CHECK(count_inliers(pts, {0, -1, 0}, 1.65, 0.01) == pts.size());
  CHECK(count_inliers(pts, {0, -1, 0}, 1.0, 0.01) == 0);
}
