#include <doctest.h>

#include <cmath>
#include <random>

#include "gfm/core.hpp"
#include "gfm/random.hpp"
#include "gfm/synth.hpp"

using namespace gfm;

namespace {

CameraIntrinsics cam100() { return CameraIntrinsics::make(100, 100, 320, 96, 640, 192); }

}  // namespace

TEST_CASE("backproject examples") {
  const auto K = cam100();
  CHECK((backproject({K.cx, K.cy}, 5.0, K) - Vec3(0, 0, 5)).norm() == doctest::Approx(0.0));
  CHECK((backproject({K.cx + K.fx, K.cy}, 2.0, K) - Vec3(2, 0, 2)).norm() == doctest::Approx(0.0));
  const Vec3 p = backproject({320, 146}, 3.3, K);
  CHECK(p.x() == doctest::Approx(0.0));
  CHECK(p.y() == doctest::Approx(1.65).epsilon(1e-12));
  CHECK(p.z() == doctest::Approx(3.3).epsilon(1e-12));
}

TEST_CASE("backproject rejects bad depth") {
  const auto K = cam100();
  for (double d : {0.0, -1.0, std::nan(""), HUGE_VAL}) {
    try {
      backproject({1, 1}, d, K);
      FAIL("expected InvalidDepth");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidDepth);
    }
  }
}

TEST_CASE("project examples and round trip") {
  const auto K = cam100();
  const Pixel c = project({0, 0, 5}, K);
  CHECK(c.u == doctest::Approx(K.cx));
  CHECK(c.v == doctest::Approx(K.cy));
  const Pixel q = project({2, 0, 2}, K);
  CHECK(q.u == doctest::Approx(420.0));
  CHECK(q.v == doctest::Approx(96.0));

  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pixel px{uniform_real(rng, 0, 639), uniform_real(rng, 0, 191)};
    const double d = uniform_real(rng, 0.1, 100);
    const Pixel back = project(backproject(px, d, K), K);
    worst = std::max({worst, std::abs(back.u - px.u), std::abs(back.v - px.v)});
  }
  CHECK(worst < 1e-9);

  CHECK_THROWS_AS(project({0, 0, 0}, K), Error);
  try {
    project({1, 1, -1}, K);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BehindCamera);
  }
}

TEST_CASE("point cloud from depth") {
  const auto K = CameraIntrinsics::make(50, 50, 10, 8, 20, 16);
  const auto ones = ScalarField::filled(20, 16, FieldRole::Depth, 1.0f);
  const PointCloud cloud = depth_to_pointcloud(ones, K);
  CHECK(cloud.size() == 320);
  for (const auto& p : cloud.points) CHECK(p.z() == 1.0);

  CHECK(depth_to_pointcloud(ScalarField(20, 16, FieldRole::Depth), K).size() == 0);
  CHECK_THROWS_AS(depth_to_pointcloud(ScalarField(20, 16, FieldRole::Gamma), K), Error);

  // Plane-only scene: every point satisfies n . P = -h_c.
  synth::SceneSpec spec;
  spec.camera = synth::default_camera();
  spec.plane = PlaneModel(normalized(Vec3(0.02, -1.0, 0.03)), 1.7);
  const auto view = synth::render_view(spec, RelativePose::identity());
  const PointCloud road = depth_to_pointcloud(view.depth, spec.camera, &view.image);
  REQUIRE(road.size() > 1000);
  CHECK(road.has_color());
  double worst = 0.0;
  for (const auto& p : road.points) worst = std::max(worst, std::abs(spec.plane.height_of(p)));
  // float32 depth storage at up to 100 m
  CHECK(worst < 1e-5 * 100);
}

TEST_CASE("projected gap") {
  CHECK(projected_gap(1.7, 0.6, 2.8) == doctest::Approx(0.364285714).epsilon(1e-9));
  CHECK(projected_gap(1.7, 1.2, 5.6) == doctest::Approx(projected_gap(1.7, 0.6, 2.8)).epsilon(1e-15));
  CHECK(projected_gap(1.7, 0.0, 2.8) == 0.0);
  CHECK_THROWS_AS(projected_gap(1.7, 1.0, 0.0), Error);
}

TEST_CASE("relative pose algebra") {
  const auto a = RelativePose::from_axis_angle({0.01, -0.02, 0.03}, {0.1, 0.0, -0.8});
  const auto b = RelativePose::from_axis_angle({-0.05, 0.0, 0.02}, {0.3, 0.2, 0.1});
  const Vec3 p(1.0, -2.0, 7.0);
  CHECK(((a * b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
  CHECK((a.inverse().apply(a.apply(p)) - p).norm() < 1e-12);
  CHECK((a.apply(a.source_center())).norm() < 1e-12);
  CHECK_THROWS_AS(RelativePose(Mat3::Identity() * 2.0, Vec3::Zero()), Error);
}

TEST_CASE("scalar field validity rules") {
  ScalarField d(3, 2, FieldRole::Depth);
  CHECK(d.valid_count() == 0);
  d.set(0, 0, 2.0f);
  d.set(1, 0, -1.0f);
  d.set(2, 0, NAN);
  CHECK(d.valid(0, 0));
  CHECK_FALSE(d.valid(1, 0));
  CHECK_FALSE(d.valid(2, 0));
  CHECK(d.at(1, 0) == 0.0f);

  ScalarField m(2, 1, FieldRole::Mask);
  CHECK_THROWS_AS(m.set(0, 0, 1.5f), Error);

  ScalarField g(2, 1, FieldRole::Gamma);
  g.set(0, 0, -0.05f);
  CHECK(g.valid(0, 0));
}

TEST_CASE("normalized and angle") {
  CHECK(normalized(Vec3(0, 3, 4)).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(normalized(Vec3::Zero()), Error);
  CHECK(angle_between(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(M_PI / 2));
  CHECK(angle_between(Vec3::UnitX(), Vec3(1 + 1e-12, 0, 0)) == 0.0);
}
