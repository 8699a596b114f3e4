#include <doctest.h>

#include <cmath>
#include <random>

#include "gfm/random.hpp"
#include "gfm/synth.hpp"
#include "gfm/warp.hpp"

using namespace gfm;

namespace {

RgbImage ramp_image(int w, int h) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set(x, y, 0.01f * x, 0.02f * y, 0.5f);
  }
  return img;
}

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, static_cast<float>(uniform_real(rng, 0, 1)), static_cast<float>(uniform_real(rng, 0, 1)),
              static_cast<float>(uniform_real(rng, 0, 1)));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("homography identity and pure rotation") {
  const auto K = synth::default_camera();
  const PlaneModel plane({0, -1, 0}, 1.65);
  const auto I = plane_homography(RelativePose::identity(), plane, K);
  CHECK((I.matrix() - Mat3::Identity()).norm() < 1e-12);

  const auto rot = RelativePose::from_axis_angle({0.01, -0.02, 0.005}, Vec3::Zero());
  const auto H = plane_homography(rot, plane, K);
  Mat3 expect = K.matrix() * rot.rotation() * K.inverse();
  expect /= expect(2, 2);
  CHECK((H.matrix() - expect).norm() < 1e-9);

  CHECK_THROWS_AS(Homography(Mat3::Zero()), Error);
}

TEST_CASE("homography reprojects road points") {
  const auto K = synth::default_camera();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 n = normalized(Vec3(uniform_real(rng, -0.03, 0.03), -1.0, uniform_real(rng, -0.03, 0.03)));
    const PlaneModel plane(n, uniform_real(rng, 1.4, 1.9));
    const auto pose = RelativePose::from_axis_angle(
        {uniform_real(rng, -0.02, 0.02), uniform_real(rng, -0.02, 0.02), uniform_real(rng, -0.02, 0.02)},
        {uniform_real(rng, -0.2, 0.2), uniform_real(rng, -0.1, 0.1), uniform_real(rng, -1.0, -0.2)});
    const auto H = plane_homography(pose, plane, K);
    double worst = 0.0;
    for (int y = 110; y < 192; y += 9) {
      for (int x = 0; x < 640; x += 37) {
        // Intersect the pixel ray with the plane, then move the point.
        const Vec3 ray = K.ray(x, y);
        const double d = -plane.camera_height() / n.dot(ray);
        if (d <= 0) continue;
        const Vec3 ps = pose.apply(d * ray);
        if (ps.z() <= 0.1) continue;
        const Pixel expect = project(ps, K);
        const auto got = H.apply(x, y);
        REQUIRE(got.has_value());
        worst = std::max({worst, std::abs(got->u - expect.u), std::abs(got->v - expect.v)});
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("bilinear sampling") {
  const auto img = noise_image(32, 24, 1);
  CHECK(bilinear_sample(img, identity_grid(32, 24)) == img);

  SamplingGrid shift(32, 24, 32, 24);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) shift.set(x, y, x + 3, y - 2);
  }
  const auto moved = bilinear_sample(img, shift);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool inside = x + 3 < 32 && y - 2 >= 0;
      REQUIRE(moved.valid(x, y) == inside);
      if (inside) {
        for (int c = 0; c < 3; ++c) REQUIRE(moved.at(x, y, c) == img.at(x + 3, y - 2, c));
      } else {
        REQUIRE(moved.at(x, y, 0) == 0.0f);
      }
    }
  }

  // Half-pixel sample on a linear ramp is the average of its neighbours.
  const auto ramp = ramp_image(16, 8);
  SamplingGrid half(1, 1, 16, 8);
  half.set(0, 0, 4.5, 3.5);
  const auto s = bilinear_sample(ramp, half);
  CHECK(s.at(0, 0, 0) == doctest::Approx(0.045).epsilon(1e-6));
  CHECK(s.at(0, 0, 1) == doctest::Approx(0.07).epsilon(1e-6));

  // One invalid tap with non-zero weight invalidates the sample.
  RgbImage holes = ramp;
  holes.invalidate(5, 3);
  CHECK_FALSE(bilinear_sample(holes, half).valid(0, 0));
}

TEST_CASE("homography warp far outside the image") {
  const auto img = noise_image(40, 30, 2);
  Mat3 m = Mat3::Identity();
  m(0, 2) = 1000.0;
  const auto out = homography_warp(img, Homography(m));
  CHECK(out.valid_count() == 0);
  for (float v : out.data()) REQUIRE(v == 0.0f);
}

TEST_CASE("flow warp") {
  const auto img = noise_image(32, 24, 3);
  FlowField flow{ScalarField::filled(32, 24, FieldRole::FlowU, 2.0f),
                 ScalarField::filled(32, 24, FieldRole::FlowV, 0.0f)};
  const auto out = flow_warp(img, flow);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      REQUIRE(out.valid(x, y) == (x >= 2));
      if (x >= 2) REQUIRE(out.at(x, y, 1) == img.at(x - 2, y, 1));
    }
  }
}

TEST_CASE("depth reprojection") {
  const auto K = synth::default_camera();
  synth::SceneSpec spec;
  spec.camera = K;
  const auto view = synth::render_view(spec, RelativePose::identity());
  const auto id = depth_reprojection_grid(view.depth, RelativePose::identity(), K);
  for (int y = 0; y < 192; y += 5) {
    for (int x = 0; x < 640; x += 7) {
      if (!view.depth.valid(x, y)) continue;
      const auto i = id.index(x, y);
      REQUIRE(std::abs(id.u[i] - x) < 1e-9);
      REQUIRE(std::abs(id.v[i] - y) < 1e-9);
    }
  }

  // On the road the depth grid and the homography grid agree.
  const auto pose = RelativePose::from_axis_angle({0.0, 0.01, 0.0}, {0.05, 0.0, -0.8});
  const auto depth_grid = depth_reprojection_grid(view.depth, pose, K);
  const auto hgrid = homography_grid(plane_homography(pose, spec.plane, K), 640, 192, 640, 192);
  double worst = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      const auto i = depth_grid.index(x, y);
      if (!depth_grid.valid[i] || !hgrid.valid[i] || view.depth.at(x, y) > 50.0f) continue;
      worst = std::max({worst, std::abs(depth_grid.u[i] - hgrid.u[i]), std::abs(depth_grid.v[i] - hgrid.v[i])});
      ++n;
    }
  }
  CHECK(n > 10000);
  // float32 depth, relative 6e-8, projected over the near field
  CHECK(worst < 1e-4);
}

TEST_CASE("parallax decomposition") {
  const auto K = synth::default_camera();
  const auto pose = RelativePose::from_axis_angle({0.0, 0.005, 0.0}, {0.05, 0.0, -0.6});

  synth::SceneSpec flat;
  flat.camera = K;
  flat.source_pose = pose;
  const auto fv = synth::render_view(flat, RelativePose::identity());
  const auto planar = parallax_decomposition_check(fv.depth, fv.gamma, flat.plane, pose, K);
  CHECK(planar.compared > 10000);
  CHECK(planar.max_discrepancy < 1e-3);

  auto bump = flat;
  bump.primitives = {synth::GaussianBump{0.0, 8.0, 0.15, 0.5}, synth::Box{2.5, 14.0, 1.0, 1.0, 2.0}};
  const auto bv = synth::render_view(bump, RelativePose::identity());
  const auto r = parallax_decomposition_check(bv.depth, bv.gamma, bump.plane, pose, K);
  CHECK(r.compared > 10000);
  CHECK(static_cast<double>(r.within(0.01)) / r.compared > 0.999);

  try {
    parallax_decomposition_check(bv.depth, bv.gamma, bump.plane,
                                 RelativePose::from_axis_angle({0, 0, 0}, {0.3, 0, 0}), K);
    FAIL("expected DegenerateTranslation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateTranslation);
  }
}

TEST_CASE("homography warp aligns the road between views") {
  const auto K = synth::default_camera();
  synth::SceneSpec spec;
  spec.camera = K;
  spec.source_pose = RelativePose::from_axis_angle({0, 0, 0}, {0, 0, -0.5});
  const auto [tv, sv] = synth::render_pair(spec);
  const auto warped = homography_warp(sv.image, plane_homography(spec.source_pose, spec.plane, K));
  double err = 0.0;
  std::size_t n = 0;
  for (int y = 120; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      if (!warped.valid(x, y)) continue;
      for (int c = 0; c < 3; ++c) err += std::abs(warped.at(x, y, c) - tv.image.at(x, y, c));
      n += 3;
    }
  }
  REQUIRE(n > 0);
  CHECK(err / n < 0.02);
}
