#include <doctest.h>

#include <cmath>

#include "gfm/synth.hpp"

using namespace gfm;

namespace {

CameraIntrinsics cam100() { return CameraIntrinsics::make(100, 100, 320, 96, 640, 192); }

}  // namespace

TEST_CASE("flat road matches the closed form") {
  synth::SceneSpec spec;
  spec.camera = synth::default_camera();
  spec.plane = PlaneModel(normalized(Vec3(0.01, -1.0, -0.02)), 1.5);
  const auto v = synth::render_view(spec, RelativePose::identity());
  const Vec3 down = -spec.plane.normal();
  double worst = 0.0;
  std::size_t road = 0;
  for (int y = 0; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      const double denom = down.dot(spec.camera.ray(x, y));
      const double d = spec.plane.camera_height() / denom;
      const bool visible = denom > 0 && d <= spec.max_depth;
      if (!visible) {
        REQUIRE(v.label(x, y) == synth::kLabelSky);
        continue;
      }
      REQUIRE(v.label(x, y) == synth::kLabelRoad);
      REQUIRE(v.gamma.at(x, y) == 0.0f);
      // float32 storage: half an ulp of the stored depth
      worst = std::max(worst, std::abs(v.depth.at(x, y) - d) / d);
      ++road;
    }
  }
  CHECK(road > 10000);
  CHECK(worst <= 0x1.0p-24);
}

TEST_CASE("bump apex and box face") {
  const auto K = cam100();
  synth::SceneSpec bump;
  bump.camera = K;
  bump.primitives = {synth::GaussianBump{0.0, 3.0, 0.15, 0.5}};
  const auto bv = synth::render_view(bump, RelativePose::identity());
  // The apex (0, 1.5, 3) projects onto the pixel centre (320, 146).
  CHECK(bv.label(320, 146) == 1);
  CHECK(std::abs(bv.gamma.at(320, 146) - 0.050) < 1e-6);
  CHECK(std::abs(bv.depth.at(320, 146) - 3.0) < 1e-5);
  CHECK(std::abs(bv.height.at(320, 146) - 0.150) < 1e-6);

  synth::SceneSpec tree;
  tree.camera = K;
  tree.primitives = {synth::Box{0.0, 3.5, 1.0, 1.0, 2.0}};
  const auto tv = synth::render_view(tree, RelativePose::identity());
  std::size_t face = 0;
  float top = 0.0f;
  for (int y = 0; y < 192; ++y) {
    if (tv.label(320, y) != 1) continue;
    const double height = 1.65 - (y - 96) * 3.0 / 100.0;
    REQUIRE(std::abs(tv.depth.at(320, y) - 3.0) < 1e-5);
    REQUIRE(std::abs(tv.gamma.at(320, y) - height / 3.0) < 1e-6);
    top = std::max(top, tv.gamma.at(320, y));
    ++face;
  }
  CHECK(face > 50);
  // The top edge sits above the camera, so the face tops out just below 2/3.
  CHECK(top <= 2.0 / 3.0);
  CHECK(top > 0.66);
  CHECK(tv.normals.normals[146 * 640 + 320].z() == doctest::Approx(-1.0));
}

TEST_CASE("identity pose and determinism") {
  auto spec = synth::random_scene(11, synth::default_camera());
  const auto a = synth::render_view(spec, RelativePose::identity());
  spec.source_pose = RelativePose::identity();
  const auto [t, s] = synth::render_pair(spec);
  CHECK(a.image == s.image);
  CHECK(t.depth == s.depth);
  CHECK(t.labels == s.labels);

  const auto again = synth::render_view(synth::random_scene(11, synth::default_camera()), RelativePose::identity());
  CHECK(again.image == a.image);
  CHECK(again.gamma == a.gamma);

  const auto other = synth::random_scene(12, synth::default_camera());
  CHECK_FALSE(synth::render_view(other, RelativePose::identity()).image == a.image);
}

TEST_CASE("random scene options") {
  synth::RandomSceneOptions opt;
  opt.min_primitives = 2;
  opt.max_primitives = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = synth::random_scene(seed, synth::default_camera(), opt);
    CHECK(spec.primitives.size() == 2);
    const double fwd = -spec.source_pose.translation().z();
    CHECK(fwd >= opt.min_forward - 0.05);
  }
}

TEST_CASE("two-object fixture") {
  const auto fx = synth::tree_bump_fixture();
  CHECK(fx.objects[0].name == "tree");
  CHECK(fx.objects[1].name == "bump");
  for (int i = 0; i < 2; ++i) {
    const auto& o = fx.objects[static_cast<std::size_t>(i)];
    CHECK(std::abs(o.height_gt / o.depth_gt - fx.gamma_gt.at(i, 0)) < 5e-4);
    CHECK(std::abs(o.height_pred / o.depth_pred - fx.gamma_pred.at(i, 0)) < 5e-4);
  }
  CHECK(fx.gamma_gt.at(0, 0) == doctest::Approx(0.667).epsilon(1e-3));
  CHECK(std::abs(fx.gamma_gt.at(0, 0) - fx.gamma_pred.at(0, 0)) == doctest::Approx(0.038).epsilon(1e-2));
  CHECK(std::abs(fx.gamma_gt.at(1, 0) - fx.gamma_pred.at(1, 0)) == doctest::Approx(0.050).epsilon(1e-5));
  CHECK(std::abs(fx.depth_gt.at(0, 0) - fx.depth_pred.at(0, 0)) == doctest::Approx(0.50).epsilon(1e-6));
  CHECK(std::abs(fx.depth_gt.at(1, 0) - fx.depth_pred.at(1, 0)) == doctest::Approx(0.20).epsilon(1e-6));
}

TEST_CASE("covisibility") {
  const auto K = synth::default_camera();
  synth::SceneSpec spec;
  spec.camera = K;
  spec.primitives = {synth::Box{0.0, 10.0, 1.5, 1.0, 2.0}};
  spec.source_pose = RelativePose::from_axis_angle({0, 0, 0}, {-0.5, 0, -0.5});
  const auto [t, s] = synth::render_pair(spec);

  const auto self = synth::covisibility(t, t, RelativePose::identity(), K);
  std::size_t seen = 0, valid = 0, inner = 0, inner_seen = 0, unexplained = 0;
  for (int y = 0; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      if (!t.depth.valid(x, y)) {
        REQUIRE(self.at(x, y) == 0.0f);
        continue;
      }
      ++valid;
      seen += self.at(x, y) == 1.0f;
      // The bicubic footprint needs two pixels of margin and stays short of the range limit.
      if (x >= 2 && x < 638 && y >= 2 && y < 190 && t.depth.at(x, y) < 80.0f) {
        ++inner;
        inner_seen += self.at(x, y) == 1.0f;
        if (self.at(x, y) == 1.0f) continue;
        bool edge = false;
        for (int dy = -2; dy <= 2; ++dy) {
          for (int dx = -2; dx <= 2; ++dx) edge = edge || t.label(x + dx, y + dy) != t.label(x, y);
        }
        unexplained += !edge;
      }
    }
  }
  // Only silhouettes break the footprint test inside the image.
  CHECK(unexplained == 0);
  CHECK(static_cast<double>(inner_seen) / inner > 0.98);

  const auto m = synth::covisibility(t, s, spec.source_pose, K);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < m.size(); ++i) moved += m[i] == 1.0f;
  CHECK(moved < seen);
  CHECK(moved > valid / 2);
  // Road right behind the box's left edge is hidden from the shifted camera.
  std::size_t hidden = 0;
  for (int y = 0; y < 192; ++y) {
    for (int x = 0; x < 640; ++x) {
      if (t.label(x, y) == synth::kLabelRoad && m.at(x, y) == 0.0f && t.depth.at(x, y) > 10.5f &&
          t.depth.at(x, y) < 30.0f && std::abs(x - 320) < 60) {
        ++hidden;
      }
    }
  }
  CHECK(hidden > 0);
  CHECK_THROWS_AS(synth::covisibility(t, s, spec.source_pose, CameraIntrinsics::make(1, 1, 1, 1, 10, 10)), Error);
}
