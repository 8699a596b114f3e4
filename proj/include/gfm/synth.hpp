#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gfm/core.hpp"

// Parametric road scenes rendered by per-pixel ray casting. Every field the
// renderer emits (depth, height, gamma, normals) is analytic at the pixel
// centre, which makes the renderer the reference for the geometric modules.
//
// Primitive placement uses road-plane coordinates: `a` to the right, `b`
// forward along the road, heights along the upward plane normal, all
// measured from the foot of the target camera.

namespace gfm::synth {

// Gaussian profile exp(-r^2 / 2 radius^2), shifted and rescaled so that it
// reaches exactly zero at 3 * radius and peaks at `height`.
struct GaussianBump {
  double a = 0.0;
  double b = 3.0;
  double height = 0.15;
  double radius = 0.5;
};

// Axis-aligned (in road coordinates) box standing on the road.
struct Box {
  double a = 0.0;
  double b = 3.0;      // centre of the footprint
  double width = 1.0;  // along a
  double length = 1.0; // along b
  double height = 2.0;
};

// Full-width incline: height rises at slope_deg from b = start over
// `length` metres, then stays level.
struct Ramp {
  double start = 10.0;
  double slope_deg = 5.0;
  double length = 5.0;
};

using Primitive = std::variant<GaussianBump, Box, Ramp>;

// Multi-octave value noise over the viewing direction from the target
// camera centre. Every 3D point gets one colour, so both views agree, while
// the target image stays band-limited regardless of the geometry.
struct TextureSpec {
  std::uint64_t seed = 0;
  double angular_cell = 0.3;  // radians per noise cell at the coarsest octave
  int octaves = 3;
  double contrast = 0.35;
};

struct SceneSpec {
  CameraIntrinsics camera;
  PlaneModel plane{Vec3(0.0, -1.0, 0.0), 1.65};
  std::vector<Primitive> primitives;
  TextureSpec texture;
  RelativePose source_pose;
  double max_depth = 100.0;

  void validate() const;
};

inline constexpr std::int32_t kLabelSky = -1;
inline constexpr std::int32_t kLabelRoad = 0;
// Primitive i carries label i + 1.

struct RenderedView {
  RgbImage image;
  ScalarField depth;
  ScalarField gamma;
  ScalarField height;
  NormalField normals;  // view frame, unit length
  std::vector<std::int32_t> labels;

  std::int32_t label(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * image.width() + x];
  }
};

// Renders the scene from the camera related to the target by `pose`
// (P_view = R P_target + t).
RenderedView render_view(const SceneSpec& spec, const RelativePose& pose);
std::pair<RenderedView, RenderedView> render_pair(const SceneSpec& spec);

// Target pixels whose 3D point is seen unoccluded by the source camera and
// whose bilinear footprint there stays on the same surface.
ScalarField covisibility(const RenderedView& target, const RenderedView& source,
                         const RelativePose& pose, const CameraIntrinsics& K);

// The two-object worked example (tree and speed bump at 3 m).
struct FixtureObject {
  std::string name;
  double depth_gt, height_gt, gamma_gt;
  double depth_pred, height_pred, gamma_pred;
};

struct TreeBumpFixture {
  std::array<FixtureObject, 2> objects;
  // 2x1 fields, column 0 = tree, column 1 = bump.
  ScalarField depth_gt, height_gt, gamma_gt;
  ScalarField depth_pred, height_pred, gamma_pred;
};

TreeBumpFixture tree_bump_fixture();

struct RandomSceneOptions {
  int min_primitives = 0;
  int max_primitives = 3;
  bool bumps = true;
  bool boxes = true;
  bool ramps = true;
  bool tall_boxes_only = false;  // box tops above the camera stay hidden
  double max_tilt_deg = 2.0;
  double min_forward = 0.2;      // source forward motion range, metres
  double max_forward = 1.0;
  double max_yaw_deg = 1.0;
};

// Deterministic scene family used by the tests and the acceptance suite.
SceneSpec random_scene(std::uint64_t seed, const CameraIntrinsics& camera,
                       const RandomSceneOptions& options = {});

// KITTI-like 640x192 camera used by default fixtures.
CameraIntrinsics default_camera();

}  // namespace gfm::synth
