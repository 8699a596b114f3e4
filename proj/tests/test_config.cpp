#include <doctest.h>

#include <string>

#include "gfm/config.hpp"

using namespace gfm;

namespace {

const char* kRun = R"(# run configuration
[camera]
fx = 371.2
fy = 368.64
cx = 320
cy = 96
width = 640
height = 192

[plane]
source = ransac
normal = 0, -1, 0
camera_height = 1.7
; metres

[ransac]
iterations = 500
seed = 9
refine = no

[eval]
near_cap = 40
median_scale = yes
)";

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("document grammar") {
  const auto doc = ConfigDocument::parse("top = 1\n[a]\nx = 1, 2, 3\n\n[b]\ny = hello world  \n[a]\nz = 2\n");
  REQUIRE(doc.sections().size() == 4);
  CHECK(doc.sections()[0].name.empty());
  CHECK(doc.section("a")->vector("x", Vec3::Zero()) == Vec3(1, 2, 3));
  CHECK(doc.section("b")->text("y", "") == "hello world");
  CHECK(doc.sections()[3].integer("z", 0) == 2);
  CHECK(doc.section("missing") == nullptr);

  const auto again = ConfigDocument::parse(doc.serialize());
  CHECK(again.serialize() == doc.serialize());
  CHECK(again.hash() == doc.hash());

  CHECK(kind_of([] { ConfigDocument::parse("[broken\n"); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { ConfigDocument::parse("no equals sign\n"); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { ConfigDocument::parse(" = 3\n"); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { ConfigDocument::parse("[a]\nx = abc\n").section("a")->number("x", 0); }) ==
        ErrorKind::FormatError);
  CHECK(kind_of([] { ConfigDocument::parse("[a]\nx = 1, 2\n").section("a")->vector("x", Vec3::Zero()); }) ==
        ErrorKind::FormatError);
  CHECK(kind_of([] { ConfigDocument::parse("[a]\nx = maybe\n").section("a")->flag("x", false); }) ==
        ErrorKind::FormatError);
}

TEST_CASE("run configuration") {
  const auto cfg = parse_run_config(ConfigDocument::parse(kRun));
  CHECK(cfg.camera.fx == 371.2);
  CHECK(cfg.camera.width == 640);
  CHECK(cfg.plane_source == PlaneSource::Ransac);
  CHECK(cfg.camera_height == 1.7);
  CHECK(cfg.ransac.iterations == 500);
  CHECK(cfg.ransac.seed == 9);
  CHECK_FALSE(cfg.ransac.refine);
  CHECK(cfg.eval.near_cap.value() == 40.0);
  CHECK(cfg.eval.median_scale);
  CHECK(cfg.loss.lambda_norm == 0.1);

  // Comments and spacing do not change the hash; values do.
  const auto spaced = parse_run_config(ConfigDocument::parse(std::string("\n\n# extra\n") + kRun));
  CHECK(spaced.hash == cfg.hash);
  std::string changed = kRun;
  changed.replace(changed.find("500"), 3, "501");
  CHECK(parse_run_config(ConfigDocument::parse(changed)).hash != cfg.hash);

  std::string unknown_key = kRun;
  unknown_key += "[loss]\nlambda_nrom = 0.2\n";
  CHECK(kind_of([&] { parse_run_config(ConfigDocument::parse(unknown_key)); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { parse_run_config(ConfigDocument::parse(std::string(kRun) + "[extra]\n")); }) ==
        ErrorKind::FormatError);
  CHECK(kind_of([] { parse_run_config(ConfigDocument::parse("[plane]\nsource = fixed\n")); }) ==
        ErrorKind::FormatError);
  std::string bad_source = kRun;
  bad_source.replace(bad_source.find("ransac\n"), 6, "magic");
  CHECK(kind_of([&] { parse_run_config(ConfigDocument::parse(bad_source)); }) == ErrorKind::FormatError);
}

TEST_CASE("pose and plane round trips") {
  const auto pose = RelativePose::from_axis_angle({0.011, -0.02, 0.0031}, {0.1, -0.05, -0.93});
  const auto back = parse_pose(ConfigDocument::parse(serialize_pose(pose)));
  CHECK((back.rotation() - pose.rotation()).norm() < 1e-15);
  CHECK(back.translation() == pose.translation());

  const auto aa = parse_pose(ConfigDocument::parse("[pose]\nrotation = 0, 0, 0\ntranslation = 0, 0, -1\n"));
  CHECK(aa.rotation() == Mat3::Identity());
  CHECK(kind_of([] { parse_pose(ConfigDocument::parse("[pose]\nrotation = 1, 2\ntranslation = 0, 0, 1\n")); }) ==
        ErrorKind::FormatError);
  CHECK(kind_of([] { parse_pose(ConfigDocument::parse("[other]\n")); }) == ErrorKind::FormatError);

  const PlaneModel plane(normalized(Vec3(0.01, -1, 0.02)), 1.63);
  const auto pb = parse_plane(ConfigDocument::parse(serialize_plane(plane)));
  CHECK((pb.normal() - plane.normal()).norm() < 1e-15);
  CHECK(pb.camera_height() == plane.camera_height());
}

TEST_CASE("scene round trip") {
  synth::SceneSpec spec;
  spec.camera = synth::default_camera();
  spec.plane = PlaneModel(normalized(Vec3(0.0, -1.0, 0.01)), 1.55);
  spec.primitives = {synth::Box{1.0, 12.0, 1.5, 2.0, 2.5}, synth::GaussianBump{-0.5, 6.0, 0.12, 0.4},
                     synth::Ramp{20.0, 3.0, 6.0}};
  spec.texture.seed = 77;
  spec.source_pose = RelativePose::from_axis_angle({0, 0.01, 0}, {0, 0, -0.7});
  const auto text = serialize_scene(spec);
  const auto back = parse_scene(ConfigDocument::parse(text));
  CHECK(serialize_scene(back) == text);
  REQUIRE(back.primitives.size() == 3);
  CHECK(std::holds_alternative<synth::Box>(back.primitives[0]));
  CHECK(std::holds_alternative<synth::GaussianBump>(back.primitives[1]));
  CHECK(std::get<synth::Ramp>(back.primitives[2]).slope_deg == 3.0);
  CHECK(back.texture.seed == 77);

  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
