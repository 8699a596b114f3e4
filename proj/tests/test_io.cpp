#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "gfm/io.hpp"
#include "gfm/random.hpp"

using namespace gfm;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("gfm_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

ScalarField random_field(int w, int h, std::uint64_t seed, FieldRole role) {
  std::mt19937_64 rng(seed);
  ScalarField f(w, h, role);
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, static_cast<float>(uniform_real(rng, 0.5, 90.0)));
  return f;
}

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

TEST_CASE("pfm round trip") {
  Scratch s;
  auto f = random_field(17, 9, 1, FieldRole::Depth);
  f.set(3, 4, 0.0f);
  io::write_pfm(f, s.dir / "a.pfm");
  const auto back = io::read_pfm(s.dir / "a.pfm", FieldRole::Depth);
  CHECK(back == f);
  CHECK_FALSE(back.valid(3, 4));

  // Bit-level equality, including negative gamma values.
  ScalarField g(5, 3, FieldRole::Gamma);
  for (std::size_t i = 0; i < g.size(); ++i) g.set(i, -0.1f + 0.0371f * static_cast<float>(i));
  const auto bytes = io::encode_pfm(g);
  CHECK(bytes.rfind("Pf\n5 3\n-1", 0) == 0);
  const auto dg = io::decode_pfm(bytes, FieldRole::Gamma);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::uint32_t a, b;
    std::memcpy(&a, &g.values()[i], 4);
    std::memcpy(&b, &dg.values()[i], 4);
    REQUIRE(a == b);
  }
}

TEST_CASE("pfm malformed input") {
  try {
    io::decode_pfm("PF\n2 2\n-1\n");
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatError);
    CHECK(std::string(e.what()).find("at byte") != std::string::npos);
  }
  CHECK(kind_of([] { io::decode_pfm("Pf\n2 2\n-1\n" + std::string(8, '\0')); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { io::decode_pfm("Pf\n1 1\n-1\n" + std::string(5, '\0')); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { io::read_pfm("/nonexistent/x.pfm"); }) == ErrorKind::IoError);
}

TEST_CASE("depth png") {
  Scratch s;
  ScalarField d(3, 2, FieldRole::Depth);
  d.set(0, 0, 422.0f / 256.0f);
  d.set(1, 0, 80.0f);
  d.set(2, 0, 1e-4f);  // quantizes below one step but stays valid
  io::write_depth_png(d, s.dir / "d.png");
  const auto back = io::read_depth_png(s.dir / "d.png");
  CHECK(back.role() == FieldRole::Depth);
  CHECK(back.at(0, 0) == 1.6484375f);
  CHECK(back.at(1, 0) == 80.0f);
  CHECK(back.valid(2, 0));
  CHECK(back.at(2, 0) == 1.0f / 256.0f);
  CHECK_FALSE(back.valid(0, 1));

  ScalarField far(1, 1, FieldRole::Depth);
  far.set(0, 0, 300.0f);
  CHECK(kind_of([&] { io::write_depth_png(far, s.dir / "far.png"); }) == ErrorKind::InvalidDepth);

  RgbImage img(4, 2);
  img.set(1, 1, 0.2f, 0.4f, 1.0f);
  io::write_image(img, s.dir / "rgb.png");
  CHECK(kind_of([&] { io::read_depth_png(s.dir / "rgb.png"); }) == ErrorKind::FormatError);
}

TEST_CASE("rgb image round trip") {
  Scratch s;
  RgbImage img(6, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) img.set(x, y, x / 5.0f, y / 4.0f, 0.5f);
  }
  for (const char* name : {"a.png", "b.ppm"}) {
    io::write_image(img, s.dir / name);
    const auto back = io::read_image(s.dir / name);
    REQUIRE(back.same_shape(img));
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 6; ++x) {
        for (int c = 0; c < 3; ++c) REQUIRE(std::abs(back.at(x, y, c) - img.at(x, y, c)) <= 0.5f / 255.0f + 1e-6f);
      }
    }
  }
  io::write_image(img, s.dir / "c.png", 16);
  const auto deep = io::read_image(s.dir / "c.png");
  CHECK(std::abs(deep.at(5, 4, 0) - 1.0f) < 1e-6f);
  CHECK(std::abs(deep.at(1, 1, 1) - 0.25f) <= 0.5f / 65535.0f + 1e-6f);
}

TEST_CASE("ply") {
  PointCloud empty;
  CHECK(io::decode_ply(io::encode_ply(empty)).size() == 0);
  CHECK(io::encode_ply(empty).find("element vertex 0") != std::string::npos);

  PointCloud three;
  three.points = {{0.1, -2.5, 7.0}, {1e-7, 3.25, 80.125}, {-0.3333333333333333, 0.0, 1.0}};
  const auto back = io::decode_ply(io::encode_ply(three));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.points[i] == three.points[i]);
  CHECK_FALSE(back.has_color());

  PointCloud coloured = three;
  coloured.colors = {{255, 0, 0}, {0, 128, 0}, {1, 2, 3}};
  const auto cb = io::decode_ply(io::encode_ply(coloured));
  REQUIRE(cb.has_color());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cb.colors[i].r == coloured.colors[i].r);
    CHECK(cb.colors[i].g == coloured.colors[i].g);
    CHECK(cb.colors[i].b == coloured.colors[i].b);
  }

  CHECK(kind_of([] { io::decode_ply("ply\nformat binary_little_endian 1.0\nend_header\n"); }) ==
        ErrorKind::FormatError);
  PointCloud bad = three;
  bad.colors.resize(2);
  CHECK(kind_of([&] { io::encode_ply(bad); }) == ErrorKind::ShapeError);
}

TEST_CASE("atomic write and hashing") {
  Scratch s;
  io::write_file_atomic(s.dir / "x.txt", "hello");
  CHECK(io::read_file(s.dir / "x.txt") == "hello");
  io::write_file_atomic(s.dir / "x.txt", "again");
  CHECK(io::read_file(s.dir / "x.txt") == "again");
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
}
