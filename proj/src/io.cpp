#include "gfm/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace gfm::io {

namespace {

[[noreturn]] void format_error(const std::string& what, std::size_t offset) {
  fail(ErrorKind::FormatError, what + " at byte " + std::to_string(offset));
}

// Whitespace-separated header tokens with byte offsets for diagnostics.
struct HeaderReader {
  std::string_view bytes;
  std::size_t pos = 0;

  std::string token(const char* what) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) format_error(std::string("missing ") + what, start);
    return std::string(bytes.substr(start, pos - start));
  }

  long integer(const char* what, long lo, long hi) {
    const std::size_t at = pos;
    const std::string t = token(what);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0' || v < lo || v > hi) format_error(std::string("bad ") + what + " '" + t + "'", at);
    return v;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void end_of_header() {
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      format_error("header not terminated by whitespace", pos);
    }
    ++pos;
  }
};

std::string with_path(const fs::path& path, const std::string& msg) {
  return path.string() + ": " + msg;
}

template <class Fn>
auto annotate(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(e.kind(), with_path(path, e.what()));
  }
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

fs::path temp_sibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  return tmp;
}

struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3 after transforms
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;  // big-endian samples for 16-bit

  double sample(std::size_t i) const {
    if (bit_depth == 16) return (bytes[2 * i] << 8) | bytes[2 * i + 1];
    return bytes[i];
  }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

PngData read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::IoError, with_path(path, "cannot open for reading"));
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::IoError, "libpng initialisation failed");
  }
  PngData out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::FormatError, with_path(path, "malformed PNG"));
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.bytes.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const fs::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint8_t>& bytes) {
  const fs::path tmp = temp_sibling(path);
  {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(tmp.c_str(), "wb"));
    if (!file) fail(ErrorKind::IoError, with_path(path, "cannot open for writing"));
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      fail(ErrorKind::IoError, "libpng initialisation failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    for (int y = 0; y < height; ++y) {
      rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(bytes.data() + y * stride);
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(ErrorKind::IoError, with_path(path, "PNG encoding failed"));
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) fail(ErrorKind::IoError, with_path(path, "write failed"));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, with_path(path, "rename failed: " + ec.message()));
}

void put_sample(std::vector<std::uint8_t>& out, double v01, int bit_depth) {
  if (bit_depth == 16) {
    const auto q = static_cast<std::uint16_t>(std::lround(v01 * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  } else {
    out.push_back(static_cast<std::uint8_t>(std::lround(v01 * 255.0)));
  }
}

RgbImage decode_ppm(std::string_view bytes) {
  HeaderReader r{bytes};
  if (r.token("magic") != "P6") format_error("expected P6 magic", 0);
  const int w = static_cast<int>(r.integer("width", 1, 1 << 20));
  const int h = static_cast<int>(r.integer("height", 1, 1 << 20));
  const long maxval = r.integer("maxval", 1, 65535);
  r.end_of_header();
  const int bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3 * bytes_per;
  if (bytes.size() - r.pos < need) format_error("truncated pixel data", bytes.size());
  RgbImage img(w, h);
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + r.pos);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float c[3];
      for (int k = 0; k < 3; ++k) {
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3 + k;
        const double v = bytes_per == 2 ? ((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
        c[k] = static_cast<float>(std::min(v, static_cast<double>(maxval)) / maxval);
      }
      img.set(x, y, c[0], c[1], c[2]);
    }
  }
  return img;
}

}  // namespace

std::string encode_pfm(const ScalarField& field) {
  std::string out = "Pf\n" + std::to_string(field.width()) + " " + std::to_string(field.height()) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + field.size() * 4);
  char* dst = out.data() + header;
  for (int y = field.height() - 1; y >= 0; --y) {
    for (int x = 0; x < field.width(); ++x) {
      const float v = field.valid(x, y) ? field.at(x, y) : std::numeric_limits<float>::quiet_NaN();
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(dst, &bits, 4);
      dst += 4;
    }
  }
  return out;
}

ScalarField decode_pfm(std::string_view bytes, FieldRole role) {
  HeaderReader r{bytes};
  const std::string magic = r.token("magic");
  if (magic == "PF") format_error("colour PFM is not a scalar field", 0);
  if (magic != "Pf") format_error("expected Pf magic", 0);
  const int w = static_cast<int>(r.integer("width", 1, 1 << 20));
  const int h = static_cast<int>(r.integer("height", 1, 1 << 20));
  const std::size_t scale_at = r.pos;
  const std::string scale_tok = r.token("scale");
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (*end != '\0' || scale == 0.0 || !std::isfinite(scale)) format_error("bad scale '" + scale_tok + "'", scale_at);
  r.end_of_header();
  const bool little = scale < 0.0;
  const std::size_t need = static_cast<std::size_t>(w) * h * 4;
  if (bytes.size() - r.pos < need) format_error("truncated pixel data", bytes.size());
  if (bytes.size() - r.pos > need) format_error("trailing bytes after pixel data", r.pos + need);
  ScalarField field(w, h, role);
  const char* src = bytes.data() + r.pos;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t bits;
      std::memcpy(&bits, src, 4);
      src += 4;
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      const float v = std::bit_cast<float>(bits);
      if (std::isnan(v)) continue;
      if (role == FieldRole::Mask && !(v >= 0.0f && v <= 1.0f)) {
        format_error("mask value outside [0, 1]", static_cast<std::size_t>(src - bytes.data()) - 4);
      }
      field.set(x, y, v);
    }
  }
  return field;
}

ScalarField read_pfm(const fs::path& path, FieldRole role) {
  const std::string bytes = read_file(path);
  return annotate(path, [&] { return decode_pfm(bytes, role); });
}

void write_pfm(const ScalarField& field, const fs::path& path) {
  if (field.empty()) fail(ErrorKind::EmptyInput, "refusing to write an empty field");
  write_file_atomic(path, encode_pfm(field));
}

ScalarField read_depth_png(const fs::path& path) {
  const PngData png = read_png(path);
  if (png.channels != 1 || png.bit_depth != 16) {
    fail(ErrorKind::FormatError, with_path(path, "depth PNG must be 16-bit grayscale"));
  }
  ScalarField depth(png.width, png.height, FieldRole::Depth);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const double v = png.sample(static_cast<std::size_t>(y) * png.width + x);
      if (v > 0.0) depth.set(x, y, static_cast<float>(v / 256.0));
    }
  }
  return depth;
}

void write_depth_png(const ScalarField& depth, const fs::path& path) {
  if (depth.empty()) fail(ErrorKind::EmptyInput, "refusing to write an empty depth map");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(depth.size() * 2);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    long q = 0;
    if (depth.valid(i)) {
      if (depth[i] < 0.0f) fail(ErrorKind::InvalidDepth, "negative depth cannot be PNG-encoded");
      q = std::lround(static_cast<double>(depth[i]) * 256.0);
      if (q > 65535) fail(ErrorKind::InvalidDepth, "depth beyond 255.99 m cannot be PNG-encoded");
      q = std::max(q, 1L);
    }
    bytes.push_back(static_cast<std::uint8_t>(q >> 8));
    bytes.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  write_png(path, depth.width(), depth.height(), 1, 16, bytes);
}

RgbImage read_image(const fs::path& path) {
  const std::string head = [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, with_path(path, "cannot open for reading"));
    std::string h(8, '\0');
    in.read(h.data(), 8);
    h.resize(static_cast<std::size_t>(in.gcount()));
    return h;
  }();
  if (head.size() >= 2 && head[0] == 'P' && head[1] == '6') {
    const std::string bytes = read_file(path);
    return annotate(path, [&] { return decode_ppm(bytes); });
  }
  const PngData png = read_png(path);
  const double maxv = png.bit_depth == 16 ? 65535.0 : 255.0;
  RgbImage img(png.width, png.height);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
      float c[3];
      for (int k = 0; k < 3; ++k) c[k] = static_cast<float>(png.sample(base + (png.channels == 3 ? k : 0)) / maxv);
      img.set(x, y, c[0], c[1], c[2]);
    }
  }
  return img;
}

void write_image(const RgbImage& image, const fs::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) fail(ErrorKind::InvalidParameter, "bit depth must be 8 or 16");
  if (image.empty()) fail(ErrorKind::EmptyInput, "refusing to write an empty image");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<std::size_t>(image.width()) * image.height() * 3 * (bit_depth / 8));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) put_sample(bytes, image.at(x, y, c), bit_depth);
    }
  }
  if (lower_extension(path) == ".ppm") {
    std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n" +
                      (bit_depth == 16 ? "65535" : "255") + "\n";
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_file_atomic(path, out);
    return;
  }
  write_png(path, image.width(), image.height(), 3, bit_depth, bytes);
}

std::string encode_ply(const PointCloud& cloud) {
  if (cloud.has_color() && cloud.colors.size() != cloud.points.size()) {
    fail(ErrorKind::ShapeError, "colour count differs from point count");
  }
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_color()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (!p.allFinite()) fail(ErrorKind::InvalidParameter, "point cloud holds a non-finite point");
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x(), p.y(), p.z());
    out << buf;
    if (cloud.has_color()) {
      const Rgb8 c = cloud.colors[i];
      out << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b);
    }
    out << '\n';
  }
  return out.str();
}

void write_ply(const PointCloud& cloud, const fs::path& path) {
  write_file_atomic(path, encode_ply(cloud));
}

PointCloud decode_ply(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t offset = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != "ply") format_error("missing ply magic", 0);
  std::size_t count = 0;
  bool in_vertex = false, have_vertex = false;
  std::vector<std::string> props;
  for (;;) {
    const std::size_t at = offset;
    if (!next()) format_error("missing end_header", at);
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") format_error("only ascii PLY is supported", at);
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (!(ls >> count)) format_error("bad vertex count", at);
        have_vertex = true;
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (type == "list") format_error("list properties on vertices are not supported", at);
      props.push_back(name);
    }
  }
  if (!have_vertex) format_error("no vertex element", offset);
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    const int i = static_cast<int>(k);
    if (props[k] == "x") ix = i;
    if (props[k] == "y") iy = i;
    if (props[k] == "z") iz = i;
    if (props[k] == "red") ir = i;
    if (props[k] == "green") ig = i;
    if (props[k] == "blue") ib = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) format_error("vertex lacks x/y/z", offset);
  const bool color = ir >= 0 && ig >= 0 && ib >= 0;
  PointCloud cloud;
  cloud.points.reserve(count);
  std::vector<double> v(props.size());
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t at = offset;
    if (!next()) format_error("truncated vertex list", at);
    std::istringstream ls(line);
    for (auto& x : v) {
      if (!(ls >> x)) format_error("bad vertex line", at);
    }
    cloud.points.emplace_back(v[ix], v[iy], v[iz]);
    if (color) {
      cloud.colors.push_back({static_cast<std::uint8_t>(v[ir]), static_cast<std::uint8_t>(v[ig]),
                              static_cast<std::uint8_t>(v[ib])});
    }
  }
  return cloud;
}

PointCloud read_ply(const fs::path& path) {
  const std::string text = read_file(path);
  return annotate(path, [&] { return decode_ply(text); });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, with_path(path, "cannot open for reading"));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::IoError, with_path(path, "read failed"));
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, with_path(path, "cannot open for writing"));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      fail(ErrorKind::IoError, with_path(path, "write failed"));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, with_path(path, "rename failed: " + ec.message()));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace gfm::io
