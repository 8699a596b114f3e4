#include "gfm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gfm/io.hpp"

namespace gfm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const ConfigSection& sec, const ConfigEntry& e, const std::string& why) {
  fail(ErrorKind::FormatError, "line " + std::to_string(e.line) + ": [" + sec.name + "] " + e.key + " = '" +
                                   e.value + "': " + why);
}

double parse_double(const ConfigSection& sec, const ConfigEntry& e, const std::string& s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(v)) bad_value(sec, e, "expected a finite number");
  return v;
}

std::string vec_text(const Vec3& v) {
  return format_number(v.x()) + ", " + format_number(v.y()) + ", " + format_number(v.z());
}

CameraIntrinsics parse_camera(const ConfigSection* cam) {
  if (!cam) fail(ErrorKind::FormatError, "missing [camera] section");
  cam->restrict_keys({"fx", "fy", "cx", "cy", "width", "height"});
  for (const char* k : {"fx", "fy", "cx", "cy", "width", "height"}) {
    if (!cam->has(k)) fail(ErrorKind::FormatError, std::string("[camera] lacks ") + k);
  }
  return CameraIntrinsics::make(cam->number("fx", 0), cam->number("fy", 0), cam->number("cx", 0),
                                cam->number("cy", 0), static_cast<int>(cam->integer("width", 0)),
                                static_cast<int>(cam->integer("height", 0)));
}

void read_trapezoid(const ConfigSection& s, Trapezoid& t) {
  t.top_y = s.number("roi_top_y", t.top_y);
  t.top_width = s.number("roi_top_width", t.top_width);
  t.bottom_width = s.number("roi_bottom_width", t.bottom_width);
  t.center_x = s.number("roi_center_x", t.center_x);
}

std::string camera_text(const CameraIntrinsics& K) {
  return "[camera]\nfx = " + format_number(K.fx) + "\nfy = " + format_number(K.fy) + "\ncx = " +
         format_number(K.cx) + "\ncy = " + format_number(K.cy) + "\nwidth = " + std::to_string(K.width) +
         "\nheight = " + std::to_string(K.height) + "\n";
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const ConfigEntry* ConfigSection::find(const std::string& key) const {
  const ConfigEntry* hit = nullptr;
  for (const auto& e : entries) {
    if (e.key == key) hit = &e;
  }
  return hit;
}

void ConfigSection::set(const std::string& key, const std::string& value) {
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back({key, value, 0});
}

std::string ConfigSection::text(const std::string& key, const std::string& fallback) const {
  const auto* e = find(key);
  return e ? e->value : fallback;
}

double ConfigSection::number(const std::string& key, double fallback) const {
  const auto* e = find(key);
  return e ? parse_double(*this, *e, e->value) : fallback;
}

long ConfigSection::integer(const std::string& key, long fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  char* end = nullptr;
  const long v = std::strtol(e->value.c_str(), &end, 10);
  if (e->value.empty() || *end != '\0') bad_value(*this, *e, "expected an integer");
  return v;
}

bool ConfigSection::flag(const std::string& key, bool fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(*this, *e, "expected true/false");
}

std::vector<double> ConfigSection::numbers(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return {};
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(*this, *e, item));
  return out;
}

Vec3 ConfigSection::vector(const std::string& key, const Vec3& fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  const auto v = numbers(key);
  if (v.size() != 3) bad_value(*this, *e, "expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

void ConfigSection::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const auto& e : entries) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      fail(ErrorKind::FormatError, "line " + std::to_string(e.line) + ": unknown key '" + e.key +
                                       "' in [" + name + "]");
    }
  }
}

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& source) {
  ConfigDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  ConfigSection* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail(ErrorKind::FormatError, source + ":" + std::to_string(line_no) + ": malformed section header");
      }
      current = &doc.append(trim(line.substr(1, line.size() - 2)));
      current->line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::FormatError, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorKind::FormatError, source + ":" + std::to_string(line_no) + ": empty key");
    if (!current) current = &doc.append("");
    current->entries.push_back({key, trim(line.substr(eq + 1)), line_no});
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

const ConfigSection* ConfigDocument::section(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConfigSection& ConfigDocument::section_mut(const std::string& name) {
  for (auto& s : sections_) {
    if (s.name == name) return s;
  }
  return append(name);
}

ConfigSection& ConfigDocument::append(const std::string& name) {
  sections_.push_back({name, 0, {}});
  return sections_.back();
}

std::string ConfigDocument::serialize() const {
  std::string out;
  for (const auto& s : sections_) {
    if (!s.name.empty() || &s != &sections_.front()) out += "[" + s.name + "]\n";
    for (const auto& e : s.entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

std::uint64_t ConfigDocument::hash() const { return io::fnv1a(serialize()); }

void RunConfig::validate() const {
  camera.validate();
  if (plane_source == PlaneSource::File && plane_file.empty()) {
    fail(ErrorKind::InvalidParameter, "plane source 'file' needs [plane] file");
  }
  if (plane_source == PlaneSource::Fixed) PlaneModel(plane_normal, camera_height);
  gamma_range.validate();
  eval.validate();
  ransac.validate();
  road_mask.validate();
  loss.validate();
}

RunConfig parse_run_config(const ConfigDocument& doc) {
  RunConfig cfg;
  for (const auto& s : doc.sections()) {
    static const std::vector<std::string> known = {"camera", "plane", "gamma", "eval", "ransac",
                                                   "road_mask", "loss", "output"};
    if (std::find(known.begin(), known.end(), s.name) == known.end()) {
      fail(ErrorKind::FormatError, doc.source() + ":" + std::to_string(s.line) + ": unknown section [" +
                                       s.name + "]");
    }
  }
  cfg.camera = parse_camera(doc.section("camera"));
  if (const auto* s = doc.section("plane")) {
    s->restrict_keys({"source", "normal", "camera_height", "file", "n_ref"});
    const std::string src = s->text("source", "fixed");
    if (src == "fixed") cfg.plane_source = PlaneSource::Fixed;
    else if (src == "ransac") cfg.plane_source = PlaneSource::Ransac;
    else if (src == "file") cfg.plane_source = PlaneSource::File;
    else fail(ErrorKind::FormatError, "[plane] source must be fixed, ransac or file");
    cfg.plane_normal = s->vector("normal", cfg.plane_normal);
    cfg.camera_height = s->number("camera_height", cfg.camera_height);
    cfg.plane_file = s->text("file", "");
    cfg.n_ref = s->vector("n_ref", cfg.n_ref);
  }
  if (const auto* s = doc.section("gamma")) {
    s->restrict_keys({"gamma_min", "gamma_max", "alpha"});
    cfg.gamma_range.gamma_min = s->number("gamma_min", cfg.gamma_range.gamma_min);
    cfg.gamma_range.gamma_max = s->number("gamma_max", cfg.gamma_range.gamma_max);
    cfg.gamma_range.alpha = s->number("alpha", cfg.gamma_range.alpha);
  }
  if (const auto* s = doc.section("eval")) {
    s->restrict_keys({"depth_cap", "near_cap", "median_scale", "gamma_abs_tol", "log_offset", "min_depth"});
    cfg.eval.depth_cap = s->number("depth_cap", cfg.eval.depth_cap);
    if (s->has("near_cap")) cfg.eval.near_cap = s->number("near_cap", 0.0);
    cfg.eval.median_scale = s->flag("median_scale", cfg.eval.median_scale);
    cfg.eval.gamma_abs_tol = s->number("gamma_abs_tol", cfg.eval.gamma_abs_tol);
    cfg.eval.log_offset = s->number("log_offset", cfg.eval.log_offset);
    cfg.eval.min_depth = s->number("min_depth", cfg.eval.min_depth);
  }
  if (const auto* s = doc.section("ransac")) {
    s->restrict_keys({"iterations", "inlier_threshold", "seed", "max_range", "refine", "roi_top_y",
                      "roi_top_width", "roi_bottom_width", "roi_center_x"});
    cfg.ransac.iterations = static_cast<int>(s->integer("iterations", cfg.ransac.iterations));
    cfg.ransac.inlier_threshold = s->number("inlier_threshold", cfg.ransac.inlier_threshold);
    cfg.ransac.seed = static_cast<std::uint64_t>(s->integer("seed", 0));
    cfg.ransac.max_range = s->number("max_range", cfg.ransac.max_range);
    cfg.ransac.refine = s->flag("refine", cfg.ransac.refine);
    read_trapezoid(*s, cfg.ransac.roi);
  }
  if (const auto* s = doc.section("road_mask")) {
    s->restrict_keys({"theta_tol_deg", "center_x", "center_y", "sigma_w", "sigma_h", "normal_offset",
                      "binarize", "roi_top_y", "roi_top_width", "roi_bottom_width", "roi_center_x"});
    auto& m = cfg.road_mask;
    m.theta_tol_deg = s->number("theta_tol_deg", m.theta_tol_deg);
    m.center_x = s->number("center_x", m.center_x);
    m.center_y = s->number("center_y", m.center_y);
    m.sigma_w = s->number("sigma_w", m.sigma_w);
    m.sigma_h = s->number("sigma_h", m.sigma_h);
    m.normal_offset = static_cast<int>(s->integer("normal_offset", m.normal_offset));
    m.binarize = s->flag("binarize", m.binarize);
    read_trapezoid(*s, m.roi);
  }
  if (const auto* s = doc.section("loss")) {
    s->restrict_keys({"alpha_ssim", "lambda_norm", "lambda_smooth", "theta_thres_deg"});
    cfg.loss.alpha_ssim = s->number("alpha_ssim", cfg.loss.alpha_ssim);
    cfg.loss.lambda_norm = s->number("lambda_norm", cfg.loss.lambda_norm);
    cfg.loss.lambda_smooth = s->number("lambda_smooth", cfg.loss.lambda_smooth);
    cfg.loss.theta_thres_deg = s->number("theta_thres_deg", cfg.loss.theta_thres_deg);
  }
  if (const auto* s = doc.section("output")) {
    s->restrict_keys({"dir"});
    cfg.output_dir = s->text("dir", cfg.output_dir);
  }
  cfg.hash = doc.hash();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(ConfigDocument::load(path));
}

RelativePose parse_pose(const ConfigDocument& doc) {
  const auto* s = doc.section("pose");
  if (!s) fail(ErrorKind::FormatError, doc.source() + ": missing [pose] section");
  s->restrict_keys({"rotation", "translation"});
  const Vec3 t = s->vector("translation", Vec3::Zero());
  const auto r = s->numbers("rotation");
  if (r.empty()) return RelativePose(Mat3::Identity(), t);
  if (r.size() == 3) return RelativePose::from_axis_angle(Vec3(r[0], r[1], r[2]), t);
  if (r.size() == 9) {
    Mat3 R;
    R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
    return RelativePose(R, t);
  }
  fail(ErrorKind::FormatError, doc.source() + ": [pose] rotation needs 3 or 9 numbers");
}

RelativePose load_pose(const std::filesystem::path& path) {
  return parse_pose(ConfigDocument::load(path));
}

std::string serialize_pose(const RelativePose& pose) {
  const Mat3& R = pose.rotation();
  std::string rot;
  for (int i = 0; i < 9; ++i) rot += (i ? ", " : "") + format_number(R(i / 3, i % 3));
  return "[pose]\nrotation = " + rot + "\ntranslation = " + vec_text(pose.translation()) + "\n";
}

PlaneModel parse_plane(const ConfigDocument& doc) {
  const auto* s = doc.section("plane");
  if (!s) fail(ErrorKind::FormatError, doc.source() + ": missing [plane] section");
  if (!s->has("normal") || !s->has("camera_height")) {
    fail(ErrorKind::FormatError, doc.source() + ": [plane] needs normal and camera_height");
  }
  return PlaneModel(s->vector("normal", Vec3::Zero()), s->number("camera_height", 0.0));
}

PlaneModel load_plane(const std::filesystem::path& path) {
  return parse_plane(ConfigDocument::load(path));
}

std::string serialize_plane(const PlaneModel& plane) {
  return "[plane]\nnormal = " + vec_text(plane.normal()) + "\ncamera_height = " +
         format_number(plane.camera_height()) + "\n";
}

synth::SceneSpec parse_scene(const ConfigDocument& doc) {
  synth::SceneSpec spec;
  spec.camera = parse_camera(doc.section("camera"));
  for (const auto& s : doc.sections()) {
    if (s.name == "camera") continue;
    if (s.name == "plane") {
      s.restrict_keys({"normal", "camera_height"});
      spec.plane = PlaneModel(s.vector("normal", spec.plane.normal()),
                              s.number("camera_height", spec.plane.camera_height()));
    } else if (s.name == "texture") {
      s.restrict_keys({"seed", "angular_cell", "octaves", "contrast"});
      spec.texture.seed = static_cast<std::uint64_t>(s.integer("seed", 0));
      spec.texture.angular_cell = s.number("angular_cell", spec.texture.angular_cell);
      spec.texture.octaves = static_cast<int>(s.integer("octaves", spec.texture.octaves));
      spec.texture.contrast = s.number("contrast", spec.texture.contrast);
    } else if (s.name == "scene") {
      s.restrict_keys({"max_depth"});
      spec.max_depth = s.number("max_depth", spec.max_depth);
    } else if (s.name == "source_pose" || s.name == "pose") {
      ConfigDocument one;
      auto& p = one.append("pose");
      p.entries = s.entries;
      spec.source_pose = parse_pose(one);
    } else if (s.name == "bump") {
      s.restrict_keys({"a", "b", "height", "radius"});
      synth::GaussianBump g;
      spec.primitives.push_back(synth::GaussianBump{s.number("a", g.a), s.number("b", g.b),
                                                    s.number("height", g.height), s.number("radius", g.radius)});
    } else if (s.name == "box") {
      s.restrict_keys({"a", "b", "width", "length", "height"});
      synth::Box b;
      spec.primitives.push_back(synth::Box{s.number("a", b.a), s.number("b", b.b), s.number("width", b.width),
                                           s.number("length", b.length), s.number("height", b.height)});
    } else if (s.name == "ramp") {
      s.restrict_keys({"start", "slope_deg", "length"});
      synth::Ramp r;
      spec.primitives.push_back(synth::Ramp{s.number("start", r.start), s.number("slope_deg", r.slope_deg),
                                            s.number("length", r.length)});
    } else {
      fail(ErrorKind::FormatError, doc.source() + ":" + std::to_string(s.line) + ": unknown section [" +
                                       s.name + "]");
    }
  }
  spec.validate();
  return spec;
}

std::string serialize_scene(const synth::SceneSpec& spec) {
  std::string out = camera_text(spec.camera);
  out += serialize_plane(spec.plane);
  out += "[texture]\nseed = " + std::to_string(spec.texture.seed) + "\nangular_cell = " +
         format_number(spec.texture.angular_cell) + "\noctaves = " + std::to_string(spec.texture.octaves) +
         "\ncontrast = " + format_number(spec.texture.contrast) + "\n";
  out += "[scene]\nmax_depth = " + format_number(spec.max_depth) + "\n";
  std::string pose = serialize_pose(spec.source_pose);
  out += "[source_pose]" + pose.substr(pose.find('\n'));
  for (const auto& p : spec.primitives) {
    if (const auto* g = std::get_if<synth::GaussianBump>(&p)) {
      out += "[bump]\na = " + format_number(g->a) + "\nb = " + format_number(g->b) + "\nheight = " +
             format_number(g->height) + "\nradius = " + format_number(g->radius) + "\n";
    } else if (const auto* b = std::get_if<synth::Box>(&p)) {
      out += "[box]\na = " + format_number(b->a) + "\nb = " + format_number(b->b) + "\nwidth = " +
             format_number(b->width) + "\nlength = " + format_number(b->length) + "\nheight = " +
             format_number(b->height) + "\n";
    } else if (const auto* r = std::get_if<synth::Ramp>(&p)) {
      out += "[ramp]\nstart = " + format_number(r->start) + "\nslope_deg = " + format_number(r->slope_deg) +
             "\nlength = " + format_number(r->length) + "\n";
    }
  }
  return out;
}

}  // namespace gfm
