#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gfm/core.hpp"
#include "gfm/gamma_map.hpp"
#include "gfm/losses.hpp"
#include "gfm/metrics.hpp"
#include "gfm/planefit.hpp"
#include "gfm/synth.hpp"

// Text configuration. Grammar, one construct per line:
//
//   # comment            (also ';'), blank lines ignored
//   [section]            sections may repeat; order is preserved
//   key = value          value runs to end of line, surrounding blanks trimmed
//
// Keys before the first header belong to the unnamed section "". Vectors
// are comma-separated ("0, -1, 0"); booleans are true/false/1/0/yes/no.

namespace gfm {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  Vec3 vector(const std::string& key, const Vec3& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }
  // FormatError naming the first key not in `allowed`.
  void restrict_keys(const std::vector<std::string>& allowed) const;
};

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& source = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  const std::vector<ConfigSection>& sections() const { return sections_; }
  // First section with this name, or nullptr.
  const ConfigSection* section(const std::string& name) const;
  // First section with this name, created at the end when missing.
  ConfigSection& section_mut(const std::string& name);
  ConfigSection& append(const std::string& name);

  // Canonical text; parse(serialize()) reproduces the document.
  std::string serialize() const;
  std::uint64_t hash() const;

 private:
  std::string source_;
  std::vector<ConfigSection> sections_;
};

enum class PlaneSource { Fixed, Ransac, File };

struct RunConfig {
  CameraIntrinsics camera;
  PlaneSource plane_source = PlaneSource::Fixed;
  Vec3 plane_normal{0.0, -1.0, 0.0};
  double camera_height = 1.65;
  std::string plane_file;
  Vec3 n_ref{0.0, -1.0, 0.0};
  GammaRange gamma_range;
  EvalConfig eval;
  RansacConfig ransac;
  RoadMaskConfig road_mask;
  LossWeights loss;
  std::string output_dir = ".";
  std::uint64_t hash = 0;  // of the canonical config text

  void validate() const;
};

RunConfig parse_run_config(const ConfigDocument& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// [pose] rotation = 3 axis-angle radians or 9 row-major entries;
// translation = 3 metres. Maps target to source points.
RelativePose parse_pose(const ConfigDocument& doc);
RelativePose load_pose(const std::filesystem::path& path);
std::string serialize_pose(const RelativePose& pose);

// [plane] normal = ...; camera_height = ...
PlaneModel parse_plane(const ConfigDocument& doc);
PlaneModel load_plane(const std::filesystem::path& path);
std::string serialize_plane(const PlaneModel& plane);

// [camera], [plane], [texture], [scene], [source_pose] plus one [bump],
// [box] or [ramp] section per primitive in file order.
synth::SceneSpec parse_scene(const ConfigDocument& doc);
std::string serialize_scene(const synth::SceneSpec& spec);

std::string format_number(double v);

}  // namespace gfm
