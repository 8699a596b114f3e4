#include "gfm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "gfm/config.hpp"
#include "gfm/core.hpp"
#include "gfm/gamma_map.hpp"
#include "gfm/io.hpp"
#include "gfm/losses.hpp"
#include "gfm/metrics.hpp"
#include "gfm/planefit.hpp"
#include "gfm/synth.hpp"
#include "gfm/warp.hpp"

namespace gfm::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string extension(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

ScalarField load_field(const fs::path& path, FieldRole role) {
  const std::string ext = extension(path);
  if (ext == ".pfm") return io::read_pfm(path, role);
  if (ext == ".png" && role == FieldRole::Depth) return io::read_depth_png(path);
  fail(ErrorKind::FormatError, path.string() + ": unsupported field format (use .pfm" +
                                   std::string(role == FieldRole::Depth ? " or .png)" : ")"));
}

void save_field(const ScalarField& f, const fs::path& path) {
  const std::string ext = extension(path);
  if (ext == ".pfm") return io::write_pfm(f, path);
  if (ext == ".png" && f.role() == FieldRole::Depth) return io::write_depth_png(f, path);
  fail(ErrorKind::UsageError, path.string() + ": output must be .pfm" +
                                  std::string(f.role() == FieldRole::Depth ? " or .png" : ""));
}

std::string file_hash(const fs::path& path) { return io::hex64(io::fnv1a(io::read_file(path))); }

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

// Plane from the config, or from an explicit plane file given on the command line.
PlaneModel configured_plane(const RunConfig& cfg, const std::string& override_file) {
  if (!override_file.empty()) return load_plane(override_file);
  switch (cfg.plane_source) {
    case PlaneSource::Fixed: return PlaneModel(cfg.plane_normal, cfg.camera_height);
    case PlaneSource::File: return load_plane(cfg.plane_file);
    case PlaneSource::Ransac: break;
  }
  fail(ErrorKind::UsageError, "this command needs a fixed plane or a plane file, not RANSAC");
}

void emit(std::ostream& out, const ordered_json& j) { out << j.dump(2) << "\n"; }

struct Options {
  std::string config, gamma, depth, out, height_out, plane_out, plane, source, pose, target, image;
  std::string pred, gt, gt_depth, kind = "depth", caps, scene, out_dir, fixture, valid_out, json_out;
  std::vector<std::string> sources, poses;
  std::optional<std::uint64_t> seed;
  bool median_scale = false, homography = false, no_automask = false, ransac = false;
  int bit_depth = 8;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.seed) cfg.ransac.seed = *o.seed;
  if (o.median_scale) cfg.eval.median_scale = true;
  return cfg;
}

int cmd_gamma2depth(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const PlaneModel plane = configured_plane(cfg, o.plane);
  const ScalarField gamma = load_field(o.gamma, FieldRole::Gamma);
  const ScalarField depth = depth_from_gamma(gamma, plane, cfg.camera);
  save_field(depth, o.out);
  if (!o.height_out.empty()) save_field(height_from_gamma(gamma, depth), o.height_out);
  ordered_json j;
  j["command"] = "gamma2depth";
  j["valid"] = depth.valid_count();
  j["invalid"] = depth.size() - depth.valid_count();
  j["plane"] = {{"normal", vec_json(plane.normal())}, {"camera_height", plane.camera_height()}};
  j["provenance"] = {{"gamma", file_hash(o.gamma)}, {"config", io::hex64(cfg.hash)}};
  emit(out, j);
  return kExitOk;
}

int cmd_depth2gamma(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const ScalarField depth = load_field(o.depth, FieldRole::Depth);
  ordered_json j;
  j["command"] = "depth2gamma";
  PlaneModel plane(cfg.plane_normal, cfg.camera_height);
  if (!o.plane.empty()) {
    plane = load_plane(o.plane);
  } else if (o.ransac || cfg.plane_source == PlaneSource::Ransac) {
    const FittedPlane fit = ransac_plane(depth, cfg.camera, cfg.ransac, cfg.n_ref);
    plane = fit.to_plane_model();
    j["inlier_count"] = fit.inlier_count;
    j["inlier_ratio"] = fit.inlier_ratio;
  } else {
    plane = configured_plane(cfg, "");
  }
  const ScalarField gamma = gamma_from_depth_plane(depth, plane, cfg.camera);
  save_field(gamma, o.out);
  if (!o.plane_out.empty()) io::write_file_atomic(o.plane_out, serialize_plane(plane));
  j["plane"] = {{"normal", vec_json(plane.normal())}, {"camera_height", plane.camera_height()}};
  j["valid"] = gamma.valid_count();
  j["provenance"] = {{"depth", file_hash(o.depth)}, {"config", io::hex64(cfg.hash)},
                     {"seed", cfg.ransac.seed}};
  emit(out, j);
  return kExitOk;
}

int cmd_fit_plane(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const ScalarField depth = load_field(o.depth, FieldRole::Depth);
  const FittedPlane fit = ransac_plane(depth, cfg.camera, cfg.ransac, cfg.n_ref);
  ordered_json j;
  j["normal"] = vec_json(fit.normal);
  j["offset"] = fit.offset;
  j["inlier_count"] = fit.inlier_count;
  j["inlier_ratio"] = fit.inlier_ratio;
  j["provenance"] = {{"depth", file_hash(o.depth)}, {"config", io::hex64(cfg.hash)},
                     {"seed", cfg.ransac.seed}};
  if (!o.plane_out.empty()) io::write_file_atomic(o.plane_out, serialize_plane(fit.to_plane_model()));
  emit(out, j);
  return kExitOk;
}

int cmd_warp(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const RgbImage source = io::read_image(o.source);
  if (source.width() != cfg.camera.width || source.height() != cfg.camera.height) {
    fail(ErrorKind::ShapeError, "source image size does not match the camera");
  }
  const int modes = (o.homography ? 1 : 0) + (o.depth.empty() ? 0 : 1) + (o.gamma.empty() ? 0 : 1);
  if (modes != 1) fail(ErrorKind::UsageError, "choose exactly one of --homography, --depth, --gamma");
  if (o.pose.empty()) fail(ErrorKind::UsageError, "warp needs --pose");
  const RelativePose pose = load_pose(o.pose);
  RgbImage result;
  std::string mode;
  if (o.homography) {
    mode = "homography";
    result = homography_warp(source, plane_homography(pose, configured_plane(cfg, o.plane), cfg.camera));
  } else if (!o.depth.empty()) {
    mode = "depth";
    result = bilinear_sample(source, depth_reprojection_grid(load_field(o.depth, FieldRole::Depth), pose, cfg.camera));
  } else {
    mode = "gamma";
    const PlaneModel plane = configured_plane(cfg, o.plane);
    const ScalarField gamma = load_field(o.gamma, FieldRole::Gamma);
    const RgbImage planar = homography_warp(source, plane_homography(pose, plane, cfg.camera));
    const Epipole e = epipole(cfg.camera, pose);
    result = flow_warp(planar, residual_flow(gamma, e.t_z, source_camera_height(plane, pose), e));
  }
  io::write_image(result, o.out, o.bit_depth);
  if (!o.valid_out.empty()) {
    ScalarField valid = ScalarField::filled(result.width(), result.height(), FieldRole::Mask, 0.0f);
    for (int y = 0; y < result.height(); ++y) {
      for (int x = 0; x < result.width(); ++x) valid.set(x, y, result.valid(x, y) ? 1.0f : 0.0f);
    }
    io::write_pfm(valid, o.valid_out);
  }
  ordered_json j;
  j["command"] = "warp";
  j["mode"] = mode;
  j["valid"] = result.valid_count();
  j["provenance"] = {{"source", file_hash(o.source)}, {"pose", file_hash(o.pose)}, {"config", io::hex64(cfg.hash)}};
  emit(out, j);
  return kExitOk;
}

std::vector<double> parse_caps(const std::string& text) {
  std::vector<double> caps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !(v > 0.0)) fail(ErrorKind::UsageError, "bad --caps entry '" + item + "'");
    caps.push_back(v);
  }
  return caps;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const bool depth_kind = o.kind == "depth";
  if (!depth_kind && o.kind != "gamma") fail(ErrorKind::UsageError, "--kind must be depth or gamma");
  const FieldRole role = depth_kind ? FieldRole::Depth : FieldRole::Gamma;
  const ScalarField pred = load_field(o.pred, role);
  const ScalarField gt = load_field(o.gt, role);
  std::optional<ScalarField> gt_depth;
  if (!o.gt_depth.empty()) gt_depth = load_field(o.gt_depth, FieldRole::Depth);
  std::vector<double> caps = o.caps.empty() ? std::vector<double>{cfg.eval.depth_cap} : parse_caps(o.caps);
  if (!std::is_sorted(caps.begin(), caps.end())) fail(ErrorKind::InvalidParameter, "--caps must be ascending");
  if (!depth_kind && !o.caps.empty() && !gt_depth) {
    fail(ErrorKind::UsageError, "gamma evaluation with --caps needs --gt-depth");
  }

  const std::string prov = "," + file_hash(o.pred) + "," + file_hash(o.gt) + "," + io::hex64(cfg.hash);
  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << (depth_kind ? depth_csv_header() : gamma_csv_header()) << "\n";
  for (double cap : caps) {
    EvalConfig ec = cfg.eval;
    ec.depth_cap = cap;
    ordered_json row;
    row["kind"] = o.kind;
    row["cap"] = cap;
    if (depth_kind) {
      std::optional<DepthMetrics> m;
      try {
        m = depth_metrics(pred, gt, ec);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyEvaluation || caps.size() == 1) throw;
      }
      if (!m) {
        csv << "depth," << num(cap) << ",0,,,,,,,,," << prov.substr(1) << "\n";
        row["count"] = 0;
      } else {
        csv << "depth," << num(cap) << "," << m->count << "," << num(m->abs_rel) << "," << num(m->sq_rel) << ","
            << num(m->rmse) << "," << num(m->rmse_log) << "," << num(m->delta1) << "," << num(m->delta2) << ","
            << num(m->delta3) << "," << num(m->scale_ratio) << prov << "\n";
        row["count"] = m->count;
        row["abs_rel"] = m->abs_rel;
        row["sq_rel"] = m->sq_rel;
        row["rmse"] = m->rmse;
        row["rmse_log"] = m->rmse_log;
        row["delta1"] = m->delta1;
        row["delta2"] = m->delta2;
        row["delta3"] = m->delta3;
        row["scale_ratio"] = m->scale_ratio;
      }
    } else {
      const GammaMetrics m = gamma_metrics(pred, gt, ec, gt_depth ? &*gt_depth : nullptr);
      csv << "gamma," << num(cap) << "," << m.count << "," << num(m.abs_diff) << "," << num(m.rmse) << ","
          << num(m.rmse_log) << "," << num(m.delta1) << "," << num(m.delta2) << "," << num(m.delta3) << ","
          << num(m.log_offset) << prov << "\n";
      row["count"] = m.count;
      row["abs_diff"] = m.abs_diff;
      row["rmse"] = m.rmse;
      row["rmse_log"] = m.rmse_log;
      row["delta1"] = m.delta1;
      row["delta2"] = m.delta2;
      row["delta3"] = m.delta3;
      row["log_offset"] = m.log_offset;
    }
    row["provenance"] = {{"pred", file_hash(o.pred)}, {"gt", file_hash(o.gt)}, {"config", io::hex64(cfg.hash)}};
    rows.push_back(row);
  }
  out << csv.str();
  if (!o.out.empty()) io::write_file_atomic(o.out, csv.str());
  if (!o.json_out.empty()) io::write_file_atomic(o.json_out, rows.dump(2) + "\n");
  return kExitOk;
}

int cmd_loss(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  if (o.sources.empty() || o.sources.size() != o.poses.size()) {
    fail(ErrorKind::UsageError, "loss needs one --pose per --source");
  }
  LossInputs in;
  in.target = io::read_image(o.target);
  for (const auto& s : o.sources) in.sources.push_back(io::read_image(s));
  for (const auto& p : o.poses) in.poses.push_back(load_pose(p));
  in.gamma = load_field(o.gamma, FieldRole::Gamma);
  in.plane = configured_plane(cfg, o.plane);
  in.n_ref = cfg.n_ref;
  in.camera = cfg.camera;
  in.weights = cfg.loss;
  in.road_mask = cfg.road_mask;
  in.automask = !o.no_automask;
  const LossReport r = evaluate_loss(in);
  ordered_json j;
  j["photo"] = r.photo;
  j["homo"] = r.homo;
  j["norm"] = r.norm;
  j["smooth"] = r.smooth;
  j["total"] = r.total;
  j["weights"] = {{"alpha_ssim", cfg.loss.alpha_ssim}, {"lambda_norm", cfg.loss.lambda_norm},
                  {"lambda_smooth", cfg.loss.lambda_smooth}, {"theta_thres_deg", cfg.loss.theta_thres_deg}};
  j["provenance"] = {{"target", file_hash(o.target)}, {"gamma", file_hash(o.gamma)}, {"config", io::hex64(cfg.hash)}};
  emit(out, j);
  return kExitOk;
}

int cmd_pointcloud(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const ScalarField depth = load_field(o.depth, FieldRole::Depth);
  std::optional<RgbImage> image;
  if (!o.image.empty()) image = io::read_image(o.image);
  const PointCloud cloud = depth_to_pointcloud(depth, cfg.camera, image ? &*image : nullptr);
  io::write_ply(cloud, o.out);
  ordered_json j;
  j["command"] = "pointcloud";
  j["points"] = cloud.size();
  j["provenance"] = {{"depth", file_hash(o.depth)}, {"config", io::hex64(cfg.hash)}};
  emit(out, j);
  return kExitOk;
}

std::string run_config_text(const CameraIntrinsics& K, const PlaneModel& plane) {
  std::string s = "[camera]\nfx = " + format_number(K.fx) + "\nfy = " + format_number(K.fy) + "\ncx = " +
                  format_number(K.cx) + "\ncy = " + format_number(K.cy) + "\nwidth = " + std::to_string(K.width) +
                  "\nheight = " + std::to_string(K.height) + "\n";
  s += "[plane]\nsource = fixed\nnormal = " + format_number(plane.normal().x()) + ", " +
       format_number(plane.normal().y()) + ", " + format_number(plane.normal().z()) +
       "\ncamera_height = " + format_number(plane.camera_height()) + "\n";
  return s;
}

int cmd_gen_fixture(const Options& o, std::ostream& out) {
  if (o.fixture != "tree-bump") fail(ErrorKind::UsageError, "unknown fixture '" + o.fixture + "'");
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  const synth::TreeBumpFixture f = synth::tree_bump_fixture();
  io::write_pfm(f.depth_gt, dir / "depth_gt.pfm");
  io::write_pfm(f.height_gt, dir / "height_gt.pfm");
  io::write_pfm(f.gamma_gt, dir / "gamma_gt.pfm");
  io::write_pfm(f.depth_pred, dir / "depth_pred.pfm");
  io::write_pfm(f.height_pred, dir / "height_pred.pfm");
  io::write_pfm(f.gamma_pred, dir / "gamma_pred.pfm");
  io::write_file_atomic(dir / "run.cfg", run_config_text(CameraIntrinsics::make(1, 1, 0, 0, 2, 1),
                                                         PlaneModel(Vec3(0, -1, 0), 1.65)));
  ordered_json j;
  j["fixture"] = "tree-bump";
  ordered_json objs = ordered_json::array();
  for (const auto& ob : f.objects) {
    objs.push_back({{"name", ob.name},
                    {"abs_depth_error", std::abs(ob.depth_pred - ob.depth_gt)},
                    {"abs_gamma_error", std::abs(ob.gamma_pred - ob.gamma_gt)},
                    {"abs_height_error", std::abs(ob.height_pred - ob.height_gt)}});
  }
  j["objects"] = objs;
  emit(out, j);
  return kExitOk;
}

int cmd_gen_synthetic(const Options& o, std::ostream& out) {
  if (o.out_dir.empty()) fail(ErrorKind::UsageError, "gen-synthetic needs --out-dir");
  if (!o.fixture.empty()) return cmd_gen_fixture(o, out);
  if (o.scene.empty()) fail(ErrorKind::UsageError, "gen-synthetic needs --scene or --fixture");
  const synth::SceneSpec spec = parse_scene(ConfigDocument::load(o.scene));
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  const auto [target, source] = synth::render_pair(spec);
  io::write_image(target.image, dir / "target.png", 16);
  io::write_image(source.image, dir / "source.png", 16);
  io::write_pfm(target.depth, dir / "depth.pfm");
  io::write_pfm(target.gamma, dir / "gamma.pfm");
  io::write_pfm(target.height, dir / "height.pfm");
  io::write_pfm(source.depth, dir / "source_depth.pfm");
  ScalarField png_depth = target.depth;
  for (std::size_t i = 0; i < png_depth.size(); ++i) {
    if (png_depth.valid(i) && png_depth[i] * 256.0 > 65535.0) png_depth.invalidate(i);
  }
  io::write_depth_png(png_depth, dir / "depth.png");
  io::write_pfm(synth::covisibility(target, source, spec.source_pose, spec.camera), dir / "covisibility.pfm");
  io::write_file_atomic(dir / "pose.cfg", serialize_pose(spec.source_pose));
  io::write_file_atomic(dir / "plane.cfg", serialize_plane(spec.plane));
  io::write_file_atomic(dir / "run.cfg", run_config_text(spec.camera, spec.plane));
  io::write_file_atomic(dir / "scene.cfg", serialize_scene(spec));
  ordered_json j;
  j["command"] = "gen-synthetic";
  j["valid_depth"] = target.depth.valid_count();
  j["files"] = {"target.png", "source.png", "depth.pfm", "gamma.pfm", "height.pfm", "source_depth.pfm",
                "depth.png", "covisibility.pfm", "pose.cfg", "plane.cfg", "run.cfg", "scene.cfg"};
  j["provenance"] = {{"scene", file_hash(o.scene)}};
  emit(out, j);
  return kExitOk;
}

std::string kind_name(ErrorKind k) { return std::string(to_string(k)); }

}  // namespace

const char* depth_csv_header() {
  return "kind,cap,count,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,scale_ratio,pred_hash,gt_hash,"
         "config_hash";
}

const char* gamma_csv_header() {
  return "kind,cap,count,abs_diff,rmse,rmse_log,delta1,delta2,delta3,log_offset,pred_hash,gt_hash,config_hash";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UsageError:
    case ErrorKind::InvalidParameter:
      return kExitUsage;
    case ErrorKind::DegenerateTranslation:
    case ErrorKind::DegeneratePlane:
    case ErrorKind::DegenerateGeometry:
    case ErrorKind::DegenerateScale:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gamma/depth/height toolkit for road scenes", "gfm"};
  app.require_subcommand(1);
  Options o;

  auto seed_opt = [&](CLI::App* sc) {
    sc->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; },
                                           "RANSAC seed (default 0)");
  };

  auto* g2d = app.add_subcommand("gamma2depth", "Recover depth (and height) from gamma");
  g2d->add_option("--gamma", o.gamma, "gamma map (.pfm)")->required();
  g2d->add_option("--config", o.config, "run config")->required();
  g2d->add_option("--out", o.out, "depth output (.pfm or .png)")->required();
  g2d->add_option("--height-out", o.height_out, "height output (.pfm)");
  g2d->add_option("--plane", o.plane, "plane file overriding the config");

  auto* d2g = app.add_subcommand("depth2gamma", "Extract gamma from depth via a road plane");
  d2g->add_option("--depth", o.depth, "depth map (.pfm or .png)")->required();
  d2g->add_option("--config", o.config, "run config")->required();
  d2g->add_option("--out", o.out, "gamma output (.pfm)")->required();
  d2g->add_option("--plane-out", o.plane_out, "write the plane used");
  d2g->add_option("--plane", o.plane, "plane file overriding the config");
  d2g->add_flag("--ransac", o.ransac, "fit the plane with RANSAC whatever the config says");
  seed_opt(d2g);

  auto* fit = app.add_subcommand("fit-plane", "RANSAC road plane from depth");
  fit->add_option("--depth", o.depth, "depth map (.pfm or .png)")->required();
  fit->add_option("--config", o.config, "run config")->required();
  fit->add_option("--plane-out", o.plane_out, "write the fitted plane");
  seed_opt(fit);

  auto* warp = app.add_subcommand("warp", "Synthesize the target view from a source image");
  warp->add_option("--source", o.source, "source image")->required();
  warp->add_option("--config", o.config, "run config")->required();
  warp->add_option("--out", o.out, "output image (.png or .ppm)")->required();
  warp->add_option("--pose", o.pose, "target-to-source pose file");
  warp->add_flag("--homography", o.homography, "planar homography only");
  warp->add_option("--depth", o.depth, "target depth for reprojection");
  warp->add_option("--gamma", o.gamma, "target gamma for homography + residual flow");
  warp->add_option("--plane", o.plane, "plane file overriding the config");
  warp->add_option("--valid-out", o.valid_out, "validity mask output (.pfm)");
  warp->add_option("--bit-depth", o.bit_depth, "8 or 16")->check(CLI::IsMember({8, 16}));

  auto* ev = app.add_subcommand("evaluate", "Depth or gamma metrics as CSV");
  ev->add_option("--pred", o.pred, "prediction")->required();
  ev->add_option("--gt", o.gt, "ground truth")->required();
  ev->add_option("--config", o.config, "run config")->required();
  ev->add_option("--kind", o.kind, "depth or gamma")->check(CLI::IsMember({"depth", "gamma"}));
  ev->add_option("--caps", o.caps, "comma-separated depth caps, ascending");
  ev->add_option("--gt-depth", o.gt_depth, "ground-truth depth for capping gamma metrics");
  ev->add_flag("--median-scale", o.median_scale, "median-scale predictions first");
  ev->add_option("--out", o.out, "also write the CSV here");
  ev->add_option("--json-out", o.json_out, "also write JSON records here");

  auto* loss = app.add_subcommand("loss", "Evaluate the training objective");
  loss->add_option("--target", o.target, "target image")->required();
  loss->add_option("--source", o.sources, "source image (repeatable)")->required();
  loss->add_option("--pose", o.poses, "pose file per source (repeatable)")->required();
  loss->add_option("--gamma", o.gamma, "predicted gamma")->required();
  loss->add_option("--config", o.config, "run config")->required();
  loss->add_option("--plane", o.plane, "plane file overriding the config");
  loss->add_flag("--no-automask", o.no_automask, "disable identity auto-masking");

  auto* pc = app.add_subcommand("pointcloud", "Back-project depth to a PLY point cloud");
  pc->add_option("--depth", o.depth, "depth map")->required();
  pc->add_option("--image", o.image, "colour image");
  pc->add_option("--config", o.config, "run config")->required();
  pc->add_option("--out", o.out, "output .ply")->required();

  auto* gen = app.add_subcommand("gen-synthetic", "Render a synthetic scene or fixture");
  gen->add_option("--scene", o.scene, "scene config");
  gen->add_option("--fixture", o.fixture, "named fixture (tree-bump)");
  gen->add_option("--out-dir", o.out_dir, "output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    err << "error: UsageError: " << msg << "\n";
    return kExitUsage;
  }

  try {
    if (*g2d) return cmd_gamma2depth(o, out);
    if (*d2g) return cmd_depth2gamma(o, out);
    if (*fit) return cmd_fit_plane(o, out);
    if (*warp) return cmd_warp(o, out);
    if (*ev) return cmd_evaluate(o, out);
    if (*loss) return cmd_loss(o, out);
    if (*pc) return cmd_pointcloud(o, out);
    if (*gen) return cmd_gen_synthetic(o, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    err << "error: " << kind_name(e.kind()) << ": " << msg << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitData;
  }
  err << "error: UsageError: no subcommand\n";
  return kExitUsage;
}

}  // namespace gfm::cli
