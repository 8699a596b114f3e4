#include <benchmark/benchmark.h>

#include "gfm/gamma_map.hpp"
#include "gfm/losses.hpp"
#include "gfm/planefit.hpp"
#include "gfm/reference.hpp"
#include "gfm/synth.hpp"
#include "gfm/warp.hpp"

namespace {

struct Fixture {
  gfm::synth::SceneSpec spec;
  gfm::synth::RenderedView target, source;
  gfm::SamplingGrid grid;
  gfm::PlanePoints points;

  Fixture() {
    gfm::synth::RandomSceneOptions opt;
    spec = gfm::synth::random_scene(7, gfm::synth::default_camera(), opt);
    auto views = gfm::synth::render_pair(spec);
    target = std::move(views.first);
    source = std::move(views.second);
    grid = gfm::depth_reprojection_grid(target.depth, spec.source_pose, spec.camera);
    gfm::RansacConfig cfg;
    points = gfm::ransac_candidates(target.depth, spec.camera, cfg);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_DepthFromGamma_Parallel(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::depth_from_gamma(f.target.gamma, f.spec.plane, f.spec.camera));
}
void BM_DepthFromGamma_Serial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) {
    benchmark::DoNotOptimize(gfm::reference::depth_from_gamma(f.target.gamma, f.spec.plane, f.spec.camera));
  }
}

void BM_Bilinear_Parallel(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::bilinear_sample(f.source.image, f.grid));
}
void BM_Bilinear_Serial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::reference::bilinear_sample(f.source.image, f.grid));
}

void BM_Ssim_Parallel(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::ssim(f.target.image, f.source.image));
}
void BM_Ssim_Serial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::reference::ssim(f.target.image, f.source.image));
}

void BM_Normals_Parallel(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::local_normals(f.target.depth, f.spec.camera, 2));
}
void BM_Normals_Serial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::reference::local_normals(f.target.depth, f.spec.camera, 2));
}

void BM_InlierCount_Fast(benchmark::State& st) {
  const auto& f = fixture();
  const gfm::Vec3 n = f.spec.plane.normal();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::count_inliers(f.points, n, f.spec.plane.camera_height(), 0.01));
}
void BM_InlierCount_Serial(benchmark::State& st) {
  const auto& f = fixture();
  const gfm::Vec3 n = f.spec.plane.normal();
  for (auto _ : st) {
    benchmark::DoNotOptimize(gfm::reference::count_inliers(f.points, n, f.spec.plane.camera_height(), 0.01));
  }
}

void BM_Ransac(benchmark::State& st) {
  const auto& f = fixture();
  gfm::RansacConfig cfg;
  cfg.iterations = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(gfm::ransac_plane(f.points, cfg, gfm::Vec3(0, -1, 0)));
}

void BM_Render(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(gfm::synth::render_view(f.spec, gfm::RelativePose::identity()));
}

}  // namespace

BENCHMARK(BM_DepthFromGamma_Parallel);
BENCHMARK(BM_DepthFromGamma_Serial);
BENCHMARK(BM_Bilinear_Parallel);
BENCHMARK(BM_Bilinear_Serial);
BENCHMARK(BM_Ssim_Parallel);
BENCHMARK(BM_Ssim_Serial);
BENCHMARK(BM_Normals_Parallel);
BENCHMARK(BM_Normals_Serial);
BENCHMARK(BM_InlierCount_Fast);
BENCHMARK(BM_InlierCount_Serial);
BENCHMARK(BM_Ransac)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
