#include <benchmark/benchmark.h>

#include "relief/differential.hpp"
#include "relief/fusion.hpp"
#include "relief/integration.hpp"
#include "relief/metrics.hpp"
#include "relief/synthetic.hpp"

namespace {

using namespace relief;

void BM_ScreenedPoisson(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DepthMap truth = synthetic::relief_scene(n, n, 100.0);
  const DepthMap rough = synthetic::box_blur(truth, n / 64 + 1);
  const GradientField g = depth_to_gradient(truth, DiffScheme::forward);
  for (auto _ : state) {
    auto r = screened_poisson(g, rough, SolverConfig{});
    benchmark::DoNotOptimize(r.report.energy);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_ScreenedPoisson)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_IntegrateNormals(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DepthMap truth = synthetic::relief_scene(n, n, 100.0);
  const NormalMap normals = depth_to_normal(truth, DiffScheme::forward);
  for (auto _ : state) {
    auto r = integrate_normals(normals, truth, SolverConfig{});
    benchmark::DoNotOptimize(r.report.energy);
  }
}
BENCHMARK(BM_IntegrateNormals)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DepthToNormal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DepthMap d = synthetic::relief_scene(n, n, 100.0);
  for (auto _ : state) {
    auto normals = depth_to_normal(d);
    benchmark::DoNotOptimize(normals.vectors().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_DepthToNormal)->Arg(512)->Arg(1024);

void BM_Ssim(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normalize_depth_255(synthetic::relief_scene(n, n, 100.0));
  const auto b = normalize_depth_255(synthetic::box_blur(synthetic::relief_scene(n, n, 100.0), 2));
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Ssim)->Arg(256)->Arg(1024);

void BM_SoftFuse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto base = encode_normals(depth_to_normal(synthetic::relief_scene(n, n, 100.0)));
  const auto detail = encode_normals(depth_to_normal(synthetic::gaussian_bump(n, n, 20.0, n / 8.0)));
  for (auto _ : state) {
    auto out = soft_fuse(base, detail);
    benchmark::DoNotOptimize(out.channels().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_SoftFuse)->Arg(1024);

void BM_GlobalScale(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DepthMap rel = synthetic::relief_scene(n, n, 1.0);
  Grid<double> metric = rel.values();
  for (auto& v : metric.data()) v *= 42.0;
  const NormalMap target = depth_to_normal(DepthMap(metric));
  for (auto _ : state) benchmark::DoNotOptimize(global_scale(rel, target).scale);
}
BENCHMARK(BM_GlobalScale)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
