#include <benchmark/benchmark.h>

#include <random>

#include "tomo/metrics.hpp"
#include "tomo/phantom.hpp"
#include "tomo/recon.hpp"
#include "tomo/sensitivity.hpp"

namespace {

const tomo::DiscMesh& mesh() {
  static const auto m = tomo::build_disc_mesh();
  return m;
}

const tomo::MeasurementProtocol& protocol() {
  static const auto p = tomo::MeasurementProtocol::adjacent(32);
  return p;
}

const tomo::SensitivityMatrix& sensitivity() {
  static const auto s = tomo::compute_sensitivity(mesh(), 1.0, protocol());
  return s;
}

void BM_Assemble(benchmark::State& state) {
  const auto field = tomo::ConductivityField::uniform(mesh().triangle_count(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(tomo::assemble_system(mesh(), field));
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMicrosecond);

void BM_SimulateFrame(benchmark::State& state) {
  const auto field = tomo::phantom_to_sigma(mesh(), tomo::sample_phantom(1));
  for (auto _ : state) benchmark::DoNotOptimize(tomo::simulate_frame(mesh(), field, protocol()));
}
BENCHMARK(BM_SimulateFrame)->Unit(benchmark::kMillisecond);

void BM_Sensitivity(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tomo::compute_sensitivity(mesh(), 1.0, protocol()));
}
BENCHMARK(BM_Sensitivity)->Unit(benchmark::kMillisecond);

tomo::NormalizedFrame sample_frame() {
  const auto ref = tomo::simulate_frame(mesh(), tomo::ConductivityField::uniform(mesh().triangle_count(), 1.0), protocol());
  const auto meas = tomo::simulate_frame(mesh(), tomo::phantom_to_sigma(mesh(), tomo::sample_phantom(2)), protocol());
  return tomo::normalize_frame(meas, ref);
}

void BM_Reconstruct(benchmark::State& state) {
  tomo::ReconConfig config;
  config.algorithm = static_cast<tomo::Algorithm>(state.range(0));
  const tomo::Reconstructor recon(sensitivity(), config);
  const auto u = sample_frame();
  for (auto _ : state) benchmark::DoNotOptimize(recon(u));
  state.SetLabel(std::string(tomo::to_string(config.algorithm)));
}
BENCHMARK(BM_Reconstruct)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
  const tomo::Rasterizer raster(mesh());
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(mesh().triangle_count()), 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(raster(g));
}
BENCHMARK(BM_Rasterize)->Unit(benchmark::kMicrosecond);

void BM_Ssim(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  tomo::GrayImage a, b;
  for (auto& v : a.pixels()) v = d(rng);
  for (auto& v : b.pixels()) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(tomo::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
