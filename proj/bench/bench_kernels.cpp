// Serial reference vs OpenMP for the data-parallel kernels.

#include <array>
#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "ctb/orbits.hpp"
#include "ctb/secular.hpp"

namespace {

using ctb::kernels::Execution;

const ctb::SecularSetup setup{1.0, 1.2, 0.02, ctb::MassPair::normalized(0.3, 0.7), ctb::CurvedSpace::spherical(1.0)};

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) ? "parallel, " + std::to_string(ctb::kernels::max_threads()) + " threads" : "serial");
}

void BM_AveragePer(benchmark::State& state) {
  ctb::AveragingOptions opt;
  opt.nodes = std::size_t(state.range(1));
  opt.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(ctb::average_per(0.6, 1.0, setup, opt));
  label(state);
}
BENCHMARK(BM_AveragePer)->ArgsProduct({{0, 1}, {256, 4096}})->Unit(benchmark::kMicrosecond);

void BM_PhasePortrait(benchmark::State& state) {
  const ctb::PortraitGrid grid{-0.95, 0.95, std::size_t(state.range(1)), std::size_t(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(ctb::secular_phase_portrait(setup, grid, mode(state)));
  label(state);
}
BENCHMARK(BM_PhasePortrait)->ArgsProduct({{0, 1}, {41, 121}})->Unit(benchmark::kMillisecond);

void BM_ReturnMapBatch(benchmark::State& state) {
  const ctb::SecularSetup s{0.5, 0.6, 0.05, setup.masses, setup.space};
  std::vector<std::array<double, 2>> points;
  for (int i = 0; i < state.range(1); ++i) points.push_back({0.02 + 0.4 * i / double(state.range(1)), 0.0});
  for (auto _ : state)
    benchmark::DoNotOptimize(ctb::return_map_batch(points, s, ctb::ReturnMode::secular, mode(state)));
  label(state);
}
BENCHMARK(BM_ReturnMapBatch)->ArgsProduct({{0, 1}, {16, 64}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
