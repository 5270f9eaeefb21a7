#include <benchmark/benchmark.h>

#include "trapent/schmidt.hpp"
#include "trapent/specfun.hpp"
#include "trapent/spectrum.hpp"

using namespace trapent;

static void BM_KummerU(benchmark::State& state) {
  const double alpha = static_cast<double>(state.range(0)) / 4.0;
  double x = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(specfun::kummer_u_3half(alpha, x));
    x = x < 20.0 ? x * 1.1 : 0.01;
  }
}
BENCHMARK(BM_KummerU)->Arg(-30)->Arg(3)->Arg(7)->Arg(80);

static void BM_EnergyOfInvA(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(energy_of_inv_a(-2.0, 0));
}
BENCHMARK(BM_EnergyOfInvA)->Unit(benchmark::kMillisecond);

// One Legendre channel on the default 350-point grid.
static void BM_Projection(benchmark::State& state) {
  const auto st = TwoBodyState::trap(energy_of_inv_a(-2.0, 0));
  const RadialGrid grid;
  for (auto _ : state) benchmark::DoNotOptimize(project_legendre(st, 4, grid));
}
BENCHMARK(BM_Projection)->Unit(benchmark::kMillisecond);

static void BM_Decomposition(benchmark::State& state) {
  const auto st = TwoBodyState::trap(energy_of_inv_a(-2.0, 0));
  const RadialGrid grid;
  const auto alpha = project_legendre(st, 0, grid);
  for (auto _ : state) benchmark::DoNotOptimize(decompose_channel(alpha, grid, 0, true));
}
BENCHMARK(BM_Decomposition)->Unit(benchmark::kMillisecond);

static void BM_FullState(benchmark::State& state) {
  const auto st = TwoBodyState::unitarity(0);
  SchmidtOptions o;
  o.compute_modes = false;
  for (auto _ : state) benchmark::DoNotOptimize(decompose_state(st, o));
}
BENCHMARK(BM_FullState)->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_MAIN();
