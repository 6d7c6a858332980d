#include <benchmark/benchmark.h>

#include "semiclassic/hartree.hpp"
#include "semiclassic/initial.hpp"
#include "semiclassic/metrics.hpp"
#include "semiclassic/potential.hpp"
#include "semiclassic/states.hpp"
#include "semiclassic/vlasov.hpp"

using namespace semiclassic;

namespace {

// fermi ball with N = n/16 particles on L = 4, so h = eps/4
InitialState ball(int n) {
  const double N = n / 16.0;
  const Profile profile("fermi_ball", {{"sigma_x", 1.2}, {"sigma_v", 4.6}, {"exponent", 2.0}});
  InitialOptions options;
  options.measure_commutators = false;
  options.max_leak = 1e-5;
  return build_initial_state(profile, N, 1.0 / N, SpatialGrid(4.0, n), options);
}

const InteractionPotential& cosine() {
  static const InteractionPotential V = InteractionPotential::cosine(1.0, Index{1}, 1);
  return V;
}

void BM_WignerTransform(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  WignerOptions options;
  options.max_leak = 1e-5;
  for (auto _ : state) benchmark::DoNotOptimize(wigner_transform(init.op, init.wigner.grid, options));
}
BENCHMARK(BM_WignerTransform)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_WeylQuantize(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(weyl_quantize(init.wigner));
}
BENCHMARK(BM_WeylQuantize)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_HartreeStep(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  HartreeConfig cfg;
  cfg.dt = 0.1 * init.op.eps;
  for (auto _ : state) benchmark::DoNotOptimize(hartree_step(init.op, cfg, cosine()));
}
BENCHMARK(BM_HartreeStep)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_VlasovStep(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  VlasovConfig cfg;
  cfg.dt = 0.1 * init.wigner.eps;
  for (auto _ : state) benchmark::DoNotOptimize(vlasov_step(init.wigner, cosine(), cfg));
}
BENCHMARK(BM_VlasovStep)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TraceNorm(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trace_norm(init.op));
}
BENCHMARK(BM_TraceNorm)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ObservableDistance(benchmark::State& state) {
  const InitialState init = ball(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(observable_distance(init.op, init.wigner, ObservableBox{}));
}
BENCHMARK(BM_ObservableDistance)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
