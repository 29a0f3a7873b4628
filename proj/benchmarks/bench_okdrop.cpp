#include <benchmark/benchmark.h>

#include <numbers>

#include "okdrop/drop_model.hpp"
#include "okdrop/gamma_analysis.hpp"
#include "okdrop/minimizer.hpp"

using namespace okdrop;

namespace {

DropletConfig bcc_config(int n) {
  // 2 n^3 droplets of mass 10 pi at lambda = 1.
  const double l = 2.0 * n * n * n * 10.0 * std::numbers::pi;
  return init_lattice(TorusSpec(1.0 / (l * l * l), 1.0), Lattice::kBCC, 10.0 * std::numbers::pi);
}

void BM_Green(benchmark::State& state) {
  const EwaldKernel g(1.0);
  Vec3 x{0.1, 0.2, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.green(x));
    x.x += 1e-7;
  }
}
BENCHMARK(BM_Green);

void BM_KernelSetup(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(EwaldKernel(1.0, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_KernelSetup)->Arg(8)->Arg(12)->Arg(16);

void BM_CoulombClosedForm(benchmark::State& state) {
  const DropletConfig c = bcc_config(static_cast<int>(state.range(0)));
  const EwaldKernel k(c.spec.side_length());
  for (auto _ : state) benchmark::DoNotOptimize(coulomb_energy(c, k));
  state.SetLabel(std::to_string(c.droplets.size()) + " droplets");
}
BENCHMARK(BM_CoulombClosedForm)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_CoulombSpectral(benchmark::State& state) {
  const DropletConfig c = bcc_config(static_cast<int>(state.range(0)));
  const EwaldKernel k(c.spec.side_length());
  for (auto _ : state) benchmark::DoNotOptimize(coulomb_energy_spectral(c, k));
}
BENCHMARK(BM_CoulombSpectral)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_PotentialField(benchmark::State& state) {
  const DropletConfig c = bcc_config(2);
  const EwaldKernel k(c.spec.side_length());
  for (auto _ : state) benchmark::DoNotOptimize(potential_field(c, k, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_PotentialField)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EnergyMeasure(benchmark::State& state) {
  const DropletConfig c = bcc_config(2);
  const EwaldKernel k(c.spec.side_length());
  for (auto _ : state) benchmark::DoNotOptimize(energy_measure(c, k, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_EnergyMeasure)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AnnealShort(benchmark::State& state) {
  const DropletConfig c = bcc_config(2);
  const EwaldKernel k(c.spec.side_length());
  AnnealSchedule s;
  s.steps_per_temp = 100;
  s.max_levels = 10;
  for (auto _ : state) benchmark::DoNotOptimize(anneal(c, k, s));
}
BENCHMARK(BM_AnnealShort)->Unit(benchmark::kMillisecond);

void BM_GeneralizedMinimum(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(drop::generalized_minimum(120.0));
}
BENCHMARK(BM_GeneralizedMinimum)->Unit(benchmark::kMicrosecond);

void BM_CoulombForm(benchmark::State& state) {
  const auto mu = LimitMeasure::uniform(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(coulomb_form(mu.grid_n(), mu.values()));
}
BENCHMARK(BM_CoulombForm)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
