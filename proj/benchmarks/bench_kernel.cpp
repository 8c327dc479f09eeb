#include <benchmark/benchmark.h>

#include "mott/kernel.hpp"

using namespace mott;

namespace {

PeriodicEnvironment p4() {
  return make_periodic({1.0, 2.5, 1.3, 1.7}, {0.3, -0.2, 0.5, 0.0}, 1.0, PairFunction::mott_form(1.0));
}

void BM_JumpLaw(benchmark::State& state) {
  const PeriodicEnvironment env = p4();
  const double lambda = static_cast<double>(state.range(0)) / 100.0;
  long i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(jump_law(env, lambda, i++ % 4));
  state.counters["radius"] = static_cast<double>(jump_law(env, lambda, 0).radius);
}
BENCHMARK(BM_JumpLaw)->Arg(0)->Arg(30)->Arg(80);

void BM_DerivativeTables(benchmark::State& state) {
  const PeriodicEnvironment env = p4();
  for (auto _ : state) benchmark::DoNotOptimize(derivative_tables(env, 0.2, 1));
}
BENCHMARK(BM_DerivativeTables);

void BM_GeneratedSiteLaw(benchmark::State& state) {
  GeneratorSpec g;
  g.gaps.kind = GapLaw::Kind::exponential;
  g.gaps.rate = 2.0;
  g.energies.kind = EnergyLaw::Kind::uniform;
  g.energies.amplitude = 1.0;
  g.pair = PairFunction::mott_form(1.0);
  g.radius = 400;
  const Environment env = sample_environment(g);
  long i = -100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(jump_law(env, 0.3, i));
    if (++i > 100) i = -100;
  }
}
BENCHMARK(BM_GeneratedSiteLaw);

} // namespace
