#include <benchmark/benchmark.h>

#include "mott/walk.hpp"

using namespace mott;

namespace {

void BM_DiscreteSteps(benchmark::State& state) {
  const WalkDomain dom =
      WalkDomain::periodic(make_periodic({1.0, 2.5, 1.3, 1.7}, {0.3, -0.2, 0.5, 0.0}, 1.0, PairFunction::mott_form(1.0)));
  const auto n = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_discrete(dom, 0.3, n, ++seed, {.record_stride = 0}).final_displacement);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_DiscreteSteps)->Arg(10'000)->Arg(100'000);

void BM_GeneratedSteps(benchmark::State& state) {
  GeneratorSpec g;
  g.gaps.kind = GapLaw::Kind::exponential;
  g.gaps.rate = 2.0;
  g.pair = PairFunction::none();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    g.seed = ++seed;
    benchmark::DoNotOptimize(run_discrete(WalkDomain::generated(g), 0.3, n, seed, {.record_stride = 0}).final_displacement);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_GeneratedSteps)->Arg(10'000);

void BM_HittingTime(benchmark::State& state) {
  const WalkDomain dom = WalkDomain::periodic(unit_lattice());
  const long rho = state.range(0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_T(dom, 0.2, rho, rho, ++seed, 10'000'000).steps);
}
BENCHMARK(BM_HittingTime)->Arg(8)->Arg(64);

} // namespace
