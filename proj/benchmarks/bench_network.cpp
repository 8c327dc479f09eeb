#include <benchmark/benchmark.h>

#include "mott/network.hpp"

using namespace mott;

namespace {

PeriodicEnvironment p4() {
  return make_periodic({1.0, 2.5, 1.3, 1.7}, {0.3, -0.2, 0.5, 0.0}, 1.0, PairFunction::mott_form(1.0));
}

void BM_Conductance(benchmark::State& state) {
  const PeriodicEnvironment env = p4();
  const long rho = state.range(0), len = state.range(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        effective_conductance(env, 0.3, rho, IndexSet::at_most(0), IndexSet::at_least(len), {1, len - 1}, false).value);
}
BENCHMARK(BM_Conductance)->Args({1, 100})->Args({8, 100})->Args({8, 1000})->Args({32, 1000});

void BM_ReducedChainHitting(benchmark::State& state) {
  const PeriodicEnvironment env = p4();
  const long rho = state.range(0);
  for (auto _ : state) {
    const FiniteChain r = reduce_chain(env, 0.3, rho);
    benchmark::DoNotOptimize(expected_hitting_time(r, 0, {static_cast<std::size_t>(rho)}));
  }
}
BENCHMARK(BM_ReducedChainHitting)->Arg(8)->Arg(64);

void BM_Dromedario(benchmark::State& state) {
  const PeriodicEnvironment env = p4();
  for (auto _ : state) benchmark::DoNotOptimize(check_dromedario(env, 0.3, 8).min_ratio);
}
BENCHMARK(BM_Dromedario);

} // namespace
