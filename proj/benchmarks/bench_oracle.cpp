#include <random>

#include <benchmark/benchmark.h>

#include "mott/chain_oracle.hpp"

using namespace mott;

namespace {

PeriodicEnvironment random_env(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(1.0, 3.0), energy(-1.0, 1.0);
  std::vector<double> z, e;
  for (int i = 0; i < n; ++i) {
    z.push_back(gap(rng));
    e.push_back(energy(rng));
  }
  return make_periodic(z, e, 1.0, PairFunction::mott_form(1.0));
}

void BM_BuildChain(benchmark::State& state) {
  const PeriodicEnvironment env = random_env(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_chain(env, 0.3));
}
BENCHMARK(BM_BuildChain)->Arg(4)->Arg(16)->Arg(64);

void BM_DerivativeTwoWays(benchmark::State& state) {
  const PeriodicEnvironment env = random_env(static_cast<int>(state.range(0)), 2);
  const ReversibleChain chain(env);
  const Eigen::VectorXd f = chain.center(Eigen::VectorXd::LinSpaced(chain.size(), -1.0, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(derivative_two_ways(chain, f));
}
BENCHMARK(BM_DerivativeTwoWays)->Arg(4)->Arg(16);

void BM_EinsteinCheck(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(einstein_check(unit_lattice(), 1e-3));
}
BENCHMARK(BM_EinsteinCheck);

void BM_RnScan(benchmark::State& state) {
  const PeriodicEnvironment env = random_env(8, 3);
  std::vector<double> grid;
  for (int j = 1; j <= 25; ++j) grid.push_back(0.02 * j);
  for (auto _ : state) benchmark::DoNotOptimize(rn_diagnostics(env, grid, 2.0));
}
BENCHMARK(BM_RnScan);

} // namespace
