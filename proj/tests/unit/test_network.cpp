#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "mott/error.hpp"
#include "mott/kernel.hpp"
#include "mott/network.hpp"
#include "mott/rng.hpp"
#include "mott/walk.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

PeriodicEnvironment random_env(std::mt19937_64& rng, int n, double beta) {
  const oracle::Periodic p = oracle::random_periodic(rng, n, beta);
  return make_periodic(p.gaps, p.energies, 1.0, beta > 0 ? PairFunction::mott_form(beta) : PairFunction::none());
}

} // namespace

TEST_CASE("one edge") {
  const PeriodicEnvironment lat = unit_lattice();
  const ConductanceResult r = effective_conductance(lat, 0.0, 1, IndexSet::point(0), IndexSet::point(1), {0, 1}, false);
  CHECK(r.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(r.free_nodes == 0);
}

TEST_CASE("series resistance on the lattice") {
  const PeriodicEnvironment lat = unit_lattice();
  const ConductanceResult r =
      effective_conductance(lat, 0.0, 1, IndexSet::point(0), IndexSet::at_least(4), {-10, 30});
  CHECK(r.value == doctest::Approx(std::exp(-1.0) / 4.0).epsilon(1e-12));
  CHECK(r.harmonic_residual < 1e-14);
  CHECK(r.window_sensitivity < 1e-14);

  CHECK(nn_series(lat, 0.0, 1, 4) == doctest::Approx(3.0 * oracle::kE).epsilon(1e-14));
  CHECK(nn_series(lat, 0.3, 5, 6) == doctest::Approx(1.0 / conductance(lat, 0.3, 5, 6)).epsilon(1e-14));
}

TEST_CASE("nearest-neighbour conductance is the inverse series") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 12; ++t) {
    const PeriodicEnvironment env = random_env(rng, 1 + t % 6, t % 2);
    const double lambda = 0.1 * (t % 6);
    const long rho = 5 + t;
    for (long k : {1L, 2L, rho - 1}) {
      const ConductanceResult r =
          effective_conductance(env, lambda, 1, IndexSet::point(k), IndexSet::at_least(rho), {k - 20, rho + 20}, false);
      CHECK(r.value == doctest::Approx(1.0 / nn_series(env, lambda, k, rho)).epsilon(1e-10));
    }
  }
}

TEST_CASE("longer range only adds conductance") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const PeriodicEnvironment env = random_env(rng, 1 + t % 4, t % 2);
    const double lambda = 0.05 + 0.1 * (t % 5);
    const IndexSet A = IndexSet::at_most(0), B = IndexSet::at_least(8);
    const double c1 = effective_conductance(env, lambda, 1, A, B, {1, 7}, false).value;
    double prev = c1;
    for (long rho : {2L, 4L, 8L}) {
      const double c = effective_conductance(env, lambda, rho, A, B, {1, 7}, false).value;
      CHECK(c >= prev * (1.0 - 1e-12));
      prev = c;
    }
  }
}

TEST_CASE("effective conductance matches a dense Dirichlet solve") {
  std::mt19937_64 rng(77);
  const PeriodicEnvironment env = random_env(rng, 3, 1.0);
  const double lambda = 0.2;
  const long rho = 3, lo = -12, hi = 12;
  // Finite network on [lo, hi]: A = {lo..0}, B = {6..hi}, all edges |i-j| <= rho.
  const int n = static_cast<int>(hi - lo + 1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (long i = lo; i <= hi; ++i)
    for (long j = lo; j <= hi; ++j)
      if (i != j && std::abs(i - j) <= rho) c(i - lo, j - lo) = conductance(env, lambda, i, j);
  std::vector<int> zero, one;
  for (long i = lo; i <= 0; ++i) zero.push_back(static_cast<int>(i - lo));
  for (long i = 6; i <= hi; ++i) one.push_back(static_cast<int>(i - lo));
  const double ref = oracle::effective_conductance(c, zero, one);
  const double got =
      effective_conductance(env, lambda, rho, IndexSet::range(lo, 0), IndexSet::range(6, hi), {1, 5}, false).value;
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));

  const FiniteChain fc = FiniteChain::from_conductances(c);
  std::vector<std::size_t> z(zero.begin(), zero.end()), o(one.begin(), one.end());
  CHECK(mott::effective_conductance(fc, z, o) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("strong bias across a wide window") {
  // Sites right of k form a dead end whose conductances grow like e^{2 l x};
  // at l = 0.8 they span about 67 decades.
  const PeriodicEnvironment env = make_periodic({1.0, 2.9, 1.4, 2.6}, {0.8, -0.9, 0.1, -0.4}, 1.0, PairFunction::mott_form(1.0));
  const long rho = 8, lo = -8, k = 3, first = lo - rho;
  for (double lambda : {0.3, 0.6, 0.8})
    for (long hi : {12L, 32L}) {
      const int n = static_cast<int>(hi - first + 1);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
      for (long i = first; i <= hi; ++i)
        for (long j = first; j <= hi; ++j)
          if (i != j && std::abs(i - j) <= rho && !(i <= 0 && j <= 0)) c(i - first, j - first) = conductance(env, lambda, i, j);
      std::vector<int> zero;
      for (long i = first; i <= 0; ++i) zero.push_back(static_cast<int>(i - first));
      const double ref = oracle::effective_conductance<oracle::Wide>(c, zero, {static_cast<int>(k - first)});
      const ConductanceResult r =
          effective_conductance(env, lambda, rho, IndexSet::point(k), IndexSet::at_most(0), {lo, hi}, false);
      CHECK(r.value == doctest::Approx(ref).epsilon(1e-13));
      CHECK(r.harmonic_residual <= 1e-13);
    }
}

TEST_CASE("windows beyond the range of a double") {
  // e^{2 l x} passes 1e308 long before the far end of the window.
  const PeriodicEnvironment env = make_periodic({1.0, 2.9, 1.4, 2.6}, {0.8, -0.9, 0.1, -0.4}, 1.0, PairFunction::mott_form(1.0));
  const double lambda = 0.5;
  const long len = 1000;
  REQUIRE(2.0 * lambda * env.position(len) > 800.0);
  const ConductanceResult r =
      effective_conductance(env, lambda, 1, IndexSet::point(0), IndexSet::at_least(len), {1, len - 1}, false);
  CHECK(std::isfinite(r.value));
  // Resistances in series from 0 to len.
  const double series = 1.0 / conductance(env, lambda, 0, 1) + nn_series(env, lambda, 1, len);
  CHECK(r.value == doctest::Approx(1.0 / series).epsilon(1e-12));
  const ConductanceResult wide =
      effective_conductance(env, lambda, 8, IndexSet::at_most(0), IndexSet::at_least(len), {1, len - 1}, false);
  CHECK(std::isfinite(wide.value));
  CHECK(wide.value >= r.value);
  CHECK(wide.harmonic_residual <= 1e-13);
}

TEST_CASE("oversized windows are refused") {
  const long n = static_cast<long>(kEliminationLimit);
  CHECK_THROWS_AS(effective_conductance(unit_lattice(), 0.1, 2, IndexSet::at_most(0), IndexSet::at_least(n), {1, n - 1}, false),
                  NumericalError);
}

TEST_CASE("reduced chain") {
  const PeriodicEnvironment lat = unit_lattice();
  const FiniteChain ch = reduce_chain(lat, 0.0, 2);
  CHECK(ch.size() == 3);
  CHECK(ch.conductance(1, 0) == doctest::Approx(conductance(lat, 0.0, 1, 0) + conductance(lat, 0.0, 1, -1)).epsilon(1e-14));
  CHECK(ch.conductance(1, 2) == doctest::Approx(conductance(lat, 0.0, 1, 2) + conductance(lat, 0.0, 1, 3)).epsilon(1e-14));

  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const PeriodicEnvironment env = random_env(rng, 1 + t % 5, 1.0);
    const FiniteChain r = reduce_chain(env, 0.1 * (t % 6), 3 + t);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        row += r.probability(i, j);
        const double scale = r.weight(i) * r.probability(i, j);
        worst = std::max(worst, std::fabs(scale - r.weight(j) * r.probability(j, i)) / std::max(scale, 1e-300));
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("hitting probabilities") {
  std::mt19937_64 rng(12);
  const FiniteChain r = reduce_chain(random_env(rng, 4, 1.0), 0.3, 6);
  CHECK(hitting_probability(r, 0, 0, 6) == 1.0);
  CHECK(hitting_probability(r, 6, 0, 6) == 0.0);
  for (std::size_t k = 1; k < 6; ++k) {
    const double p = hitting_probability(r, k, 0, 6);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK(p == doctest::Approx(1.0 - oracle::harmonic(r.conductances(), {0}, {6})[k]).epsilon(1e-10));
  }

  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(3, 3);
  sym(0, 1) = sym(1, 0) = sym(1, 2) = sym(2, 1) = 0.7;
  CHECK(hitting_probability(FiniteChain::from_conductances(sym), 1, 0, 2) == doctest::Approx(0.5));
}

TEST_CASE("reduced chain reproduces the truncated walk") {
  // P_k(walk below 0 before reaching [rho, inf)) for the rho-truncated walk.
  const PeriodicEnvironment env = make_periodic({1.0, 1.8, 1.3}, {0.2, -0.3, 0.0}, 1.0, PairFunction::mott_form(1.0));
  const double lambda = 0.3;
  const long rho = 4, k = 2;
  const FiniteChain r = reduce_chain(env, lambda, rho);
  const double exact = hitting_probability(r, static_cast<std::size_t>(k), 0, static_cast<std::size_t>(rho));
  const int trials = 20'000;
  int low = 0;
  const WalkDomain dom = WalkDomain::periodic(env);
  for (int t = 0; t < trials; ++t) {
    Walker w(dom, lambda, derive_seed(3, "test.reduced", static_cast<std::uint64_t>(t)), {.start = k, .truncation = rho});
    while (w.state().index > 0 && w.state().index < rho) w.step();
    if (w.state().index <= 0) ++low;
  }
  const double p = static_cast<double>(low) / trials;
  const double se = std::sqrt(exact * (1 - exact) / trials);
  CHECK(std::fabs(p - exact) <= 3.0 * se);
}

TEST_CASE("mean hitting times") {
  Eigen::MatrixXd two(2, 2);
  two << 0.6, 0.4, 0.4, 0.0;
  const FiniteChain c = FiniteChain::from_conductances(two);
  CHECK(expected_hitting_time(c, 0, {1}) == doctest::Approx(1.0 / 0.4).epsilon(1e-13));
  CHECK(expected_hitting_time(c, 1, {1}) == 0.0);

  std::mt19937_64 rng(50);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const long rho = 2 + t % 9;
    const FiniteChain r = reduce_chain(random_env(rng, 1 + t % 7, t % 2), 0.05 + 0.009 * t, rho);
    const std::vector<std::size_t> target{static_cast<std::size_t>(rho)};
    const HittingTimeIdentity id = check_hitting_time_identity(r, 0, target);
    worst = std::max(worst, id.relative_residual);
    const double ref = oracle::mean_hitting_time(r.conductances(), 0, {static_cast<int>(rho)});
    CHECK(expected_hitting_time(r, 0, target) == doctest::Approx(ref).epsilon(1e-9));
    CHECK(id.mean_time == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("return-probability ratios") {
  for (double lambda : {0.1, 0.3, 0.5}) {
    const DromedarioReport d = check_dromedario(unit_lattice(), lambda, 8);
    CHECK(d.rows.size() == 7);
    CHECK(d.min_ratio > 0.0);
    for (const auto& row : d.rows) {
      CHECK(row.lhs > 0.0);
      CHECK(row.lhs <= 1.0);
      CHECK(row.ratio > 0.0);
      // P_k(tau_A < tau_B) <= C(k, A) / C(k, A u B).
      CHECK(row.reduced <= row.rhs * (1.0 + 1e-12));
    }
    CHECK(d.rows.back().k == 7);
    CHECK(d.rows.back().ratio > 0.0);
  }
}
