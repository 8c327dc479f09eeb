#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "mott/error.hpp"
#include "mott/stats.hpp"
#include "mott/walk.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

WalkDomain lattice() { return WalkDomain::periodic(unit_lattice()); }

} // namespace

TEST_CASE("zero steps") {
  const Trajectory t = run_discrete(lattice(), 0.0, 0, 1);
  CHECK(t.n_steps == 0);
  CHECK(t.final_displacement == 0.0);
  CHECK(t.final_index == 0);
}

TEST_CASE("same seed, same path") {
  const WalkDomain dom = WalkDomain::periodic(make_periodic({1.0, 2.5}, {0.3, -0.2}, 1.0, PairFunction::mott_form(1.0)));
  const Trajectory a = run_discrete(dom, 0.3, 5000, 42), b = run_discrete(dom, 0.3, 5000, 42);
  CHECK(a.displacement == b.displacement);
  CHECK(a.final_index == b.final_index);
  const Trajectory c = run_discrete(dom, 0.3, 5000, 43);
  CHECK(c.displacement != a.displacement);
  CHECK(a.increment_sum == doctest::Approx(a.final_displacement));
}

TEST_CASE("unbiased lattice walk has no drift") {
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 100; ++r)
    v.push_back(run_discrete(lattice(), 0.0, 100'000, derive_seed(5, "test.walk", r), {.record_stride = 0}).final_displacement /
                1e5);
  const MeanSE m = mean_se(v);
  CHECK(std::fabs(m.mean) <= 3.0 * m.se);
  // Var(Y_n)/n on the lattice is sum_k p k^2.
  double ss = 0.0;
  for (double x : v) ss += x * x * 1e5;
  CHECK(ss / 100.0 == doctest::Approx(oracle::lattice_diffusion()).epsilon(0.5));
}

TEST_CASE("biased lattice walk speed") {
  const double lambda = 0.2;
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 30; ++r)
    v.push_back(run_discrete(lattice(), lambda, 20'000, derive_seed(6, "test.walk", r), {.record_stride = 0}).final_displacement /
                2e4);
  const MeanSE m = mean_se(v);
  CHECK(std::fabs(m.mean - oracle::lattice_phi(lambda)) <= 3.0 * m.se);

  std::vector<double> w;
  for (std::uint64_t r = 0; r < 30; ++r) {
    const Trajectory t = run_continuous(lattice(), lambda, 20'000.0, derive_seed(7, "test.walk", r), {.record_stride = 0});
    w.push_back(t.final_displacement / 2e4);
  }
  const MeanSE mc = mean_se(w);
  const double v_ct = oracle::lattice_phi(lambda) * oracle::lattice_pi(lambda);
  CHECK(std::fabs(mc.mean - v_ct) <= 3.0 * mc.se);
}

TEST_CASE("continuous walk") {
  SUBCASE("horizon before the first jump") {
    const Trajectory t = run_continuous(lattice(), 0.4, 1e-300, 3);
    CHECK(t.final_displacement == 0.0);
    CHECK(t.n_steps == 0);
  }
  SUBCASE("jump chain coincides with the discrete walk") {
    const WalkDomain dom = WalkDomain::periodic(make_periodic({1.0, 1.7, 2.2}, {0.5, 0.0, -0.5}, 1.0, PairFunction::mott_form(1.0)));
    const Trajectory c = run_continuous(dom, 0.35, 2000.0, 77);
    const Trajectory d = run_discrete(dom, 0.35, c.n_steps, 77);
    REQUIRE(c.n_steps > 100);
    REQUIRE(d.displacement.size() == c.displacement.size());
    CHECK(d.displacement == c.displacement);
    CHECK(d.final_index == c.final_index);
    CHECK(c.final_time == 2000.0);
    CHECK(c.time.back() <= 2000.0);
  }
}

TEST_CASE("truncated walk") {
  SUBCASE("no truncation is the plain walk") {
    const WalkDomain dom = WalkDomain::periodic(make_periodic({1.2, 2.0}, {0.0, 0.4}, 1.0, PairFunction::mott_form(1.0)));
    const Trajectory a = run_discrete(dom, 0.2, 3000, 9);
    const Trajectory b = run_truncated(dom, 0.2, kNoTruncation, StopRule::steps(3000), 9);
    CHECK(a.displacement == b.displacement);
  }
  SUBCASE("rho = 1 on the lattice") {
    Walker w(lattice(), 0.0, 1, {.truncation = 1});
    const SiteLaw& s = w.site();
    std::vector<double> p(3, 0.0);
    double prev = 0.0;
    for (std::size_t j = 0; j < s.offsets.size(); ++j) {
      p[static_cast<std::size_t>(s.offsets[j] + 1)] = s.cdf[j] - prev;
      prev = s.cdf[j];
    }
    const double edge = std::exp(-1.0) / oracle::lattice_pi0();
    CHECK(p[0] == doctest::Approx(edge).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(edge).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.0 - 2.0 * edge).epsilon(1e-11));
    CHECK(p[1] > 0.0);
  }
  SUBCASE("self loops are probabilities") {
    const WalkDomain dom = WalkDomain::generated([] {
      GeneratorSpec g;
      g.gaps.kind = GapLaw::Kind::exponential;
      g.gaps.rate = 2.0;
      g.seed = 4;
      return g;
    }());
    Walker w(dom, 0.4, 12, {.truncation = 3});
    for (int n = 0; n < 2000; ++n) {
      const SiteLaw& s = w.site();
      double self = 0.0, prev = 0.0;
      for (std::size_t j = 0; j < s.offsets.size(); ++j) {
        if (s.offsets[j] == 0) self = s.cdf[j] - prev;
        prev = s.cdf[j];
        CHECK(std::abs(s.offsets[j]) <= 3);
      }
      CHECK(self >= 0.0);
      CHECK(self < 1.0);
      w.step();
    }
  }
  SUBCASE("hitting stop rule") {
    const Trajectory t = run_truncated(lattice(), 0.5, 2, StopRule::hitting(IndexSet::at_least(25), 1'000'000), 5);
    REQUIRE(t.hit.has_value());
    CHECK(t.hit->index >= 25);
    CHECK(t.final_index == t.hit->index);
    CHECK_FALSE(t.budget_exhausted);
    const Trajectory u = run_truncated(lattice(), 0.5, 2, StopRule::hitting(IndexSet::at_least(1000), 10), 5);
    CHECK(u.budget_exhausted);
    CHECK_FALSE(u.hit.has_value());
  }
}

TEST_CASE("hitting samples") {
  const HittingSample s = sample_T(lattice(), 0.3, 4, 0, 1, 100, 0);
  CHECK(s.reached);
  CHECK(s.steps == 0);
  const HittingSample t = sample_T(lattice(), 0.3, 4, 3, 1, 100, 5);
  CHECK(t.steps == 0);

  const HittingSample u = sample_T(lattice(), 0.3, 4, 50, 8, 1'000'000);
  CHECK(u.reached);
  CHECK(u.landing >= 50);
  CHECK(u.overshoot == u.landing - 50);
  CHECK(u.overshoot < 4);
}

TEST_CASE("domains") {
  Environment small = unit_lattice().unroll(20);
  CHECK_THROWS_AS(run_discrete(WalkDomain::fixed(small), 0.0, 100, 1), WindowExceeded);
  try {
    run_discrete(WalkDomain::fixed(small), 0.0, 100, 1);
  } catch (const WindowExceeded& e) {
    CHECK(e.required() > 20);
  }

  GeneratorSpec g;
  g.gaps.kind = GapLaw::Kind::exponential;
  g.gaps.rate = 3.0;
  g.radius = 40;
  g.seed = 17;
  const Trajectory t = run_discrete(WalkDomain::generated(g), 0.5, 20'000, 3, {.record_stride = 0});
  CHECK(t.final_displacement > 100.0);
  // A wider starting window gives the same path.
  g.radius = 5000;
  const Trajectory u = run_discrete(WalkDomain::generated(g), 0.5, 20'000, 3, {.record_stride = 0});
  CHECK(u.final_displacement == t.final_displacement);
}

TEST_CASE("occupation and binary log") {
  std::ostringstream log;
  const Trajectory t = run_discrete(lattice(), 0.1, 500, 2, {.record_stride = 10, .binary_log = &log});
  std::uint64_t visits = 0;
  for (const auto& [i, n] : t.occupation) visits += n;
  CHECK(visits == 501); // the start counts as a visit
  CHECK(t.steps.size() == 51);
  CHECK(t.steps.back() == 500);
  CHECK(log.str().size() == 24 * 501);
}
