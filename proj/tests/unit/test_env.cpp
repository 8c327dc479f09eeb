#include <cmath>
#include <sstream>

#include <doctest.h>

#include "mott/env.hpp"
#include "mott/error.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

GeneratorSpec exp_spec(double rate, std::uint64_t seed = 11, long radius = 64) {
  GeneratorSpec s;
  s.gaps.kind = GapLaw::Kind::exponential;
  s.gaps.rate = rate;
  s.floor = 1.0;
  s.seed = seed;
  s.radius = radius;
  return s;
}

} // namespace

TEST_CASE("pair function") {
  CHECK(mott_u(0.0, 0.0, 1.7) == 0.0);
  CHECK(mott_u(0.3, -0.8, 1.2) == mott_u(-0.8, 0.3, 1.2));
  CHECK(mott_u(1.0, -1.0, 2.0) == doctest::Approx(-4.0));
  CHECK(mott_u(0.4, 0.9, 1.5) == doctest::Approx(oracle::mott_u(0.4, 0.9, 1.5)));
  const PairFunction u = PairFunction::mott_form(1.0);
  CHECK(u(0.5, -0.5) == doctest::Approx(-1.0));
  CHECK(PairFunction::none()(0.5, -0.5) == 0.0);
  // sup over [-1, 1]^2 is attained at (1, -1).
  CHECK(u.bound(1.0) == doctest::Approx(-mott_u(1.0, -1.0, 1.0)));
}

TEST_CASE("constant gaps give the lattice") {
  GeneratorSpec s;
  s.gaps.kind = GapLaw::Kind::constant;
  s.gaps.value = 1.0;
  s.radius = 8;
  const Environment env = sample_environment(s);
  for (long k = -8; k <= 8; ++k) {
    CHECK(env.position(k) == doctest::Approx(static_cast<double>(k)));
    CHECK(env.energy(k) == 0.0);
  }
}

TEST_CASE("sampling is a pure function of the spec") {
  GeneratorSpec s = exp_spec(3.0);
  s.energies.kind = EnergyLaw::Kind::uniform;
  s.energies.amplitude = 0.5;
  const Environment a = sample_environment(s), b = sample_environment(s);
  CHECK(std::equal(a.gaps().begin(), a.gaps().end(), b.gaps().begin(), b.gaps().end()));
  CHECK(std::equal(a.energies().begin(), a.energies().end(), b.energies().begin(), b.energies().end()));

  const Environment small = sample_environment(s, 4);
  for (long k = -4; k <= 4; ++k) {
    CHECK(small.position(k) == a.position(k));
    CHECK(small.energy(k) == a.energy(k));
  }

  GeneratorSpec other = s;
  other.seed = s.seed + 1;
  CHECK(sample_environment(other).gap_at(0) != a.gap_at(0));
}

TEST_CASE("spec json round trip") {
  GeneratorSpec s = exp_spec(2.5, 99, 17);
  s.energies.kind = EnergyLaw::Kind::uniform;
  s.energies.amplitude = 0.7;
  s.pair = PairFunction::mott_form(1.3);
  const GeneratorSpec t = GeneratorSpec::from_json(s.to_json());
  CHECK(t.to_json() == s.to_json());
  const Environment a = sample_environment(s), b = sample_environment(t);
  CHECK(a.position(-17) == b.position(-17));
  CHECK(a.energy(5) == b.energy(5));
}

TEST_CASE("exponential gap mean") {
  const AssumptionReport r = check_assumptions(exp_spec(3.0), 10'000, 2.0);
  const double se = (1.0 / 3.0) / std::sqrt(10'000.0);
  CHECK(std::fabs(r.mean_gap - (1.0 + 1.0 / 3.0)) <= 3.0 * se);
  CHECK(r.min_gap >= 1.0);
  CHECK(r.floor_respected);
}

TEST_CASE("exponential moments") {
  SUBCASE("finite below the rate") {
    const AssumptionReport r = check_assumptions(exp_spec(3.0), 10'000, 2.0);
    CHECK_FALSE(r.mgf_diverges);
    CHECK(r.p_max == doctest::Approx(3.0));
    CHECK(std::isfinite(r.mgf_estimate));
    CHECK(r.mgf_estimate > std::exp(2.0));
  }
  SUBCASE("estimate matches the closed form where its variance is finite") {
    // E[e^{Z}] = e 3/2, E[e^{2Z}] = 3 e^2.
    const AssumptionReport r = check_assumptions(exp_spec(3.0), 10'000, 1.0);
    const double m = oracle::kE * 1.5;
    const double se = std::sqrt(3.0 * oracle::kE * oracle::kE - m * m) / 100.0;
    CHECK(std::fabs(r.mgf_estimate - m) <= 3.0 * se);
  }
  SUBCASE("pole of the moment generating function") {
    CHECK(check_assumptions(exp_spec(1.5), 10'000, 2.0).mgf_diverges);
  }
  SUBCASE("lattice") {
    GeneratorSpec s;
    s.gaps.kind = GapLaw::Kind::constant;
    const AssumptionReport r = check_assumptions(s, 1000, 2.0);
    CHECK(r.min_gap == 1.0);
    CHECK(r.mean_gap == doctest::Approx(1.0));
    CHECK(r.mgf_estimate == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("invalid laws and windows") {
  GeneratorSpec s;
  s.gaps.kind = GapLaw::Kind::constant;
  s.gaps.value = 0.5;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK_THROWS_AS(make_periodic({1.0, 0.5}, {0.0, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_periodic({1.0, 2.0}, {0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Environment::from_window({1.0, 1.0}, {0.0, 0.0}, 1.0, PairFunction::none()), InvalidArgument);
  GeneratorSpec neg = exp_spec(-1.0);
  CHECK_THROWS_AS(neg.validate(), InvalidArgument);
}

TEST_CASE("periodic environments") {
  const PeriodicEnvironment lat = make_periodic({1.0}, {0.0}, 1.0);
  for (long k = -5; k <= 5; ++k) CHECK(lat.position(k) == doctest::Approx(static_cast<double>(k)));
  CHECK(lat == unit_lattice());

  const PeriodicEnvironment p = make_periodic({1.0, 2.0}, {0.0, 0.0}, 1.0);
  const double expect[] = {-6, -5, -3, -2, 0, 1, 3, 4, 6};
  for (long k = -4; k <= 4; ++k) CHECK(p.position(k) == doctest::Approx(expect[k + 4]));
  CHECK(p.length() == doctest::Approx(3.0));

  const PeriodicEnvironment q = make_periodic({1.3, 2.1, 1.7}, {0.2, -0.4, 0.9}, 1.0, PairFunction::mott_form(1.0));
  const PeriodicEnvironment full = q.shift(3);
  CHECK(full == q);
  const PeriodicEnvironment s = q.shift(-2);
  for (long k = -7; k <= 7; ++k) {
    CHECK(s.position(k) == doctest::Approx(q.position(k - 2) - q.position(-2)));
    CHECK(s.energy(k) == q.energy(k - 2));
  }
  CHECK(q.reflect().reflect() == q);
  CHECK(lat.reflect() == lat);
}

TEST_CASE("window shift and reflection") {
  GeneratorSpec s = exp_spec(2.0, 5, 20);
  s.energies.kind = EnergyLaw::Kind::uniform;
  s.energies.amplitude = 1.0;
  const Environment w = sample_environment(s);

  const Environment id = w.shift(0);
  CHECK(std::equal(id.gaps().begin(), id.gaps().end(), w.gaps().begin(), w.gaps().end()));

  const Environment ab = w.shift(3).shift(-5), direct = w.shift(-2);
  for (long k = -ab.radius(); k <= ab.radius(); ++k) {
    CHECK(ab.position(k) == doctest::Approx(direct.position(k)));
    CHECK(ab.energy(k) == direct.energy(k));
  }

  const Environment r = w.reflect();
  for (long k = -20; k <= 20; ++k) {
    CHECK(r.position(k) == doctest::Approx(-w.position(-k)));
    CHECK(r.energy(k) == w.energy(-k));
  }
  const Environment rr = r.reflect();
  CHECK(std::equal(rr.gaps().begin(), rr.gaps().end(), w.gaps().begin(), w.gaps().end()));

  const Environment lat = unit_lattice().unroll(10);
  const Environment moved = lat.shift(3);
  for (long k = -moved.radius(); k <= moved.radius(); ++k) CHECK(moved.position(k) == doctest::Approx(k));
  const Environment lr = lat.reflect();
  for (long k = -10; k <= 10; ++k) CHECK(lr.position(k) == doctest::Approx(k));
}

TEST_CASE("unrolled periodic window") {
  const PeriodicEnvironment p = make_periodic({1.5, 2.0}, {0.1, -0.1}, 1.0, PairFunction::mott_form(0.5));
  const Environment w = p.unroll(6);
  for (long k = -6; k <= 6; ++k) {
    CHECK(w.position(k) == doctest::Approx(p.position(k)));
    CHECK(w.energy(k) == p.energy(k));
  }
  std::ostringstream os;
  w.write_csv(os);
  CHECK(os.str().rfind("k,Z_k,E_k,x_k\n", 0) == 0);
}
