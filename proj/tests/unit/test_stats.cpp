#include <cmath>
#include <vector>

#include <doctest.h>

#include "mott/stats.hpp"

using namespace mott;

TEST_CASE("mean and standard error") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const MeanSE m = mean_se(x);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(m.count == 4);
  const std::vector<double> one{7.0};
  CHECK(mean_se(one).se == 0.0);
}

TEST_CASE("t quantiles") {
  CHECK(t_quantile(0.95, 1) == doctest::Approx(12.7062).epsilon(1e-4));
  CHECK(t_quantile(0.95, 10) == doctest::Approx(2.2281).epsilon(1e-4));
  CHECK(t_quantile(0.95, 29) == doctest::Approx(2.0452).epsilon(1e-4));
  CHECK(t_quantile(0.95, INFINITY) == doctest::Approx(1.95996).epsilon(1e-5));
  CHECK(t_quantile(0.99, 1e9) == doctest::Approx(2.57583).epsilon(1e-5));
}

TEST_CASE("batch means") {
  const std::vector<double> flat(1000, 3.25);
  const MeanSE c = batch_means(flat);
  CHECK(c.mean == doctest::Approx(3.25));
  CHECK(c.se == 0.0);

  std::vector<double> s;
  for (int i = 0; i < 1003; ++i) s.push_back(std::sin(0.37 * i) + 0.001 * i);
  const MeanSE direct = batch_means(s, 10);
  BatchAccumulator acc(s.size(), 10);
  for (double v : s) acc.add(v);
  CHECK(acc.count() == s.size());
  CHECK(acc.batch_means().size() == 10);
  const MeanSE streamed = acc.summary();
  CHECK(streamed.mean == doctest::Approx(direct.mean).epsilon(1e-14));
  CHECK(streamed.se == doctest::Approx(direct.se).epsilon(1e-12));
  double total = 0.0;
  for (double v : s) total += v;
  CHECK(acc.mean() == doctest::Approx(total / s.size()).epsilon(1e-14));
}

TEST_CASE("weighted linear fit") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y, sigma;
  for (double v : x) {
    y.push_back(1.5 - 0.25 * v);
    sigma.push_back(0.1 + 0.05 * v);
  }
  const LinearFit f = weighted_linear_fit(x, y, sigma);
  CHECK(f.intercept == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-13));
  CHECK(f.intercept_se > 0.0);

  // Unit weights on two points: the slope se is sqrt(2) / |x1 - x0|.
  const std::vector<double> x2{0.0, 2.0}, y2{1.0, 1.0}, s2{1.0, 1.0};
  CHECK(weighted_linear_fit(x2, y2, s2).slope_se == doctest::Approx(std::sqrt(2.0) / 2.0));
}
