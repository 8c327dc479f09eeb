#include "mott/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mott/error.hpp"

namespace mott {

MeanSE mean_se(std::span<const double> xs) {
  MeanSE r;
  r.count = xs.size();
  if (xs.empty()) return r;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  r.mean = m;
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return r;
}

double t_quantile(double level, double dof) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  const double tail = 0.5 + 0.5 * level;
  if (!(dof > 0.0) || std::isinf(dof)) return boost::math::quantile(boost::math::normal_distribution<>(), tail);
  return boost::math::quantile(boost::math::students_t_distribution<>(dof), tail);
}

BatchAccumulator::BatchAccumulator(std::size_t total, std::size_t batches) : total_(total) {
  if (batches < 2) throw InvalidArgument("need at least two batches");
  if (total < batches) throw InvalidArgument("series shorter than the batch count");
  size_ = total / batches;
  sums_.assign(batches, 0.0);
  counts_.assign(batches, 0);
}

void BatchAccumulator::add(double x) {
  const std::size_t b = std::min(seen_ / size_, sums_.size() - 1);
  sums_[b] += x;
  ++counts_[b];
  ++seen_;
}

double BatchAccumulator::mean() const {
  double s = 0.0;
  for (double v : sums_) s += v;
  return seen_ ? s / static_cast<double>(seen_) : 0.0;
}

std::vector<double> BatchAccumulator::batch_means() const {
  std::vector<double> out;
  for (std::size_t b = 0; b < sums_.size(); ++b)
    if (counts_[b] > 0) out.push_back(sums_[b] / static_cast<double>(counts_[b]));
  return out;
}

MeanSE BatchAccumulator::summary() const {
  const std::vector<double> bm = batch_means();
  MeanSE r = mean_se(bm);
  r.mean = mean();
  r.count = bm.size();
  return r;
}

MeanSE batch_means(std::span<const double> series, std::size_t batches) {
  BatchAccumulator acc(series.size(), batches);
  for (double x : series) acc.add(x);
  return acc.summary();
}

LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() != sigma.size()) throw InvalidArgument("fit inputs differ in length");
  if (x.size() < 2) throw InvalidArgument("fit needs at least two points");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(sigma[j] > 0.0)) throw InvalidArgument("fit weights need positive sigma");
    const double w = 1.0 / (sigma[j] * sigma[j]);
    s += w;
    sx += w * x[j];
    sy += w * y[j];
    sxx += w * x[j] * x[j];
    sxy += w * x[j] * y[j];
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0)) throw NumericalError("degenerate fit abscissae");
  LinearFit f;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.slope = (s * sxy - sx * sy) / det;
  f.intercept_se = std::sqrt(sxx / det);
  f.slope_se = std::sqrt(s / det);
  return f;
}

} // namespace mott
