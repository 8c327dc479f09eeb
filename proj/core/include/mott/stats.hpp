#pragma once

// Means, standard errors and batch-means intervals for autocorrelated series.

#include <cstddef>
#include <span>
#include <vector>

namespace mott {

inline constexpr std::size_t kDefaultBatches = 30;
inline constexpr double kDefaultLevel = 0.95;

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

// Sample mean and standard error (sd / sqrt(n)); stderr is 0 for n < 2.
MeanSE mean_se(std::span<const double> xs);

// Two-sided Student-t quantile: P(|T| <= q) = level with `dof` degrees of freedom.
double t_quantile(double level, double dof);

// Splits a stream of known length into `batches` contiguous batches (the last
// absorbs the remainder) and keeps the batch sums.
class BatchAccumulator {
public:
  BatchAccumulator(std::size_t total, std::size_t batches = kDefaultBatches);

  void add(double x);
  std::size_t count() const { return seen_; }
  double mean() const;
  std::vector<double> batch_means() const;
  // Mean and batch-means standard error.
  MeanSE summary() const;

private:
  std::size_t total_;
  std::size_t size_;
  std::size_t seen_ = 0;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

MeanSE batch_means(std::span<const double> series, std::size_t batches = kDefaultBatches);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
};

// Weighted least squares y ~ a + b x with weights 1 / sigma^2 (known sigma).
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma);

} // namespace mott
