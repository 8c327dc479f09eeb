#pragma once

// Monte Carlo estimators with batch-means / replica-level confidence
// intervals: Birkhoff averages of the environment chain, velocities,
// diffusion coefficients and the CLT covariance of additive functionals.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mott/env.hpp"
#include "mott/kernel.hpp"
#include "mott/stats.hpp"
#include "mott/walk.hpp"

namespace mott {

// Where replicas take their environment from. Periodic sources share one
// environment and start each replica at a Q_0-distributed shift; generated
// sources draw an independent environment per replica and start at 0.
class EnvSource {
public:
  static EnvSource periodic(PeriodicEnvironment env);
  static EnvSource generated(GeneratorSpec spec);

  bool is_periodic() const { return periodic_.has_value(); }
  const PeriodicEnvironment& periodic_env() const;
  const GeneratorSpec& spec() const;

  WalkDomain domain(std::size_t replica) const;
  long start(std::size_t replica, std::uint64_t seed) const;

private:
  std::optional<PeriodicEnvironment> periodic_;
  std::optional<GeneratorSpec> spec_;
  std::vector<double> start_cdf_;
};

struct McOptions {
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::size_t batches = kDefaultBatches;
  double level = kDefaultLevel;
  unsigned threads = 1;
  double tail_tol = kDefaultTailTol;
};

// Replica-level interval when replicas >= 2, batch means of the single run
// otherwise.
struct EstimateCI {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t batches = 0;
  double level = kDefaultLevel;
  std::size_t replicas = 0;
  double dof = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> replica_seeds;

  double half_width() const { return t_quantile(level, dof) * se; }
  double lower() const { return estimate - half_width(); }
  double upper() const { return estimate + half_width(); }
  // |estimate - x| <= k sqrt(se^2 + extra_se^2).
  bool within(double x, double k = 3.0, double extra_se = 0.0) const;
};

// f evaluated on the environment seen from the walker.
struct SiteView {
  const Medium& medium;
  long index;
  const SiteLaw& law;
};

struct Observable {
  std::string name;
  std::function<double(const SiteView&)> eval;
};

// Registered observables:
//   one, pi (total jump rate pi^l at the current bias), inv_pi (1 / pi^l),
//   phi (local drift phi_l), energy (E_0), gap_bin:a:b (1{a <= Z_0 < b}),
//   state:v_0,v_1,...,v_{N-1} (table indexed by the shift modulo N).
Observable make_observable(std::string_view spec);
std::vector<std::string> observable_names();

std::uint64_t replica_seed(std::uint64_t master, std::size_t replica);

// Birkhoff average n^{-1} sum_{j<n} f(w_j).
EstimateCI estimate_Q(const EnvSource& source, double lambda, const Observable& f, std::uint64_t n,
                      const McOptions& opts);

struct VelocityEstimate {
  EstimateCI discrete;  // Y_n / n
  EstimateCI inv_pi;    // Birkhoff average of 1 / pi^l along the same runs
  double ratio = 0.0;   // discrete / inv_pi, an estimate of the continuous-time velocity
  double ratio_se = 0.0;
};

VelocityEstimate estimate_velocity(const EnvSource& source, double lambda, std::uint64_t n, const McOptions& opts);
// Continuous-time walk to t_max: estimate of Y_t / t.
EstimateCI estimate_velocity_ct(const EnvSource& source, double lambda, double t_max, const McOptions& opts);

// lambda = 0: mean of (Y_{(b+1)m} - Y_{bm})^2 / m over blocks of length m = n / batches.
EstimateCI estimate_diffusion(const EnvSource& source, std::uint64_t n, const McOptions& opts);
EstimateCI estimate_diffusion_ct(const EnvSource& source, double t_max, const McOptions& opts);

struct MsdRow {
  std::uint64_t n = 0;
  EstimateCI msd; // E[Y_n^2] / n
};

struct MsdSweep {
  std::vector<MsdRow> rows;
  EstimateCI slope; // per-replica least-squares slope of Y_n^2 against n
};

// Needs replicas >= 2.
MsdSweep msd_sweep(const EnvSource& source, std::vector<std::uint64_t> ns, const McOptions& opts);

struct CltEstimate {
  EstimateCI var_f;   // Var(n^{-1/2} sum f(w_j))
  EstimateCI var_phi;
  EstimateCI cov;
  std::uint64_t n = 0;
};

// lambda = 0. Sums are centered with the mean pooled over replicas (the
// resulting estimates are rescaled by R / (R - 1)). Needs replicas >= 2.
CltEstimate estimate_clt(const EnvSource& source, const Observable& f, std::uint64_t n, const McOptions& opts);

struct EinsteinMcRow {
  double lambda = 0.0;
  EstimateCI velocity;
};

struct EinsteinMcReport {
  std::vector<EinsteinMcRow> rows;
  LinearFit fit;             // v / lambda against lambda, weights 1/se^2
  double mobility = 0.0;     // intercept of the fit
  double mobility_se = 0.0;
  EstimateCI diffusion;      // D_Y at lambda = 0
  double z = 0.0;            // (mobility - D) / combined se
};

inline const std::vector<double> kEinsteinGrid{0.02, 0.04, 0.08, 0.16};

EinsteinMcReport einstein_mc(const EnvSource& source, const std::vector<double>& lambda_grid, std::uint64_t n,
                             const McOptions& opts);

struct CalibrationReport {
  std::size_t trials = 0;
  std::size_t covered = 0;
  double coverage = 0.0;
  double level = kDefaultLevel;
  double truth = 0.0;
};

// Batch-means intervals for the stationary mean of a two-state Markov chain
// (P(0->1) = a, P(1->0) = b, truth a / (a + b)), repeated over `trials`.
CalibrationReport ci_calibration(std::size_t trials, std::uint64_t n, std::uint64_t seed,
                                 double level = kDefaultLevel, std::size_t batches = kDefaultBatches,
                                 double a = 0.3, double b = 0.2);

} // namespace mott
