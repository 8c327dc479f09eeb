#pragma once

// Exact finite-chain numerics for the environment seen from the walker on a
// period-N environment. State i is the shift tau_i w; a jump by offset k moves
// to state (i + k) mod N while the walker moves by x_{i+k} - x_i.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mott/env.hpp"
#include "mott/kernel.hpp"

namespace mott {

// Largest bias accepted by the oracle (|lambda| <= kLambdaStar).
inline constexpr double kLambdaStar = 0.9;

struct ChainMatrices {
  int n = 0;
  double lambda = 0.0;
  long radius = 0;              // common offset range [-radius, radius]
  Eigen::MatrixXd P;            // folded transition operator
  std::vector<JumpLaw> laws;    // unfolded law of every state
  Eigen::VectorXd weights;      // pi^l(tau_i w)
  Eigen::VectorXd drift;        // phi_l(tau_i w)
  Eigen::VectorXd second_moment; // sum_k p^l_{0,k}(tau_i w) x_k^2
  double max_tail_mass = 0.0;

  double displacement(int i, long k) const { return laws[static_cast<std::size_t>(i)].displacement(k); }
  double probability(int i, long k) const { return laws[static_cast<std::size_t>(i)].probability(k); }
  int target(int i, long k) const;
  // L = P - I.
  Eigen::MatrixXd generator() const;
};

// All states share the largest certified radius so the lambda = 0 chain is
// exactly reversible. Accepts |lambda| <= kLambdaStar.
ChainMatrices build_chain(const PeriodicEnvironment& penv, double lambda, double tail_tol = kDefaultTailTol);

// Q with Q P = Q, sum Q = 1.
Eigen::VectorXd stationary(const ChainMatrices& chain);
double stationarity_residual(const ChainMatrices& chain, const Eigen::VectorXd& q);
// max |Q(i)P(i,j) - Q(j)P(j,i)|.
double detailed_balance_residual(const ChainMatrices& chain, const Eigen::VectorXd& q);
// Q_0 = pi / sum pi.
Eigen::VectorXd reversible_measure(const ChainMatrices& chain);

double exact_velocity(const PeriodicEnvironment& penv, double lambda, double tail_tol = kDefaultTailTol);
double exact_velocity_ct(const PeriodicEnvironment& penv, double lambda, double tail_tol = kDefaultTailTol);

// ---------------------------------------------------------------- lambda = 0

// The reversible chain together with its Q_0 geometry. Functions on states
// are vectors of length N.
class ReversibleChain {
public:
  explicit ReversibleChain(ChainMatrices chain);
  explicit ReversibleChain(const PeriodicEnvironment& penv, double tail_tol = kDefaultTailTol);

  const ChainMatrices& chain() const { return chain_; }
  int size() const { return chain_.n; }
  const Eigen::VectorXd& q0() const { return q0_; }

  double mean(const Eigen::VectorXd& f) const { return q0_.dot(f); }
  double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  Eigen::VectorXd apply_generator(const Eigen::VectorXd& g) const;

  // Throws InvalidArgument if |Q_0(f)| is not negligible.
  void require_mean_zero(const Eigen::VectorXd& f) const;
  Eigen::VectorXd center(const Eigen::VectorXd& f) const;

  // g with -L_0 g = f and Q_0(g) = 0, for mean-zero f.
  Eigen::VectorXd poisson(const Eigen::VectorXd& f) const;

  // Eigenpairs of -L_0: values ascending, columns of `vectors` orthonormal in
  // L^2(Q_0).
  struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
  };
  const Spectrum& spectrum() const;

private:
  ChainMatrices chain_;
  Eigen::VectorXd q0_;
  mutable Eigen::PartialPivLU<Eigen::MatrixXd> poisson_lu_;
  mutable bool poisson_ready_ = false;
  mutable Spectrum spectrum_;
  mutable bool spectrum_ready_ = false;
};

// (eps - L_0) g = f.
Eigen::VectorXd resolvent(const ReversibleChain& chain, const Eigen::VectorXd& f, double eps);

// Values u(i, k) on (state, offset) pairs with the measure M(i,k) = Q_0(i) p_{0,k}(tau_i w).
struct FormTable {
  long radius = 0;
  int n = 0;
  Eigen::MatrixXd values;  // n x (2 radius + 1), column k + radius
  Eigen::MatrixXd weights; // M

  double value(int i, long k) const { return values(i, k + radius); }
  double weight(int i, long k) const { return weights(i, k + radius); }
  double norm_sq() const;
  double distance_sq(const FormTable& other) const;
};

// grad g(i, k) = g(tau_k tau_i w) - g(tau_i w).
FormTable gradient_form(const ReversibleChain& chain, const Eigen::VectorXd& g);

struct CorrectorReport {
  FormTable h;
  Eigen::VectorXd g;                 // -L_0 g = f, Q_0(g) = 0
  double dirichlet_form = 0.0;       // 2 <g, -L_0 g>
  double dirichlet_residual = 0.0;   // | ||h||^2 - 2 <g, -L_0 g> |
  std::vector<double> eps;           // resolvent parameters
  std::vector<double> resolvent_gap; // ||grad g_eps - h||_{L^2(M)}
  std::vector<double> gap_bound;     // eps sqrt(2 sum_j c_j^2 / mu_j^3)
};

CorrectorReport corrector_form(const ReversibleChain& chain, const Eigen::VectorXd& f,
                               std::vector<double> eps = {1e-3, 1e-6});

// <f, (-L_0)^{-1} f> by a linear solve, and by the spectral integral.
double h_minus1_norm_sq(const ReversibleChain& chain, const Eigen::VectorXd& f);
double h_minus1_norm_sq_spectral(const ReversibleChain& chain, const Eigen::VectorXd& f);

// Spectral measure of f under -L_0: point masses at the eigenvalues.
struct SpectralMeasure {
  std::vector<double> eigenvalues;
  std::vector<double> masses;
};
SpectralMeasure spectral_measure(const ReversibleChain& chain, const Eigen::VectorXd& f);

struct DriftReport {
  double norm = 0.0;                  // ||phi||_{-1}
  double mean = 0.0;                  // Q_0(phi)
  double antisymmetry_residual = 0.0; // relative
};

DriftReport drift_in_H_minus1(const ReversibleChain& chain);

struct DiffusionReport {
  double d_discrete = 0.0;   // D_Y
  double d_continuous = 0.0; // D_cont = E[pi] D_Y
  double mean_pi = 0.0;      // uniform average of pi over shifts
  double second_moment = 0.0; // Q_0[sum_k p_{0,k} x_k^2]
  double drift_norm_sq = 0.0; // ||phi||^2_{-1}
};

// Minimum of Q_0[sum_k p_{0,k}(x_k + grad g)^2] over g (normal equations).
double diffusion_variational(const ReversibleChain& chain);
// D_Y = Q_0[sum p x^2] - 2 ||phi||^2_{-1} via the eigendecomposition.
DiffusionReport diffusion_spectral(const ReversibleChain& chain);

struct DerivativeReport {
  double sole = 0.0;           // Q_0[sum_k p_{0,k}(x_k - phi) h^f(., k)]
  double luna = 0.0;           // -Cov(N^f, N^phi)
  double var_f = 0.0;          // 2||f||^2_{-1} - ||f||^2
  double var_phi = 0.0;
  double cov = 0.0;
  double h1_f = 0.0;           // ||f||^2_{-1}
  double h1_phi = 0.0;
  double h1_sum = 0.0;         // ||f + phi||^2_{-1}
  double inner_f_phi = 0.0;    // <f, phi>
  double ballo1_residual = 0.0; // Q_0[phi sum_k p h^f] + <f, phi>
  double ballo2_residual = 0.0; // -Q_0[sum_k p x_k h^f] - (h1_sum - h1_f - h1_phi)
  double scale = 0.0;
  double gap = 0.0;            // |sole - luna| / scale
};

DerivativeReport derivative_two_ways(const ReversibleChain& chain, const Eigen::VectorXd& f);

struct EinsteinReport {
  double h = 0.0;
  double fd = 0.0;             // (v(h) - v(-h)) / 2h, v(-h) via reflection
  double fd_half = 0.0;
  double richardson = 0.0;
  double d_discrete = 0.0;
  double gap = 0.0;            // |fd - D_Y|
  double relative_gap = 0.0;
  double fd_ct = 0.0;
  double richardson_ct = 0.0;
  double d_continuous = 0.0;
  double gap_ct = 0.0;
  double mean_pi = 0.0;
};

EinsteinReport einstein_check(const PeriodicEnvironment& penv, double h, double tail_tol = kDefaultTailTol);

struct ContinuityRow {
  double lambda = 0.0;
  double value = 0.0; // Q_lambda(f)
};

struct ContinuityScan {
  std::vector<ContinuityRow> rows;
  double max_step_change = 0.0; // max |Q_{l_{j+1}}(f) - Q_{l_j}(f)|
  double slope = 0.0;           // forward difference at the smallest positive grid point
  double sole = 0.0;
  double slope_gap = 0.0;       // |slope - sole| / max(|sole|, tiny)
};

ContinuityScan continuity_scan(const PeriodicEnvironment& penv, const Eigen::VectorXd& f,
                               const std::vector<double>& lambda_grid, double tail_tol = kDefaultTailTol);

// g(w, l) with K_0 = 1, summed exactly over the periodic tail.
double rn_weight(const PeriodicEnvironment& penv, double lambda, long i);

struct RnRow {
  double lambda = 0.0;
  double lp_norm = 0.0;     // ||dQ_l/dQ_0||_{L^p(Q_0)}
  double max_density = 0.0; // max_i dQ_l/dQ_0
  double min_density = 0.0;
  double meta_ratio = 0.0;  // max_i (dQ_l/dP)(i) / (l g(tau_i w, l))
};

struct RnReport {
  double p = 2.0;
  std::vector<RnRow> rows;
  double sup_lp = 0.0;
  double sup_meta = 0.0;
};

RnReport rn_diagnostics(const PeriodicEnvironment& penv, const std::vector<double>& lambda_grid, double p,
                        double tail_tol = kDefaultTailTol);

} // namespace mott
