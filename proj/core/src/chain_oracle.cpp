#include "mott/chain_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "mott/error.hpp"

namespace mott {

namespace {

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_oracle_bias(double lambda) {
  if (!(std::abs(lambda) <= kLambdaStar)) throw InvalidArgument("oracle bias must satisfy |lambda| <= 0.9");
}

void require_length(const ReversibleChain& chain, const Eigen::VectorXd& f) {
  if (f.size() != chain.size()) throw InvalidArgument("state function has the wrong length");
}

} // namespace

// ------------------------------------------------------------- ChainMatrices

int ChainMatrices::target(int i, long k) const {
  long t = (static_cast<long>(i) + k) % n;
  if (t < 0) t += n;
  return static_cast<int>(t);
}

Eigen::MatrixXd ChainMatrices::generator() const { return P - Eigen::MatrixXd::Identity(n, n); }

ChainMatrices build_chain(const PeriodicEnvironment& penv, double lambda, double tail_tol) {
  require_oracle_bias(lambda);
  ChainMatrices c;
  c.n = penv.period();
  c.lambda = lambda;
  for (int i = 0; i < c.n; ++i) c.radius = std::max(c.radius, jump_law(penv, lambda, i, tail_tol).radius);

  c.P = Eigen::MatrixXd::Zero(c.n, c.n);
  c.weights.resize(c.n);
  c.drift.resize(c.n);
  c.second_moment.resize(c.n);
  for (int i = 0; i < c.n; ++i) {
    JumpLaw law = jump_law_at_radius(penv, lambda, i, c.radius);
    double m1 = 0.0, m2 = 0.0;
    for (long k = -c.radius; k <= c.radius; ++k) {
      const double p = law.probability(k);
      const double x = law.displacement(k);
      c.P(i, c.target(i, k)) += p;
      m1 += p * x;
      m2 += p * x * x;
    }
    c.weights(i) = law.normalization;
    c.drift(i) = m1;
    c.second_moment(i) = m2;
    c.max_tail_mass = std::max(c.max_tail_mass, law.tail_mass);
    c.laws.push_back(std::move(law));
  }

  const Eigen::VectorXd rows = c.P.rowwise().sum();
  if ((rows.array() - 1.0).abs().maxCoeff() > 1e-12) throw NumericalError("transition rows are not stochastic");
  if (lambda == 0.0) {
    const double db = detailed_balance_residual(c, reversible_measure(c));
    if (db > 1e-12) throw NumericalError("lambda = 0 chain fails detailed balance");
  }
  return c;
}

Eigen::VectorXd reversible_measure(const ChainMatrices& chain) { return chain.weights / chain.weights.sum(); }

Eigen::VectorXd stationary(const ChainMatrices& chain) {
  const int n = chain.n;
  const Eigen::MatrixXd T = chain.P.transpose() - Eigen::MatrixXd::Identity(n, n);
  if (n > 1) {
    Eigen::FullPivLU<Eigen::MatrixXd> rank_lu(T);
    rank_lu.setThreshold(1e-10);
    if (rank_lu.rank() != n - 1) throw NumericalError("chain is not irreducible");
  }
  Eigen::MatrixXd A = T;
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd q = lu.solve(b);
  q += lu.solve(b - A * q); // one refinement step
  return q / q.sum();
}

double stationarity_residual(const ChainMatrices& chain, const Eigen::VectorXd& q) {
  return sup_norm(chain.P.transpose() * q - q);
}

double detailed_balance_residual(const ChainMatrices& chain, const Eigen::VectorXd& q) {
  double r = 0.0;
  for (int i = 0; i < chain.n; ++i)
    for (int j = i + 1; j < chain.n; ++j) r = std::max(r, std::abs(q(i) * chain.P(i, j) - q(j) * chain.P(j, i)));
  return r;
}

double exact_velocity(const PeriodicEnvironment& penv, double lambda, double tail_tol) {
  const ChainMatrices c = build_chain(penv, lambda, tail_tol);
  return stationary(c).dot(c.drift);
}

double exact_velocity_ct(const PeriodicEnvironment& penv, double lambda, double tail_tol) {
  const ChainMatrices c = build_chain(penv, lambda, tail_tol);
  const Eigen::VectorXd q = stationary(c);
  return q.dot(c.drift) / q.dot(c.weights.cwiseInverse());
}

// ----------------------------------------------------------- ReversibleChain

ReversibleChain::ReversibleChain(ChainMatrices chain) : chain_(std::move(chain)) {
  if (chain_.lambda != 0.0) throw InvalidArgument("reversible chain needs lambda = 0");
  q0_ = reversible_measure(chain_);
}

ReversibleChain::ReversibleChain(const PeriodicEnvironment& penv, double tail_tol)
    : ReversibleChain(build_chain(penv, 0.0, tail_tol)) {}

double ReversibleChain::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  return (q0_.array() * f.array() * g.array()).sum();
}

Eigen::VectorXd ReversibleChain::apply_generator(const Eigen::VectorXd& g) const { return chain_.P * g - g; }

void ReversibleChain::require_mean_zero(const Eigen::VectorXd& f) const {
  require_length(*this, f);
  if (std::abs(mean(f)) > 1e-10 * std::max(1.0, sup_norm(f)))
    throw InvalidArgument("function has nonzero Q_0 mean (not in H_-1)");
}

Eigen::VectorXd ReversibleChain::center(const Eigen::VectorXd& f) const {
  require_length(*this, f);
  return f.array() - mean(f);
}

Eigen::VectorXd ReversibleChain::poisson(const Eigen::VectorXd& f) const {
  require_mean_zero(f);
  if (!poisson_ready_) {
    const int n = size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - chain_.P + Eigen::VectorXd::Ones(n) * q0_.transpose();
    poisson_lu_.compute(A);
    poisson_ready_ = true;
  }
  Eigen::VectorXd g = poisson_lu_.solve(f);
  g += poisson_lu_.solve(f + apply_generator(g) - Eigen::VectorXd::Ones(size()) * mean(g));
  return g;
}

const ReversibleChain::Spectrum& ReversibleChain::spectrum() const {
  if (spectrum_ready_) return spectrum_;
  const int n = size();
  const Eigen::VectorXd s = q0_.cwiseSqrt();
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = s(i) * ((i == j ? 1.0 : 0.0) - chain_.P(i, j)) / s(j);
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  spectrum_.values = es.eigenvalues();
  spectrum_.vectors = s.cwiseInverse().asDiagonal() * es.eigenvectors();
  spectrum_ready_ = true;
  return spectrum_;
}

Eigen::VectorXd resolvent(const ReversibleChain& chain, const Eigen::VectorXd& f, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("resolvent parameter must be positive");
  require_length(chain, f);
  const int n = chain.size();
  const Eigen::MatrixXd A = (1.0 + eps) * Eigen::MatrixXd::Identity(n, n) - chain.chain().P;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd g = lu.solve(f);
  g += lu.solve(f - A * g);
  return g;
}

// ----------------------------------------------------------------- FormTable

double FormTable::norm_sq() const { return (weights.array() * values.array().square()).sum(); }

double FormTable::distance_sq(const FormTable& other) const {
  if (other.values.rows() != values.rows() || other.values.cols() != values.cols())
    throw InvalidArgument("form tables have different shapes");
  return (weights.array() * (values - other.values).array().square()).sum();
}

FormTable gradient_form(const ReversibleChain& chain, const Eigen::VectorXd& g) {
  require_length(chain, g);
  const ChainMatrices& c = chain.chain();
  FormTable t;
  t.radius = c.radius;
  t.n = c.n;
  const long width = 2 * c.radius + 1;
  t.values = Eigen::MatrixXd::Zero(c.n, width);
  t.weights = Eigen::MatrixXd::Zero(c.n, width);
  for (int i = 0; i < c.n; ++i)
    for (long k = -c.radius; k <= c.radius; ++k) {
      t.values(i, k + c.radius) = g(c.target(i, k)) - g(i);
      t.weights(i, k + c.radius) = chain.q0()(i) * c.probability(i, k);
    }
  return t;
}

CorrectorReport corrector_form(const ReversibleChain& chain, const Eigen::VectorXd& f, std::vector<double> eps) {
  CorrectorReport r;
  r.g = chain.poisson(f);
  r.h = gradient_form(chain, r.g);
  r.dirichlet_form = -2.0 * chain.inner(r.g, chain.apply_generator(r.g));
  r.dirichlet_residual = std::abs(r.h.norm_sq() - r.dirichlet_form);

  const auto& sp = chain.spectrum();
  double weight = 0.0;
  for (Eigen::Index j = 1; j < sp.values.size(); ++j) {
    const double cj = chain.inner(f, sp.vectors.col(j));
    weight += cj * cj / std::pow(sp.values(j), 3);
  }
  for (double e : eps) {
    const FormTable he = gradient_form(chain, resolvent(chain, f, e));
    r.eps.push_back(e);
    r.resolvent_gap.push_back(std::sqrt(he.distance_sq(r.h)));
    r.gap_bound.push_back(e * std::sqrt(2.0 * weight));
  }
  return r;
}

double h_minus1_norm_sq(const ReversibleChain& chain, const Eigen::VectorXd& f) {
  return chain.inner(f, chain.poisson(f));
}

double h_minus1_norm_sq_spectral(const ReversibleChain& chain, const Eigen::VectorXd& f) {
  chain.require_mean_zero(f);
  const auto& sp = chain.spectrum();
  double s = 0.0;
  for (Eigen::Index j = 1; j < sp.values.size(); ++j) {
    const double cj = chain.inner(f, sp.vectors.col(j));
    s += cj * cj / sp.values(j);
  }
  return s;
}

SpectralMeasure spectral_measure(const ReversibleChain& chain, const Eigen::VectorXd& f) {
  require_length(chain, f);
  const auto& sp = chain.spectrum();
  SpectralMeasure m;
  for (Eigen::Index j = 0; j < sp.values.size(); ++j) {
    const double cj = chain.inner(f, sp.vectors.col(j));
    m.eigenvalues.push_back(sp.values(j));
    m.masses.push_back(cj * cj);
  }
  return m;
}

DriftReport drift_in_H_minus1(const ReversibleChain& chain) {
  const ChainMatrices& c = chain.chain();
  DriftReport r;
  r.mean = chain.mean(c.drift);
  r.norm = std::sqrt(std::max(0.0, h_minus1_norm_sq(chain, c.drift)));

  const Eigen::VectorXd h = chain.poisson(c.drift);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (int i = 0; i < c.n; ++i)
    for (long k = -c.radius; k <= c.radius; ++k) {
      const double xc = c.displacement(i, k) * c.weights(i) * c.probability(i, k);
      lhs += xc * h(i);
      rhs -= xc * h(c.target(i, k));
      scale += std::abs(xc);
    }
  scale *= std::max(sup_norm(h), 1e-300);
  r.antisymmetry_residual = std::abs(lhs - rhs) / scale;
  return r;
}

double diffusion_variational(const ReversibleChain& chain) {
  const ChainMatrices& c = chain.chain();
  const int n = c.n;
  // F(g) = g'Hg + 2b'g + c0 over (state, offset) terms q0 p (x + g_t - g_i)^2.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  double c0 = 0.0;
  for (int i = 0; i < n; ++i)
    for (long k = -c.radius; k <= c.radius; ++k) {
      const double w = chain.q0()(i) * c.probability(i, k);
      if (w == 0.0) continue;
      const double a = c.displacement(i, k);
      c0 += w * a * a;
      const int t = c.target(i, k);
      if (t == i) continue;
      H(t, t) += w;
      H(i, i) += w;
      H(t, i) -= w;
      H(i, t) -= w;
      b(t) += w * a;
      b(i) -= w * a;
    }
  if (n == 1) return c0;
  // Gauge g_0 = 0.
  const Eigen::MatrixXd Hr = H.bottomRightCorner(n - 1, n - 1);
  const Eigen::VectorXd br = b.tail(n - 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Hr);
  if (ldlt.info() != Eigen::Success) throw NumericalError("normal equations are singular");
  const Eigen::VectorXd g = ldlt.solve(-br);
  return c0 + br.dot(g);
}

DiffusionReport diffusion_spectral(const ReversibleChain& chain) {
  const ChainMatrices& c = chain.chain();
  DiffusionReport r;
  r.second_moment = chain.q0().dot(c.second_moment);
  r.drift_norm_sq = h_minus1_norm_sq_spectral(chain, c.drift);
  r.d_discrete = r.second_moment - 2.0 * r.drift_norm_sq;
  r.mean_pi = c.weights.mean();
  r.d_continuous = r.mean_pi * r.d_discrete;
  return r;
}

DerivativeReport derivative_two_ways(const ReversibleChain& chain, const Eigen::VectorXd& f) {
  chain.require_mean_zero(f);
  const ChainMatrices& c = chain.chain();
  const Eigen::VectorXd& phi = c.drift;
  const FormTable h = gradient_form(chain, chain.poisson(f));

  DerivativeReport r;
  double sum_phi_h = 0.0, sum_x_h = 0.0;
  for (int i = 0; i < c.n; ++i) {
    double s = 0.0, sh = 0.0, sx = 0.0;
    for (long k = -c.radius; k <= c.radius; ++k) {
      const double p = c.probability(i, k);
      const double hv = h.value(i, k);
      const double x = c.displacement(i, k);
      s += p * (x - phi(i)) * hv;
      sh += p * hv;
      sx += p * x * hv;
    }
    const double q = chain.q0()(i);
    r.sole += q * s;
    sum_phi_h += q * phi(i) * sh;
    sum_x_h += q * sx;
  }

  r.h1_f = h_minus1_norm_sq(chain, f);
  r.h1_phi = h_minus1_norm_sq(chain, phi);
  r.h1_sum = h_minus1_norm_sq(chain, f + phi);
  r.inner_f_phi = chain.inner(f, phi);
  r.cov = r.h1_sum - r.h1_f - r.h1_phi - r.inner_f_phi;
  r.luna = -r.cov;
  r.var_f = 2.0 * r.h1_f - chain.inner(f, f);
  r.var_phi = 2.0 * r.h1_phi - chain.inner(phi, phi);
  r.ballo1_residual = sum_phi_h + r.inner_f_phi;
  r.ballo2_residual = -sum_x_h - (r.h1_sum - r.h1_f - r.h1_phi);
  r.scale = std::max({std::abs(r.sole), std::abs(r.luna), std::sqrt(std::max(0.0, r.h1_f * r.h1_phi))});
  r.gap = std::abs(r.sole - r.luna) / (r.scale > 0.0 ? r.scale : 1.0);
  return r;
}

EinsteinReport einstein_check(const PeriodicEnvironment& penv, double h, double tail_tol) {
  if (!(h > 0.0 && h <= 0.05)) throw InvalidArgument("finite-difference step must lie in (0, 0.05]");
  const PeriodicEnvironment mirror = penv.reflect();
  auto fd = [&](double step, bool ct) {
    const double up = ct ? exact_velocity_ct(penv, step, tail_tol) : exact_velocity(penv, step, tail_tol);
    const double down = ct ? -exact_velocity_ct(mirror, step, tail_tol) : -exact_velocity(mirror, step, tail_tol);
    return (up - down) / (2.0 * step);
  };

  EinsteinReport r;
  r.h = h;
  const DiffusionReport d = diffusion_spectral(ReversibleChain(penv, tail_tol));
  r.d_discrete = d.d_discrete;
  r.d_continuous = d.d_continuous;
  r.mean_pi = d.mean_pi;
  r.fd = fd(h, false);
  r.fd_half = fd(h / 2.0, false);
  r.richardson = (4.0 * r.fd_half - r.fd) / 3.0;
  r.gap = std::abs(r.fd - r.d_discrete);
  r.relative_gap = r.gap / std::abs(r.d_discrete);
  r.fd_ct = fd(h, true);
  r.richardson_ct = (4.0 * fd(h / 2.0, true) - r.fd_ct) / 3.0;
  r.gap_ct = std::abs(r.fd_ct - r.d_continuous);
  return r;
}

ContinuityScan continuity_scan(const PeriodicEnvironment& penv, const Eigen::VectorXd& f,
                               const std::vector<double>& lambda_grid, double tail_tol) {
  if (f.size() != penv.period()) throw InvalidArgument("state function has the wrong length");
  if (lambda_grid.empty()) throw InvalidArgument("empty lambda grid");
  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());

  ContinuityScan s;
  for (double l : grid) {
    if (l < 0.0) throw InvalidArgument("continuity grid must lie in [0, lambda*]");
    s.rows.push_back({l, stationary(build_chain(penv, l, tail_tol)).dot(f)});
  }
  for (std::size_t j = 1; j < s.rows.size(); ++j)
    s.max_step_change = std::max(s.max_step_change, std::abs(s.rows[j].value - s.rows[j - 1].value));

  const ReversibleChain chain(penv, tail_tol);
  s.sole = derivative_two_ways(chain, chain.center(f)).sole;
  const auto first = std::find_if(grid.begin(), grid.end(), [](double l) { return l > 0.0; });
  if (first != grid.end()) {
    const double q0f = chain.mean(f);
    const double qf = stationary(build_chain(penv, *first, tail_tol)).dot(f);
    s.slope = (qf - q0f) / *first;
    s.slope_gap = std::abs(s.slope - s.sole) / std::max(std::abs(s.sole), 1e-300);
  }
  return s;
}

double rn_weight(const PeriodicEnvironment& penv, double lambda, long i) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("rn_weight needs lambda in (0, 1)");
  const double xi = penv.position(i);
  const double c_left =
      std::exp(-penv.gap(i - 1) + lambda * (penv.position(i - 1) - xi) + penv.u(i - 1, i));
  const double c_right = std::exp(-penv.gap(i) + lambda * penv.gap(i) + penv.u(i, i + 1));
  double s = 0.0;
  for (long j = 0; j < penv.period(); ++j)
    s += std::exp(-2.0 * lambda * (penv.position(i + j) - xi) + (1.0 - lambda) * penv.gap(i + j));
  s /= -std::expm1(-2.0 * lambda * penv.length());
  return (c_left + c_right) * s;
}

RnReport rn_diagnostics(const PeriodicEnvironment& penv, const std::vector<double>& lambda_grid, double p,
                        double tail_tol) {
  if (!(p >= 2.0)) throw InvalidArgument("L^p order must be >= 2");
  const ChainMatrices c0 = build_chain(penv, 0.0, tail_tol);
  const Eigen::VectorXd q0 = reversible_measure(c0);
  const int n = c0.n;

  RnReport rep;
  rep.p = p;
  for (double l : lambda_grid) {
    if (!(l > 0.0 && l <= kLambdaStar)) throw InvalidArgument("rn grid must lie in (0, lambda*]");
    const Eigen::VectorXd q = stationary(build_chain(penv, l, tail_tol));
    const Eigen::VectorXd density = q.cwiseQuotient(q0);
    RnRow row;
    row.lambda = l;
    row.lp_norm = std::pow((q0.array() * density.array().pow(p)).sum(), 1.0 / p);
    row.max_density = density.maxCoeff();
    row.min_density = density.minCoeff();
    for (int i = 0; i < n; ++i)
      row.meta_ratio = std::max(row.meta_ratio, n * q(i) / (l * rn_weight(penv, l, i)));
    rep.sup_lp = std::max(rep.sup_lp, row.lp_norm);
    rep.sup_meta = std::max(rep.sup_meta, row.meta_ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace mott
