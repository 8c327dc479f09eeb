#include "mott/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "mott/error.hpp"

namespace mott {

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) c += (sum - t) + v;
    else c += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

double log_rate_relative(double dx, double lambda, double u) { return -std::abs(dx) + lambda * dx + u; }

} // namespace

void require_bias(double lambda) {
  if (!(std::abs(lambda) < 1.0)) throw InvalidArgument("bias must satisfy |lambda| < 1, got " + std::to_string(lambda));
}

double rate(const Medium& env, double lambda, long i, long k) {
  require_bias(lambda);
  if (i == k) return 0.0;
  const double dx = env.position(k) - env.position(i);
  return std::exp(log_rate_relative(dx, lambda, env.u(i, k)));
}

double log_conductance(const Medium& env, double lambda, long i, long j) {
  require_bias(lambda);
  if (i == j) return -std::numeric_limits<double>::infinity();
  const double xi = env.position(i), xj = env.position(j);
  return -std::abs(xj - xi) + lambda * (xi + xj) + env.u(i, j);
}

double conductance(const Medium& env, double lambda, long i, long j) {
  return i == j ? 0.0 : std::exp(log_conductance(env, lambda, i, j));
}

double tail_bound(double d, double lambda, double u_bound, long K) {
  if (!(d > 0.0)) throw InvalidArgument("tail_bound needs d > 0");
  require_bias(lambda);
  if (K < 1) throw InvalidArgument("tail_bound needs K >= 1");
  const double a = (1.0 - std::abs(lambda)) * d;
  return 2.0 * std::exp(2.0 * u_bound) * std::exp(-a * static_cast<double>(K)) / (-std::expm1(-a));
}

double moment_tail_bound(double d, double lambda, double u_bound, long K, int n) {
  if (n == 0) return tail_bound(d, lambda, u_bound, K);
  require_bias(lambda);
  const double b = 1.0 - std::abs(lambda);
  if (d * static_cast<double>(K) < n / b)
    throw InvalidArgument("moment_tail_bound: K too small for monotone tail");
  const double a = b * d;
  CompensatedSum s;
  for (long k = K + 1;; ++k) {
    const double t = std::pow(d * static_cast<double>(k), n) * std::exp(-a * static_cast<double>(k));
    s.add(t);
    if (t < 1e-18 * s.value() || t == 0.0 || k - K > 10'000'000) break;
  }
  return 2.0 * std::exp(2.0 * u_bound) * s.value();
}

long certified_radius(double d, double lambda, double u_bound, double budget, int moment_order) {
  require_bias(lambda);
  if (!(budget > 0.0)) throw InvalidArgument("tail tolerance must be positive");
  const double b = 1.0 - std::abs(lambda);
  const double a = b * d;
  const double numer = std::log(2.0) + 2.0 * u_bound - std::log(-std::expm1(-a));
  double k_real = (numer - std::log(budget)) / a;
  k_real = std::max(k_real, moment_order / (b * d));
  long K = std::max<long>(1, static_cast<long>(std::ceil(k_real)));
  // Guard against rounding in the closed form.
  while (tail_bound(d, lambda, u_bound, K) > budget) ++K;
  return K;
}

double JumpLaw::probability(long k) const {
  if (k < -radius || k > radius) return 0.0;
  return probabilities[static_cast<std::size_t>(k + radius)];
}

double JumpLaw::displacement(long k) const {
  if (k < -radius || k > radius) throw InvalidArgument("offset outside jump law");
  return displacements[static_cast<std::size_t>(k + radius)];
}

void JumpLaw::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "offset,probability\n";
  for (long k = -radius; k <= radius; ++k) os << k << ',' << probability(k) << '\n';
  os.precision(old);
}

JumpLaw jump_law(const Medium& env, double lambda, long i, double tail_tol) {
  require_bias(lambda);
  if (!(tail_tol > 0.0)) throw InvalidArgument("tail_tol must be positive");
  if (!env.contains(i - 1) || !env.contains(i + 1))
    throw WindowExceeded("site has no neighbours inside the window", std::abs(i) + 1);

  const double xi = env.position(i);
  const double pi_low = std::exp(log_rate_relative(env.position(i + 1) - xi, lambda, env.u(i, i + 1))) +
                        std::exp(log_rate_relative(env.position(i - 1) - xi, lambda, env.u(i, i - 1)));
  const double d = env.floor();
  const double ub = env.u_bound();
  const long K = certified_radius(d, lambda, ub, tail_tol * pi_low, 2);
  if (!env.contains(i - K) || !env.contains(i + K))
    throw WindowExceeded("tail tolerance needs truncation radius " + std::to_string(K) +
                             " beyond the window",
                         std::abs(i) + K);
  return jump_law_at_radius(env, lambda, i, K);
}

JumpLaw jump_law_at_radius(const Medium& env, double lambda, long i, long K) {
  require_bias(lambda);
  if (K < 1) throw InvalidArgument("truncation radius must be >= 1");
  if (!env.contains(i - K) || !env.contains(i + K))
    throw WindowExceeded("truncation radius " + std::to_string(K) + " beyond the window", std::abs(i) + K);

  const double xi = env.position(i);
  const double d = env.floor();
  const double ub = env.u_bound();
  JumpLaw law;
  law.center = i;
  law.lambda = lambda;
  law.radius = K;
  law.probabilities.assign(static_cast<std::size_t>(2 * K + 1), 0.0);
  law.displacements.assign(static_cast<std::size_t>(2 * K + 1), 0.0);
  CompensatedSum total;
  for (long k = -K; k <= K; ++k) {
    const auto idx = static_cast<std::size_t>(k + K);
    const double dx = env.position(i + k) - xi;
    law.displacements[idx] = dx;
    if (k == 0) continue;
    const double r = std::exp(log_rate_relative(dx, lambda, env.u(i, i + k)));
    law.probabilities[idx] = r;
    total.add(r);
  }
  law.normalization = total.value();
  for (double& p : law.probabilities) p /= law.normalization;
  law.tail_mass = tail_bound(d, lambda, ub, K) / law.normalization;
  return law;
}

double total_rate(const Medium& env, double lambda, long i, double tail_tol) {
  const JumpLaw law = jump_law(env, lambda, i, tail_tol);
  return std::exp(2.0 * lambda * env.position(i)) * law.normalization;
}

Drift local_drift(const Medium& env, double lambda, long i, double tail_tol) {
  const JumpLaw law = jump_law(env, lambda, i, tail_tol);
  CompensatedSum s;
  for (std::size_t j = 0; j < law.size(); ++j) s.add(law.probabilities[j] * law.displacements[j]);
  Drift out;
  out.value = s.value();
  const double d = env.floor(), ub = env.u_bound();
  out.error_bound = (moment_tail_bound(d, lambda, ub, law.radius, 1) +
                     std::abs(out.value) * tail_bound(d, lambda, ub, law.radius)) /
                    law.normalization;
  return out;
}

DerivativeTables derivative_tables(const JumpLaw& law) {
  DerivativeTables t;
  t.radius = law.radius;
  CompensatedSum phi, m2;
  for (std::size_t j = 0; j < law.size(); ++j) {
    phi.add(law.probabilities[j] * law.displacements[j]);
    m2.add(law.probabilities[j] * law.displacements[j] * law.displacements[j]);
  }
  t.drift = phi.value();
  t.second_moment = m2.value();
  t.first.resize(law.size());
  t.second.resize(law.size());
  for (std::size_t j = 0; j < law.size(); ++j) {
    const double p = law.probabilities[j], x = law.displacements[j];
    t.first[j] = p * (x - t.drift);
    t.second[j] = p * (x * x - 2.0 * x * t.drift + 2.0 * t.drift * t.drift - t.second_moment);
  }
  return t;
}

DerivativeTables derivative_tables(const Medium& env, double lambda, long i, double tail_tol) {
  return derivative_tables(jump_law(env, lambda, i, tail_tol));
}

} // namespace mott
