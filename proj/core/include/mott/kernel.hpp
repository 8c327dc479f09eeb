#pragma once

// Jump rates, conductances and jump probabilities of the biased Mott walk,
// with truncation radii certified by an exponential tail bound.
//
//   r^l_{i,k} = exp(-|x_i - x_k| + l (x_k - x_i) + u(E_i, E_k))
//   c^l_{i,j} = exp(-|x_j - x_i| + l (x_i + x_j) + u(E_i, E_j)) = e^{2 l x_i} r^l_{i,j}
//
// Both vanish on the diagonal. Jump probabilities p^l_{i,i+k} are rates
// normalized at site i, equivalently conductances normalized at site i.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mott/env.hpp"

namespace mott {

inline constexpr double kDefaultTailTol = 1e-12;

// Throws InvalidArgument unless |lambda| < 1.
void require_bias(double lambda);

double rate(const Medium& env, double lambda, long i, long k);
double conductance(const Medium& env, double lambda, long i, long j);
// log c^l_{i,j}; -inf on the diagonal. Use when x_i + x_j is large.
double log_conductance(const Medium& env, double lambda, long i, long j);

// Upper bound 2 e^{2 u_bound} e^{-a K} / (1 - e^{-a}), a = (1-|l|) d, on
// sum_{|k|>K} c^l_{0,k}. Relies on |x_k| >= d |k|.
double tail_bound(double d, double lambda, double u_bound, long K);

// Upper bound on sum_{|k|>K} |x_k|^n c^l_{0,k}. Valid once d K >= n / a, where
// t -> t^n e^{-a t} is decreasing.
double moment_tail_bound(double d, double lambda, double u_bound, long K, int n);

// Smallest K >= 1 with tail_bound(d, l, u_bound, K) <= budget and, for the
// moment order n, d K >= n / a.
long certified_radius(double d, double lambda, double u_bound, double budget, int moment_order = 0);

// Truncated jump law of the walk at site `center`.
struct JumpLaw {
  long center = 0;
  double lambda = 0.0;
  long radius = 0;                   // offsets k in [-radius, radius]
  std::vector<double> probabilities; // p(k) at index k + radius; p(0) = 0
  std::vector<double> displacements; // x_{center+k} - x_center
  double normalization = 0.0;        // pi^l at the shifted environment: sum_k r^l_{center,center+k}
  double tail_mass = 0.0;            // certified bound on discarded mass / normalization

  double probability(long k) const;
  double displacement(long k) const;
  std::size_t size() const { return probabilities.size(); }

  // offset,probability rows.
  void write_csv(std::ostream& os) const;
};

JumpLaw jump_law(const Medium& env, double lambda, long i, double tail_tol = kDefaultTailTol);

// Same law on the fixed offset range [-K, K] (tail_mass still certified).
JumpLaw jump_law_at_radius(const Medium& env, double lambda, long i, long K);

// sum_j c^l_{i,j} over the certified range (absolute coordinates); equals
// e^{2 l x_i} times JumpLaw::normalization.
double total_rate(const Medium& env, double lambda, long i, double tail_tol = kDefaultTailTol);

struct Drift {
  double value = 0.0;
  double error_bound = 0.0; // certified truncation error
};

// phi_l(tau_i w) = sum_k (x_{i+k} - x_i) p^l_{i,i+k}.
Drift local_drift(const Medium& env, double lambda, long i, double tail_tol = kDefaultTailTol);

struct DerivativeTables {
  long radius = 0;
  std::vector<double> first;  // d/dl p^l_{0,k}
  std::vector<double> second; // d^2/dl^2 p^l_{0,k}
  double drift = 0.0;         // phi_l
  double second_moment = 0.0; // sum_k p^l_{0,k} x_k^2
};

DerivativeTables derivative_tables(const Medium& env, double lambda, long i,
                                   double tail_tol = kDefaultTailTol);
DerivativeTables derivative_tables(const JumpLaw& law);

} // namespace mott
