#pragma once

// Resistor-network view of the rho-truncated walk: effective conductances
// between index sets, the reduced chain on {0, ..., rho}, hitting
// probabilities and mean hitting times.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mott/env.hpp"
#include "mott/index_set.hpp"

namespace mott {

// Largest free nodes x rho handled by the banded elimination (2 doubles per unit).
inline constexpr std::size_t kEliminationLimit = 10'000'000;

struct ConductanceResult {
  double value = 0.0;
  double window_sensitivity = 0.0; // max |value - value at window +-25%|
  double harmonic_residual = 0.0;  // max |Laplacian f| over free nodes
  long free_nodes = 0;
};

// min { sum_{i<j, |i-j|<=rho} c_{i,j} (f(j)-f(i))^2 : f|A = 0, f|B = 1 }.
// Free nodes are the window sites outside A u B; pinned sites are taken from
// A and B within rho of the window (half-lines act as super-nodes).
ConductanceResult effective_conductance(const Medium& env, double lambda, long rho, const IndexSet& A,
                                        const IndexSet& B, IndexInterval window,
                                        bool sensitivity = true);

// sum_{j=k}^{rho-1} 1 / c_{j,j+1}.
double nn_series(const Medium& env, double lambda, long k, long rho);

// Reversible chain on {0, ..., m} given by a symmetric conductance table
// (self-loop conductances allowed on the diagonal).
class FiniteChain {
public:
  static FiniteChain from_conductances(Eigen::MatrixXd c);

  std::size_t size() const { return static_cast<std::size_t>(c_.rows()); }
  double conductance(std::size_t i, std::size_t j) const { return c_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  double weight(std::size_t i) const { return pi_(static_cast<Eigen::Index>(i)); }
  double probability(std::size_t i, std::size_t j) const;
  const Eigen::MatrixXd& conductances() const { return c_; }
  const Eigen::VectorXd& weights() const { return pi_; }
  Eigen::MatrixXd transition() const;

  // i,j,conductance rows for i < j with nonzero conductance.
  void write_edges_csv(std::ostream& os) const;

private:
  Eigen::MatrixXd c_;
  Eigen::VectorXd pi_;
};

// States {0..rho}; interior conductances copied, c'_{i,0} = sum_{i-rho<=m<=0} c_{i,m},
// c'_{i,rho} = sum_{rho<=m<=i+rho} c_{i,m}.
FiniteChain reduce_chain(const Medium& env, double lambda, long rho);

// P_k(tau_{target0} < tau_{target1}).
double hitting_probability(const FiniteChain& chain, std::size_t k, std::size_t target0, std::size_t target1);

// E_start[tau_target] by a linear solve.
double expected_hitting_time(const FiniteChain& chain, std::size_t start, const std::vector<std::size_t>& target);

// Effective conductance between node sets of a finite chain (self-loops ignored).
double effective_conductance(const FiniteChain& chain, const std::vector<std::size_t>& A,
                             const std::vector<std::size_t>& B);

// E_a[tau_Z] against (1 / C_eff(a, Z)) sum_x pi(x) P_x(tau_a < tau_Z).
struct HittingTimeIdentity {
  double mean_time = 0.0;
  double conductance_side = 0.0;
  double relative_residual = 0.0;
};

HittingTimeIdentity check_hitting_time_identity(const FiniteChain& chain, std::size_t start,
                                                const std::vector<std::size_t>& target);

struct DromedarioRow {
  long k = 0;
  double lhs = 0.0;       // P_k(tau_0 < tau_[rho,inf)) for the rho-truncated walk
  double reduced = 0.0;   // P_k(tau_(-inf,0] < tau_[rho,inf)) via the reduced chain
  double rhs = 0.0;       // C_eff(k, (-inf,0]) / C_eff(k, (-inf,0] u [rho,inf))
  double ratio = 0.0;     // lhs / rhs
};

struct DromedarioReport {
  long rho = 0;
  double lambda = 0.0;
  long left_margin = 0;
  std::vector<DromedarioRow> rows;
  double min_ratio = 0.0;
};

// Exact evaluation on the window [-left_margin, rho - 1]; the truncated walk
// is confined to the window (jumps below it are suppressed). left_margin <= 0
// selects max(4 rho, 40 / (lambda d)).
DromedarioReport check_dromedario(const Medium& env, double lambda, long rho, long left_margin = 0);

// P_k(tau_0 < tau_[rho,inf)) for the rho-truncated walk confined to
// [-left_margin, rho - 1] (the quantity behind DromedarioRow::lhs).
std::vector<double> truncated_return_probabilities(const Medium& env, double lambda, long rho, long left_margin);

} // namespace mott
