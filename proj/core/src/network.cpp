#include "mott/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mott/error.hpp"
#include "mott/kernel.hpp"

namespace mott {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Network {
  std::vector<long> free_sites;
  std::unordered_map<long, Eigen::Index> index;
  bool touches_a = false, touches_b = false;
  double log_direct = kNegInf; // log of the total A-B conductance
};

// Neighbours j of free site i that carry an edge: other free sites, or pinned
// sites of A and B (edges leaving the window otherwise are truncated).
template <class Visit>
void for_each_edge(const IndexSet& A, const IndexSet& B, IndexInterval window, long rho, long i, Visit&& visit) {
  for (long j = i - rho; j <= i + rho; ++j) {
    if (j == i) continue;
    const bool in_a = A.contains(j), in_b = B.contains(j);
    if (!in_a && !in_b && !window.contains(j)) continue;
    visit(j, in_a, in_b);
  }
}

Network build_network(const Medium& env, double lambda, long rho, const IndexSet& A, const IndexSet& B,
                      IndexInterval window) {
  Network net;
  for (long k = window.lo; k <= window.hi; ++k) {
    if (A.contains(k) || B.contains(k)) continue;
    net.index.emplace(k, static_cast<Eigen::Index>(net.free_sites.size()));
    net.free_sites.push_back(k);
  }
  for (long i : net.free_sites)
    for_each_edge(A, B, window, rho, i, [&](long, bool in_a, bool in_b) {
      net.touches_a = net.touches_a || in_a;
      net.touches_b = net.touches_b || in_b;
    });
  const long lo = window.lo - rho, hi = window.hi + rho;
  for (long a = lo; a <= hi; ++a) {
    if (!A.contains(a)) continue;
    for (long b = std::max(lo, a - rho); b <= std::min(hi, a + rho); ++b) {
      if (b != a && B.contains(b)) {
        net.log_direct = log_add(net.log_direct, log_conductance(env, lambda, a, b));
        net.touches_a = net.touches_b = true;
      }
    }
  }
  if (!net.touches_a || !net.touches_b) throw NumericalError("singular system (disconnected A, B within window)");
  return net;
}

// Transition probabilities of free site i, normalized in log space so that no
// conductance is ever formed (e^{2 lambda x} overflows on long biased windows).
template <class Visit>
void row_probabilities(const Medium& env, double lambda, long rho, const IndexSet& A, const IndexSet& B,
                       IndexInterval window, long i, std::vector<double>& logs, Visit&& visit) {
  logs.clear();
  double top = kNegInf;
  for_each_edge(A, B, window, rho, i, [&](long j, bool, bool) {
    logs.push_back(log_conductance(env, lambda, i, j));
    top = std::max(top, logs.back());
  });
  double total = 0.0;
  for (double l : logs) total += std::exp(l - top);
  std::size_t n = 0;
  for_each_edge(A, B, window, rho, i,
                [&](long j, bool in_a, bool in_b) { visit(j, in_a, in_b, std::exp(logs[n++] - top) / total); });
}

// Walk-form elimination of the free sites in index order (the stochastic
// complement, GTH style): every update adds nonnegative terms and every
// normalizer is a sum of remaining probabilities, so the escape probability
// and the potential keep full relative accuracy whatever the spread of the
// conductances. C_eff = C_A P_A(reach B before returning to A).
ConductanceResult eliminate(const Medium& env, double lambda, long rho, const IndexSet& A, const IndexSet& B,
                            IndexInterval window, const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.free_sites.size());
  const Eigen::Index w = rho;
  Eigen::MatrixXd up = Eigen::MatrixXd::Zero(n, w);   // up(r, d-1) = p(r -> r+d)
  Eigen::MatrixXd down = Eigen::MatrixXd::Zero(n, w); // down(r, d-1) = p(r+d -> r)
  Eigen::VectorXd pa = Eigen::VectorXd::Zero(n), pb = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd log_ca = Eigen::VectorXd::Constant(n, kNegInf); // log c(A, r)
  std::vector<double> logs;

  for (Eigen::Index r = 0; r < n; ++r) {
    const long i = net.free_sites[static_cast<std::size_t>(r)];
    row_probabilities(env, lambda, rho, A, B, window, i, logs, [&](long j, bool in_a, bool in_b, double p) {
      if (in_a) {
        pa(r) += p;
        log_ca(r) = log_add(log_ca(r), log_conductance(env, lambda, j, i));
      } else if (in_b) {
        pb(r) += p;
      } else {
        const Eigen::Index s = net.index.at(j);
        if (s > r) up(r, s - r - 1) = p;
        else down(s, r - s - 1) = p;
      }
    });
  }

  // Row of the A super-node.
  double log_ca_total = net.log_direct;
  for (Eigen::Index r = 0; r < n; ++r) log_ca_total = log_add(log_ca_total, log_ca(r));
  Eigen::VectorXd ap(n);
  for (Eigen::Index r = 0; r < n; ++r) ap(r) = std::exp(log_ca(r) - log_ca_total);
  double escape = std::exp(net.log_direct - log_ca_total);

  Eigen::VectorXd total(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index reach = std::min(w, n - 1 - r);
    total(r) = up.row(r).head(reach).sum() + pa(r) + pb(r);
    if (!(total(r) > 0.0)) throw NumericalError("singular system (isolated node in window)");
    for (Eigen::Index d1 = 1; d1 <= reach; ++d1) {
      const double in = down(r, d1 - 1) / total(r);
      if (in == 0.0) continue;
      const Eigen::Index u = r + d1;
      for (Eigen::Index d2 = 1; d2 <= reach; ++d2) {
        if (d2 == d1) continue;
        const double t = in * up(r, d2 - 1);
        if (d2 > d1) up(u, d2 - d1 - 1) += t;
        else down(r + d2, d1 - d2 - 1) += t;
      }
      pa(u) += in * pa(r);
      pb(u) += in * pb(r);
    }
    const double from_a = ap(r) / total(r);
    for (Eigen::Index d2 = 1; d2 <= reach; ++d2) ap(r + d2) += from_a * up(r, d2 - 1);
    escape += from_a * pb(r);
  }

  Eigen::VectorXd f(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double s = pb(r);
    for (Eigen::Index d = 1; d <= w && r + d < n; ++d) s += up(r, d - 1) * f(r + d);
    f(r) = s / total(r);
  }

  ConductanceResult out;
  out.free_nodes = static_cast<long>(n);
  const double log_value = log_ca_total + std::log(escape);
  if (!(log_value < std::log(std::numeric_limits<double>::max())))
    throw NumericalError("effective conductance overflows a double");
  out.value = std::exp(log_value);
  for (Eigen::Index r = 0; r < n; ++r) {
    const long i = net.free_sites[static_cast<std::size_t>(r)];
    double res = 0.0;
    row_probabilities(env, lambda, rho, A, B, window, i, logs, [&](long j, bool in_a, bool in_b, double p) {
      res += p * (f(r) - (in_a ? 0.0 : in_b ? 1.0 : f(net.index.at(j))));
    });
    out.harmonic_residual = std::max(out.harmonic_residual, std::abs(res));
  }
  return out;
}

// Fallback for very long windows: preconditioned CG on the Laplacian.
ConductanceResult solve_window(const Medium& env, double lambda, long rho, const IndexSet& A, const IndexSet& B,
                               IndexInterval window) {
  if (window.empty()) throw InvalidArgument("empty window");
  const Network net = build_network(env, lambda, rho, A, B, window);
  if (net.free_sites.empty()) {
    ConductanceResult out;
    out.value = std::exp(net.log_direct);
    return out;
  }
  if (net.free_sites.size() * static_cast<std::size_t>(rho) > kEliminationLimit)
    throw NumericalError("window too large for elimination (free nodes x rho above " + std::to_string(kEliminationLimit) + ")");
  return eliminate(env, lambda, rho, A, B, window, net);
}

} // namespace

ConductanceResult effective_conductance(const Medium& env, double lambda, long rho, const IndexSet& A,
                                        const IndexSet& B, IndexInterval window, bool sensitivity) {
  require_bias(lambda);
  if (rho < 1) throw InvalidArgument("rho must be >= 1");
  if (A.empty() || B.empty()) throw InvalidArgument("A and B must be non-empty");
  if (!A.disjoint(B)) throw InvalidArgument("A and B must be disjoint");

  ConductanceResult out = solve_window(env, lambda, rho, A, B, window);
  if (!sensitivity) return out;

  const long len = window.hi - window.lo + 1;
  const long grow = std::max<long>(1, static_cast<long>(std::ceil(0.125 * static_cast<double>(len))));
  const IndexInterval variants[] = {{window.lo - grow, window.hi + grow}, {window.lo + grow, window.hi - grow}};
  for (const auto& w : variants) {
    if (w.empty()) continue;
    try {
      const ConductanceResult alt = solve_window(env, lambda, rho, A, B, w);
      out.window_sensitivity = std::max(out.window_sensitivity, std::abs(alt.value - out.value));
    } catch (const Error&) {
      // Variant window not representable (outside a fixed medium, or sets cut off).
    }
  }
  return out;
}

double nn_series(const Medium& env, double lambda, long k, long rho) {
  if (!(k > 0 && k < rho)) throw InvalidArgument("nn_series needs 0 < k < rho");
  double s = 0.0;
  for (long j = k; j <= rho - 1; ++j) s += 1.0 / conductance(env, lambda, j, j + 1);
  return s;
}

// --------------------------------------------------------------- FiniteChain

FiniteChain FiniteChain::from_conductances(Eigen::MatrixXd c) {
  if (c.rows() != c.cols() || c.rows() < 1) throw InvalidArgument("conductance table must be square");
  const double scale = std::max(1e-300, c.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (!(c(i, j) >= 0.0)) throw InvalidArgument("conductances must be nonnegative");
      if (std::abs(c(i, j) - c(j, i)) > 1e-12 * scale) throw InvalidArgument("conductances must be symmetric");
    }
  FiniteChain out;
  out.pi_ = c.rowwise().sum();
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    if (!(out.pi_(i) > 0.0)) throw InvalidArgument("every state needs positive total conductance");
  out.c_ = std::move(c);
  return out;
}

double FiniteChain::probability(std::size_t i, std::size_t j) const { return conductance(i, j) / weight(i); }

Eigen::MatrixXd FiniteChain::transition() const { return pi_.cwiseInverse().asDiagonal() * c_; }

void FiniteChain::write_edges_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "i,j,conductance\n";
  for (Eigen::Index i = 0; i < c_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < c_.cols(); ++j)
      if (c_(i, j) > 0.0) os << i << ',' << j << ',' << c_(i, j) << '\n';
  os.precision(old);
}

FiniteChain reduce_chain(const Medium& env, double lambda, long rho) {
  require_bias(lambda);
  if (rho < 2) throw InvalidArgument("reduce_chain needs rho >= 2");
  if (!env.contains(-rho) || !env.contains(2 * rho)) throw WindowExceeded("window must cover [-rho, 2 rho]", 2 * rho);
  const auto m = static_cast<Eigen::Index>(rho);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (long i = 1; i <= rho - 1; ++i) {
    for (long j = i + 1; j <= rho - 1; ++j) {
      const double v = j - i <= rho ? conductance(env, lambda, i, j) : 0.0;
      c(i, j) = c(j, i) = v;
    }
    double left = 0.0, right = 0.0;
    for (long q = i - rho; q <= 0; ++q) left += conductance(env, lambda, i, q);
    for (long q = rho; q <= i + rho; ++q) right += conductance(env, lambda, i, q);
    c(i, 0) = c(0, i) = left;
    c(i, m) = c(m, i) = right;
  }
  return FiniteChain::from_conductances(std::move(c));
}

namespace {

// P_x(tau_A < tau_B) for every state x (1 on A, 0 on B).
Eigen::VectorXd harmonic_measure(const FiniteChain& chain, const std::vector<std::size_t>& A,
                                 const std::vector<std::size_t>& B) {
  const std::size_t n = chain.size();
  std::vector<int> role(n, 0); // 1 = A, 2 = B
  for (auto a : A) {
    if (a >= n) throw InvalidArgument("state outside chain");
    role[a] = 1;
  }
  for (auto b : B) {
    if (b >= n) throw InvalidArgument("state outside chain");
    if (role[b] == 1) throw InvalidArgument("target sets must be disjoint");
    role[b] = 2;
  }
  std::vector<Eigen::Index> idx(n, -1);
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (role[i] == 0) idx[i] = m++;

  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    if (role[i] == 1) h(static_cast<Eigen::Index>(i)) = 1.0;
  if (m == 0) return h;

  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (role[i] != 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = chain.probability(i, j);
      if (p == 0.0) continue;
      if (role[j] == 0) M(idx[i], idx[j]) -= p;
      else if (role[j] == 1) rhs(idx[i]) += p;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw NumericalError("singular system (targets unreachable)");
  const Eigen::VectorXd sol = lu.solve(rhs);
  for (std::size_t i = 0; i < n; ++i)
    if (role[i] == 0) h(static_cast<Eigen::Index>(i)) = sol(idx[i]);
  return h;
}

} // namespace

double hitting_probability(const FiniteChain& chain, std::size_t k, std::size_t target0, std::size_t target1) {
  if (target0 == target1) throw InvalidArgument("targets must differ");
  return harmonic_measure(chain, {target0}, {target1})(static_cast<Eigen::Index>(k));
}

double expected_hitting_time(const FiniteChain& chain, std::size_t start, const std::vector<std::size_t>& target) {
  const std::size_t n = chain.size();
  if (start >= n) throw InvalidArgument("state outside chain");
  std::vector<bool> in_target(n, false);
  for (auto t : target) {
    if (t >= n) throw InvalidArgument("state outside chain");
    in_target[t] = true;
  }
  if (target.empty()) throw InvalidArgument("target set is empty");
  if (in_target[start]) return 0.0;
  std::vector<Eigen::Index> idx(n, -1);
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!in_target[i]) idx[i] = m++;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (in_target[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_target[j]) M(idx[i], idx[j]) -= chain.probability(i, j);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw NumericalError("singular system (target unreachable)");
  const Eigen::VectorXd t = lu.solve(Eigen::VectorXd::Ones(m));
  return t(idx[start]);
}

double effective_conductance(const FiniteChain& chain, const std::vector<std::size_t>& A,
                             const std::vector<std::size_t>& B) {
  if (A.empty() || B.empty()) throw InvalidArgument("A and B must be non-empty");
  // The potential equals P_x(tau_B < tau_A) = 1 - harmonic measure of A.
  const Eigen::VectorXd h = harmonic_measure(chain, A, B);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(h.size()) - h;
  double energy = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    for (Eigen::Index j = i + 1; j < f.size(); ++j) {
      const double d = f(i) - f(j);
      energy += chain.conductances()(i, j) * d * d;
    }
  return energy;
}

HittingTimeIdentity check_hitting_time_identity(const FiniteChain& chain, std::size_t start,
                                                const std::vector<std::size_t>& target) {
  HittingTimeIdentity out;
  out.mean_time = expected_hitting_time(chain, start, target);
  const Eigen::VectorXd h = harmonic_measure(chain, {start}, target);
  const double c_eff = effective_conductance(chain, {start}, target);
  out.conductance_side = chain.weights().dot(h) / c_eff;
  out.relative_residual =
      std::abs(out.mean_time - out.conductance_side) / std::max(std::abs(out.mean_time), 1e-300);
  return out;
}

std::vector<double> truncated_return_probabilities(const Medium& env, double lambda, long rho, long left_margin) {
  require_bias(lambda);
  if (rho < 2) throw InvalidArgument("rho must be >= 2");
  if (left_margin < 1) throw InvalidArgument("left margin must be >= 1");
  // Unknowns h(j), j in [-M, rho-1] minus {0}; h(0) = 1, h = 0 on [rho, inf).
  const long M = left_margin;
  auto unknown = [&](long j) -> Eigen::Index { return j < 0 ? j + M : j + M - 1; };
  const auto n = static_cast<Eigen::Index>(M + rho - 1);
  std::vector<Triplet> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (long j = -M; j <= rho - 1; ++j) {
    if (j == 0) continue;
    const JumpLaw law = jump_law(env, lambda, j);
    const Eigen::Index r = unknown(j);
    double moving = 0.0;
    for (long m = -std::min(rho, law.radius); m <= std::min(rho, law.radius); ++m) {
      if (m == 0) continue;
      const long t = j + m;
      if (t < -M) continue; // suppressed: stays put
      const double p = law.probability(m);
      moving += p;
      if (t >= rho) continue;
      if (t == 0) rhs(r) += p;
      else trips.emplace_back(r, unknown(t), -p);
    }
    trips.emplace_back(r, r, moving);
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("singular return-probability system");
  const Eigen::VectorXd h = lu.solve(rhs);
  if (!h.allFinite()) throw NumericalError("singular return-probability system");
  std::vector<double> out(static_cast<std::size_t>(rho), 0.0);
  out[0] = 1.0;
  for (long k = 1; k <= rho - 1; ++k) out[static_cast<std::size_t>(k)] = h(unknown(k));
  return out;
}

DromedarioReport check_dromedario(const Medium& env, double lambda, long rho, long left_margin) {
  require_bias(lambda);
  if (rho < 2) throw InvalidArgument("check_dromedario needs rho >= 2");
  if (left_margin <= 0) {
    if (!(lambda > 0.0)) throw InvalidArgument("default margin needs lambda > 0");
    left_margin = std::max(4 * rho, static_cast<long>(std::ceil(40.0 / (lambda * env.floor()))));
  }
  DromedarioReport rep;
  rep.rho = rho;
  rep.lambda = lambda;
  rep.left_margin = left_margin;

  const std::vector<double> lhs = truncated_return_probabilities(env, lambda, rho, left_margin);
  const FiniteChain reduced = reduce_chain(env, lambda, rho);
  const IndexSet A = IndexSet::at_most(0);
  const IndexSet B = IndexSet::at_least(rho);
  const IndexInterval window{-rho, 4 * rho};

  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (long k = 1; k <= rho - 1; ++k) {
    DromedarioRow row;
    row.k = k;
    row.lhs = lhs[static_cast<std::size_t>(k)];
    row.reduced = hitting_probability(reduced, static_cast<std::size_t>(k), 0, static_cast<std::size_t>(rho));
    const double c_a = effective_conductance(env, lambda, rho, IndexSet::point(k), A, window, false).value;
    const double c_ab = effective_conductance(env, lambda, rho, IndexSet::point(k), A.unite(B), window, false).value;
    row.rhs = c_a / c_ab;
    row.ratio = row.lhs / row.rhs;
    rep.min_ratio = std::min(rep.min_ratio, row.ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace mott
