#pragma once

// Simulation of the discrete-time walk Y_n, the continuous-time walk Y_t and
// the rho-truncated walk X^rho_n on the index lattice of an environment.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mott/env.hpp"
#include "mott/index_set.hpp"
#include "mott/kernel.hpp"
#include "mott/rng.hpp"

namespace mott {

// Sentinel for the untruncated walk (rho = infinity).
inline constexpr long kNoTruncation = kUnboundedIndex;

// The medium a walk runs on. Periodic media are unbounded; generated media
// re-sample a larger window from their spec when the walker approaches the
// edge (draws are coordinate keyed, so this is deterministic); fixed windows
// throw WindowExceeded.
class WalkDomain {
public:
  static WalkDomain periodic(PeriodicEnvironment env);
  static WalkDomain fixed(Environment env);
  static WalkDomain generated(GeneratorSpec spec);

  const Medium& medium() const { return *medium_; }
  bool is_periodic() const { return period_ > 0; }
  int period() const { return period_; }
  bool extendable() const { return spec_.has_value(); }

  // Grows a generated window so it covers [-radius, radius].
  void extend_to(long radius);

private:
  std::shared_ptr<const Medium> medium_;
  std::optional<GeneratorSpec> spec_;
  int period_ = 0;
};

// Sampling table of one site: nonzero-probability offsets and their CDF.
struct SiteLaw {
  std::vector<long> offsets;
  std::vector<double> cdf;           // cdf.back() == 1
  std::vector<double> displacements; // x_{i+k} - x_i per entry
  double normalization = 0.0;        // pi^l(tau_i w): total jump rate of the continuous walk
  double drift = 0.0;                // phi_l(tau_i w), untruncated law
  double tail_mass = 0.0;

  // Entry selected by a uniform in [0, 1).
  std::size_t pick(double u) const;
};

struct WalkState {
  long index = 0;
  double position = 0.0;
  std::uint64_t steps = 0;
  double time = 0.0;
};

struct WalkerOptions {
  double tail_tol = kDefaultTailTol;
  long start = 0;
  long truncation = kNoTruncation; // rho
};

// Step-by-step walker with a per-site law cache. Two RNG streams derived from
// the seed: one for jumps, one for holding times, so the jump chain of the
// continuous-time walk coincides with the discrete walk for the same seed.
class Walker {
public:
  Walker(WalkDomain domain, double lambda, std::uint64_t seed, WalkerOptions opts = {});

  const WalkState& state() const { return state_; }
  const WalkDomain& domain() const { return domain_; }
  double lambda() const { return lambda_; }

  // Law at the current site (cached).
  const SiteLaw& site();
  const SiteLaw& site_at(long index);

  // One jump of the embedded chain (self-loops of the truncated walk count as
  // a step). Returns the displacement increment.
  double step();

  // Holding time the next step_continuous() will spend at the current site.
  double peek_holding();

  // Exponential holding time at the current site followed by a jump.
  // `state().time` accumulates the holding time; returns the increment.
  double step_continuous();

private:
  SiteLaw build_site(long index);
  std::size_t cache_key(long index) const;

  WalkDomain domain_;
  double lambda_;
  WalkerOptions opts_;
  CounterRng jumps_;
  CounterRng holds_;
  WalkState state_;
  std::vector<std::optional<SiteLaw>> periodic_cache_;
  std::unordered_map<long, SiteLaw> cache_;
};

struct HitRecord {
  std::uint64_t step = 0;
  long index = 0;
};

struct Trajectory {
  std::vector<std::uint64_t> steps; // recorded step numbers
  std::vector<double> displacement; // Y at recorded steps
  std::vector<double> time;         // elapsed time at recorded steps
  std::vector<std::pair<long, std::uint64_t>> occupation; // sorted by index
  std::uint64_t n_steps = 0;
  long final_index = 0;
  double final_displacement = 0.0;
  double final_time = 0.0;
  double increment_sum = 0.0; // sum of per-step increments
  double max_tail_mass = 0.0; // largest discarded tail mass met on the path
  std::optional<HitRecord> hit;
  bool budget_exhausted = false;
};

struct RunOptions {
  double tail_tol = kDefaultTailTol;
  long start = 0;
  std::uint64_t record_stride = 1; // 0 records only the endpoints
  bool track_occupation = true;
  std::ostream* binary_log = nullptr; // records: step u64, index i64, time f64 (little endian)
};

// Stop when the walk enters `target` (if non-empty) or after max_steps.
struct StopRule {
  std::uint64_t max_steps = 0;
  IndexSet target;

  static StopRule steps(std::uint64_t n) { return {n, {}}; }
  static StopRule hitting(IndexSet set, std::uint64_t budget) { return {budget, std::move(set)}; }
};

Trajectory run_discrete(const WalkDomain& domain, double lambda, std::uint64_t n_steps, std::uint64_t seed,
                        const RunOptions& opts = {});

// Stops before the first jump that would land past t_max; the reported
// endpoint is Y_{t_max}.
Trajectory run_continuous(const WalkDomain& domain, double lambda, double t_max, std::uint64_t seed,
                          const RunOptions& opts = {});

Trajectory run_truncated(const WalkDomain& domain, double lambda, long rho, const StopRule& stop,
                         std::uint64_t seed, const RunOptions& opts = {});

struct HittingSample {
  std::uint64_t steps = 0; // T_i (when reached)
  long landing = 0;        // X_{T_i}
  long overshoot = 0;      // X_{T_i} - i
  bool reached = false;
};

// T^rho_i = inf{n >= 0 : X^rho_n >= i} for the walk started at `start`.
HittingSample sample_T(const WalkDomain& domain, double lambda, long rho, long target, std::uint64_t seed,
                       std::uint64_t max_steps, long start = 0, double tail_tol = kDefaultTailTol);

} // namespace mott
