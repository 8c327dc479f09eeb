#include "mott/walk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <ostream>

#include "mott/error.hpp"

namespace mott {

// ---------------------------------------------------------------- WalkDomain

WalkDomain WalkDomain::periodic(PeriodicEnvironment env) {
  WalkDomain d;
  d.period_ = env.period();
  d.medium_ = std::make_shared<const PeriodicEnvironment>(std::move(env));
  return d;
}

WalkDomain WalkDomain::fixed(Environment env) {
  WalkDomain d;
  d.medium_ = std::make_shared<const Environment>(std::move(env));
  return d;
}

WalkDomain WalkDomain::generated(GeneratorSpec spec) {
  spec.validate();
  WalkDomain d;
  d.medium_ = std::make_shared<const Environment>(sample_environment(spec));
  d.spec_ = std::move(spec);
  return d;
}

void WalkDomain::extend_to(long radius) {
  if (!spec_) throw WindowExceeded("fixed window cannot grow", radius);
  if (medium_->contains(-radius) && medium_->contains(radius)) return;
  spec_->radius = radius;
  medium_ = std::make_shared<const Environment>(sample_environment(*spec_, radius));
}

// -------------------------------------------------------------------- Walker

std::size_t SiteLaw::pick(double u) const {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

Walker::Walker(WalkDomain domain, double lambda, std::uint64_t seed, WalkerOptions opts)
    : domain_(std::move(domain)), lambda_(lambda), opts_(opts), jumps_(derive_seed(seed, "walk.jump")),
      holds_(derive_seed(seed, "walk.hold")) {
  require_bias(lambda);
  if (opts_.truncation < 1) throw InvalidArgument("truncation range rho must be >= 1");
  if (!domain_.medium().contains(opts_.start)) {
    if (!domain_.extendable()) throw WindowExceeded("start index outside window", std::abs(opts_.start));
    domain_.extend_to(2 * std::abs(opts_.start) + 8);
  }
  if (domain_.is_periodic()) periodic_cache_.resize(static_cast<std::size_t>(domain_.period()));
  state_.index = opts_.start;
  state_.position = domain_.medium().position(opts_.start);
}

std::size_t Walker::cache_key(long index) const {
  const long n = domain_.period();
  long r = index % n;
  if (r < 0) r += n;
  return static_cast<std::size_t>(r);
}

SiteLaw Walker::build_site(long index) {
  JumpLaw law;
  for (;;) {
    try {
      law = jump_law(domain_.medium(), lambda_, index, opts_.tail_tol);
      break;
    } catch (const WindowExceeded& e) {
      if (!domain_.extendable()) throw;
      const auto& m = domain_.medium();
      const long current = std::max(-m.lowest(), m.highest());
      domain_.extend_to(std::max(2 * current, e.required() + 64));
    }
  }

  SiteLaw s;
  s.normalization = law.normalization;
  s.tail_mass = law.tail_mass;
  double drift = 0.0;
  for (std::size_t j = 0; j < law.size(); ++j) drift += law.probabilities[j] * law.displacements[j];
  s.drift = drift;

  const long rho = opts_.truncation;
  double kept = 0.0;
  double cum = 0.0;
  for (long k = -law.radius; k <= law.radius; ++k) {
    if (k == 0 || std::abs(k) > rho) continue;
    const double p = law.probability(k);
    if (p <= 0.0) continue;
    kept += p;
    cum += p;
    s.offsets.push_back(k);
    s.displacements.push_back(law.displacement(k));
    s.cdf.push_back(cum);
  }
  if (rho < law.radius) {
    // Self-loop carries the mass of the suppressed long jumps.
    const double self = std::max(0.0, 1.0 - kept);
    if (self > 0.0) {
      s.offsets.push_back(0);
      s.displacements.push_back(0.0);
      s.cdf.push_back(cum + self);
    }
  }
  if (s.cdf.empty()) throw NumericalError("site has no admissible jumps");
  s.cdf.back() = 1.0;
  return s;
}

const SiteLaw& Walker::site_at(long index) {
  if (domain_.is_periodic()) {
    auto& slot = periodic_cache_[cache_key(index)];
    if (!slot) slot = build_site(index);
    return *slot;
  }
  auto it = cache_.find(index);
  if (it == cache_.end()) it = cache_.emplace(index, build_site(index)).first;
  return it->second;
}

const SiteLaw& Walker::site() { return site_at(state_.index); }

double Walker::step() {
  const SiteLaw& s = site();
  const std::size_t j = s.pick(jumps_.uniform());
  const long next = state_.index + s.offsets[j];
  const double inc = s.displacements[j];
  state_.index = next;
  if (!domain_.medium().contains(next)) {
    if (!domain_.extendable()) throw WindowExceeded("walk left the window", std::abs(next));
    domain_.extend_to(2 * std::abs(next) + 8);
  }
  state_.position = domain_.medium().position(next);
  ++state_.steps;
  return inc;
}

double Walker::peek_holding() { return -std::log(holds_.peek_uniform_open()) / site().normalization; }

double Walker::step_continuous() {
  state_.time += holds_.exponential(site().normalization);
  return step();
}

// ---------------------------------------------------------------- runners

namespace {

void write_record(std::ostream& os, std::uint64_t step, long index, double time) {
  unsigned char buf[24];
  const auto idx = static_cast<std::int64_t>(index);
  std::memcpy(buf, &step, 8);
  std::memcpy(buf + 8, &idx, 8);
  std::memcpy(buf + 16, &time, 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (int f = 0; f < 3; ++f) std::reverse(buf + 8 * f, buf + 8 * f + 8);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

class Recorder {
public:
  Recorder(const RunOptions& opts, double origin) : opts_(opts), origin_(origin) {}

  void visit(const WalkState& s, double increment_sum, bool force = false) {
    traj.n_steps = s.steps;
    traj.final_index = s.index;
    traj.final_displacement = s.position - origin_;
    traj.final_time = s.time;
    traj.increment_sum = increment_sum;
    if (opts_.track_occupation) ++occupation_[s.index];
    if (opts_.binary_log) write_record(*opts_.binary_log, s.steps, s.index, s.time);
    const bool due = s.steps == 0 || force ||
                     (opts_.record_stride > 0 && s.steps % opts_.record_stride == 0);
    if (due && (traj.steps.empty() || traj.steps.back() != s.steps)) {
      traj.steps.push_back(s.steps);
      traj.displacement.push_back(s.position - origin_);
      traj.time.push_back(s.time);
    }
  }

  Trajectory finish(const WalkState& s, double increment_sum, double max_tail) {
    if (traj.steps.empty() || traj.steps.back() != s.steps) {
      traj.steps.push_back(s.steps);
      traj.displacement.push_back(s.position - origin_);
      traj.time.push_back(s.time);
    }
    traj.increment_sum = increment_sum;
    traj.max_tail_mass = max_tail;
    traj.occupation.assign(occupation_.begin(), occupation_.end());
    std::sort(traj.occupation.begin(), traj.occupation.end());
    return std::move(traj);
  }

  Trajectory traj;

private:
  const RunOptions& opts_;
  double origin_;
  std::unordered_map<long, std::uint64_t> occupation_;
};

} // namespace

Trajectory run_discrete(const WalkDomain& domain, double lambda, std::uint64_t n_steps, std::uint64_t seed,
                        const RunOptions& opts) {
  Walker w(domain, lambda, seed, {opts.tail_tol, opts.start, kNoTruncation});
  Recorder rec(opts, w.state().position);
  double sum = 0.0, max_tail = 0.0;
  rec.visit(w.state(), sum);
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    max_tail = std::max(max_tail, w.site().tail_mass);
    sum += w.step();
    rec.visit(w.state(), sum);
  }
  return rec.finish(w.state(), sum, max_tail);
}

Trajectory run_continuous(const WalkDomain& domain, double lambda, double t_max, std::uint64_t seed,
                          const RunOptions& opts) {
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  Walker w(domain, lambda, seed, {opts.tail_tol, opts.start, kNoTruncation});
  Recorder rec(opts, w.state().position);
  double sum = 0.0, max_tail = 0.0;
  rec.visit(w.state(), sum);
  for (;;) {
    max_tail = std::max(max_tail, w.site().tail_mass);
    if (w.state().time + w.peek_holding() > t_max) break;
    sum += w.step_continuous();
    rec.visit(w.state(), sum);
  }
  WalkState end = w.state();
  end.time = t_max;
  Trajectory t = rec.finish(end, sum, max_tail);
  t.final_time = t_max;
  return t;
}

Trajectory run_truncated(const WalkDomain& domain, double lambda, long rho, const StopRule& stop,
                         std::uint64_t seed, const RunOptions& opts) {
  Walker w(domain, lambda, seed, {opts.tail_tol, opts.start, rho});
  Recorder rec(opts, w.state().position);
  double sum = 0.0, max_tail = 0.0;
  rec.visit(w.state(), sum);
  const bool has_target = !stop.target.empty();
  if (has_target && stop.target.contains(w.state().index)) {
    Trajectory t = rec.finish(w.state(), sum, max_tail);
    t.hit = HitRecord{0, w.state().index};
    return t;
  }
  std::optional<HitRecord> hit;
  for (std::uint64_t n = 0; n < stop.max_steps; ++n) {
    max_tail = std::max(max_tail, w.site().tail_mass);
    sum += w.step();
    if (has_target && stop.target.contains(w.state().index)) {
      hit = HitRecord{w.state().steps, w.state().index};
      rec.visit(w.state(), sum, true);
      break;
    }
    rec.visit(w.state(), sum);
  }
  Trajectory t = rec.finish(w.state(), sum, max_tail);
  t.hit = hit;
  t.budget_exhausted = has_target && !hit;
  return t;
}

HittingSample sample_T(const WalkDomain& domain, double lambda, long rho, long target, std::uint64_t seed,
                       std::uint64_t max_steps, long start, double tail_tol) {
  HittingSample out;
  if (start >= target) {
    out.reached = true;
    out.landing = start;
    out.overshoot = start - target;
    return out;
  }
  Walker w(domain, lambda, seed, {tail_tol, start, rho});
  while (w.state().steps < max_steps) {
    w.step();
    if (w.state().index >= target) {
      out.reached = true;
      out.steps = w.state().steps;
      out.landing = w.state().index;
      out.overshoot = out.landing - target;
      return out;
    }
  }
  out.steps = w.state().steps;
  out.landing = w.state().index;
  return out;
}

} // namespace mott
