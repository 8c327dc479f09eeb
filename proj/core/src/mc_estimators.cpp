#include "mott/mc_estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mott/error.hpp"
#include "mott/parallel.hpp"
#include "mott/rng.hpp"

namespace mott {

// ---------------------------------------------------------------- EnvSource

EnvSource EnvSource::periodic(PeriodicEnvironment env) {
  EnvSource s;
  double total = 0.0;
  for (int i = 0; i < env.period(); ++i) {
    total += jump_law(env, 0.0, i).normalization;
    s.start_cdf_.push_back(total);
  }
  for (double& c : s.start_cdf_) c /= total;
  s.start_cdf_.back() = 1.0;
  s.periodic_ = std::move(env);
  return s;
}

EnvSource EnvSource::generated(GeneratorSpec spec) {
  spec.validate();
  EnvSource s;
  s.spec_ = std::move(spec);
  return s;
}

const PeriodicEnvironment& EnvSource::periodic_env() const {
  if (!periodic_) throw InvalidArgument("source is not periodic");
  return *periodic_;
}

const GeneratorSpec& EnvSource::spec() const {
  if (!spec_) throw InvalidArgument("source is not generated");
  return *spec_;
}

WalkDomain EnvSource::domain(std::size_t replica) const {
  if (periodic_) return WalkDomain::periodic(*periodic_);
  GeneratorSpec s = *spec_;
  s.seed = derive_seed(spec_->seed, "mc.env", replica);
  return WalkDomain::generated(std::move(s));
}

long EnvSource::start(std::size_t replica, std::uint64_t seed) const {
  if (!periodic_) return 0;
  const double u = to_unit(derive_seed(seed, "mc.start", replica));
  const auto it = std::upper_bound(start_cdf_.begin(), start_cdf_.end(), u);
  return std::min<long>(static_cast<long>(it - start_cdf_.begin()), static_cast<long>(start_cdf_.size()) - 1);
}

// ------------------------------------------------------------- EstimateCI

bool EstimateCI::within(double x, double k, double extra_se) const {
  return std::abs(estimate - x) <= k * std::sqrt(se * se + extra_se * extra_se);
}

std::uint64_t replica_seed(std::uint64_t master, std::size_t replica) {
  return derive_seed(master, "mc.replica", replica);
}

namespace {

void require_sizes(std::uint64_t n, const McOptions& opts) {
  if (opts.replicas < 1) throw InvalidArgument("replicas must be >= 1");
  if (opts.batches < 2) throw InvalidArgument("batches must be >= 2");
  if (n < opts.batches) throw InvalidArgument("run length must be at least the batch count");
}

EstimateCI aggregate(const std::vector<MeanSE>& runs, const McOptions& opts, std::uint64_t n) {
  EstimateCI ci;
  ci.level = opts.level;
  ci.replicas = runs.size();
  ci.n = n;
  ci.seed = opts.seed;
  for (std::size_t r = 0; r < runs.size(); ++r) ci.replica_seeds.push_back(replica_seed(opts.seed, r));
  ci.batches = runs.front().count;
  if (runs.size() >= 2) {
    std::vector<double> means;
    for (const auto& m : runs) means.push_back(m.mean);
    const MeanSE s = mean_se(means);
    ci.estimate = s.mean;
    ci.se = s.se;
    ci.dof = static_cast<double>(runs.size() - 1);
  } else {
    ci.estimate = runs.front().mean;
    ci.se = runs.front().se;
    ci.dof = static_cast<double>(runs.front().count) - 1.0;
  }
  return ci;
}

// Ratio of means with delta-method standard error from paired samples.
std::pair<double, double> ratio_of_means(const std::vector<double>& a, const std::vector<double>& b) {
  const MeanSE ma = mean_se(a), mb = mean_se(b);
  const double r = ma.mean / mb.mean;
  std::vector<double> d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - r * b[j];
  return {r, mean_se(d).se / std::abs(mb.mean)};
}

Walker make_walker(const EnvSource& source, double lambda, std::size_t r, const McOptions& opts) {
  return Walker(source.domain(r), lambda, replica_seed(opts.seed, r),
                {opts.tail_tol, source.start(r, opts.seed), kNoTruncation});
}

void advance_to(Walker& w, double t) {
  while (w.state().time + w.peek_holding() <= t) w.step_continuous();
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t q = s.find(sep, pos);
    out.emplace_back(s.substr(pos, q == std::string_view::npos ? std::string_view::npos : q - pos));
    if (q == std::string_view::npos) return out;
    pos = q + 1;
  }
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

} // namespace

// -------------------------------------------------------------- observables

std::vector<std::string> observable_names() {
  return {"one", "pi", "inv_pi", "phi", "energy", "gap_bin:a:b", "state:v0,...,vN-1"};
}

Observable make_observable(std::string_view spec) {
  const auto parts = split(spec, ':');
  const std::string& head = parts.front();
  if (parts.size() == 1) {
    if (head == "one") return {"one", [](const SiteView&) { return 1.0; }};
    if (head == "pi") return {"pi", [](const SiteView& v) { return v.law.normalization; }};
    if (head == "inv_pi") return {"inv_pi", [](const SiteView& v) { return 1.0 / v.law.normalization; }};
    if (head == "phi") return {"phi", [](const SiteView& v) { return v.law.drift; }};
    if (head == "energy") return {"energy", [](const SiteView& v) { return v.medium.energy(v.index); }};
  }
  if (head == "gap_bin" && parts.size() == 3) {
    const double a = parse_double(parts[1]), b = parse_double(parts[2]);
    if (!(a < b)) throw InvalidArgument("gap_bin needs a < b");
    return {std::string(spec), [a, b](const SiteView& v) {
              const double z = v.medium.gap(v.index);
              return (z >= a && z < b) ? 1.0 : 0.0;
            }};
  }
  if (head == "state" && parts.size() == 2) {
    std::vector<double> table;
    for (const auto& t : split(parts[1], ',')) table.push_back(parse_double(t));
    if (table.empty()) throw InvalidArgument("state table is empty");
    return {std::string(spec), [table](const SiteView& v) {
              const long n = static_cast<long>(table.size());
              long r = v.index % n;
              if (r < 0) r += n;
              return table[static_cast<std::size_t>(r)];
            }};
  }
  throw InvalidArgument("unknown observable '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------- estimators

EstimateCI estimate_Q(const EnvSource& source, double lambda, const Observable& f, std::uint64_t n,
                      const McOptions& opts) {
  require_sizes(n, opts);
  std::vector<MeanSE> runs(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, lambda, r, opts);
    BatchAccumulator acc(n, opts.batches);
    for (std::uint64_t j = 0; j < n; ++j) {
      acc.add(f.eval({w.domain().medium(), w.state().index, w.site()}));
      w.step();
    }
    runs[r] = acc.summary();
  });
  return aggregate(runs, opts, n);
}

VelocityEstimate estimate_velocity(const EnvSource& source, double lambda, std::uint64_t n, const McOptions& opts) {
  require_sizes(n, opts);
  std::vector<MeanSE> vel(opts.replicas), inv(opts.replicas);
  std::vector<std::vector<double>> vel_batches(opts.replicas), inv_batches(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, lambda, r, opts);
    BatchAccumulator a(n, opts.batches), b(n, opts.batches);
    for (std::uint64_t j = 0; j < n; ++j) {
      b.add(1.0 / w.site().normalization);
      a.add(w.step());
    }
    vel[r] = a.summary();
    inv[r] = b.summary();
    vel_batches[r] = a.batch_means();
    inv_batches[r] = b.batch_means();
  });

  VelocityEstimate out;
  out.discrete = aggregate(vel, opts, n);
  out.inv_pi = aggregate(inv, opts, n);
  std::vector<double> xa, xb;
  if (opts.replicas >= 2) {
    for (std::size_t r = 0; r < opts.replicas; ++r) {
      xa.push_back(vel[r].mean);
      xb.push_back(inv[r].mean);
    }
  } else {
    xa = vel_batches.front();
    xb = inv_batches.front();
  }
  std::tie(out.ratio, out.ratio_se) = ratio_of_means(xa, xb);
  return out;
}

EstimateCI estimate_velocity_ct(const EnvSource& source, double lambda, double t_max, const McOptions& opts) {
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  require_sizes(opts.batches, opts);
  std::vector<MeanSE> runs(opts.replicas);
  const double block = t_max / static_cast<double>(opts.batches);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, lambda, r, opts);
    std::vector<double> v;
    double last = w.state().position;
    for (std::size_t b = 1; b <= opts.batches; ++b) {
      advance_to(w, block * static_cast<double>(b));
      v.push_back((w.state().position - last) / block);
      last = w.state().position;
    }
    runs[r] = mean_se(v);
  });
  return aggregate(runs, opts, 0);
}

EstimateCI estimate_diffusion(const EnvSource& source, std::uint64_t n, const McOptions& opts) {
  require_sizes(n, opts);
  const std::uint64_t m = n / opts.batches;
  std::vector<MeanSE> runs(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, 0.0, r, opts);
    std::vector<double> v;
    for (std::size_t b = 0; b < opts.batches; ++b) {
      double dy = 0.0;
      for (std::uint64_t j = 0; j < m; ++j) dy += w.step();
      v.push_back(dy * dy / static_cast<double>(m));
    }
    runs[r] = mean_se(v);
  });
  return aggregate(runs, opts, n);
}

EstimateCI estimate_diffusion_ct(const EnvSource& source, double t_max, const McOptions& opts) {
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  require_sizes(opts.batches, opts);
  const double block = t_max / static_cast<double>(opts.batches);
  std::vector<MeanSE> runs(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, 0.0, r, opts);
    std::vector<double> v;
    double last = w.state().position;
    for (std::size_t b = 1; b <= opts.batches; ++b) {
      advance_to(w, block * static_cast<double>(b));
      const double dy = w.state().position - last;
      v.push_back(dy * dy / block);
      last = w.state().position;
    }
    runs[r] = mean_se(v);
  });
  return aggregate(runs, opts, 0);
}

MsdSweep msd_sweep(const EnvSource& source, std::vector<std::uint64_t> ns, const McOptions& opts) {
  if (opts.replicas < 2) throw InvalidArgument("msd_sweep needs replicas >= 2");
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 2 || ns.front() == 0) throw InvalidArgument("msd_sweep needs two distinct positive lengths");

  std::vector<std::vector<double>> y2(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, 0.0, r, opts);
    double y = 0.0;
    std::uint64_t done = 0;
    for (std::uint64_t target : ns) {
      for (; done < target; ++done) y += w.step();
      y2[r].push_back(y * y);
    }
  });

  MsdSweep out;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<MeanSE> runs;
    for (std::size_t r = 0; r < opts.replicas; ++r)
      runs.push_back({y2[r][j] / static_cast<double>(ns[j]), 0.0, 1});
    out.rows.push_back({ns[j], aggregate(runs, opts, ns[j])});
  }
  double nbar = 0.0;
  for (auto v : ns) nbar += static_cast<double>(v);
  nbar /= static_cast<double>(ns.size());
  double sxx = 0.0;
  for (auto v : ns) sxx += (static_cast<double>(v) - nbar) * (static_cast<double>(v) - nbar);
  std::vector<MeanSE> slopes;
  for (std::size_t r = 0; r < opts.replicas; ++r) {
    double sxy = 0.0;
    for (std::size_t j = 0; j < ns.size(); ++j) sxy += (static_cast<double>(ns[j]) - nbar) * y2[r][j];
    slopes.push_back({sxy / sxx, 0.0, 1});
  }
  out.slope = aggregate(slopes, opts, ns.back());
  return out;
}

CltEstimate estimate_clt(const EnvSource& source, const Observable& f, std::uint64_t n, const McOptions& opts) {
  if (opts.replicas < 2) throw InvalidArgument("estimate_clt needs replicas >= 2");
  if (n < 1) throw InvalidArgument("run length must be >= 1");
  std::vector<double> sf(opts.replicas), sp(opts.replicas);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
    Walker w = make_walker(source, 0.0, r, opts);
    double a = 0.0, b = 0.0;
    for (std::uint64_t j = 0; j < n; ++j) {
      const SiteLaw& law = w.site();
      a += f.eval({w.domain().medium(), w.state().index, law});
      b += law.drift;
      w.step();
    }
    sf[r] = a;
    sp[r] = b;
  });

  const auto R = static_cast<double>(opts.replicas);
  const double nn = static_cast<double>(n);
  double mf = 0.0, mp = 0.0;
  for (std::size_t r = 0; r < opts.replicas; ++r) {
    mf += sf[r];
    mp += sp[r];
  }
  mf /= R;
  mp /= R;
  const double k = R / (R - 1.0);
  std::vector<MeanSE> vf, vp, vc;
  for (std::size_t r = 0; r < opts.replicas; ++r) {
    const double a = sf[r] - mf, b = sp[r] - mp;
    vf.push_back({k * a * a / nn, 0.0, 1});
    vp.push_back({k * b * b / nn, 0.0, 1});
    vc.push_back({k * a * b / nn, 0.0, 1});
  }
  CltEstimate out;
  out.n = n;
  out.var_f = aggregate(vf, opts, n);
  out.var_phi = aggregate(vp, opts, n);
  out.cov = aggregate(vc, opts, n);
  return out;
}

EinsteinMcReport einstein_mc(const EnvSource& source, const std::vector<double>& lambda_grid, std::uint64_t n,
                             const McOptions& opts) {
  if (lambda_grid.size() < 2) throw InvalidArgument("einstein_mc needs at least two bias values");
  EinsteinMcReport rep;
  std::vector<double> xs, ys, sig;
  for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
    const double l = lambda_grid[j];
    if (!(l > 0.0 && l <= 0.2)) throw InvalidArgument("einstein_mc grid must lie in (0, 0.2]");
    McOptions o = opts;
    o.seed = derive_seed(opts.seed, "einstein.lambda", j);
    const EstimateCI v = estimate_velocity(source, l, n, o).discrete;
    rep.rows.push_back({l, v});
    xs.push_back(l);
    ys.push_back(v.estimate / l);
    sig.push_back(std::max(v.se, 1e-300) / l);
  }
  rep.fit = weighted_linear_fit(xs, ys, sig);
  rep.mobility = rep.fit.intercept;
  rep.mobility_se = rep.fit.intercept_se;
  McOptions o = opts;
  o.seed = derive_seed(opts.seed, "einstein.diffusion");
  rep.diffusion = estimate_diffusion(source, n, o);
  rep.z = (rep.mobility - rep.diffusion.estimate) /
          std::sqrt(rep.mobility_se * rep.mobility_se + rep.diffusion.se * rep.diffusion.se);
  return rep;
}

CalibrationReport ci_calibration(std::size_t trials, std::uint64_t n, std::uint64_t seed, double level,
                                 std::size_t batches, double a, double b) {
  if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) throw InvalidArgument("transition probabilities must lie in (0, 1)");
  CalibrationReport rep;
  rep.trials = trials;
  rep.level = level;
  rep.truth = a / (a + b);
  const double q = t_quantile(level, static_cast<double>(batches) - 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(derive_seed(seed, "calibration", t));
    int state = rng.uniform() < rep.truth ? 1 : 0;
    BatchAccumulator acc(n, batches);
    for (std::uint64_t j = 0; j < n; ++j) {
      acc.add(state);
      const double u = rng.uniform();
      if (state == 0 && u < a) state = 1;
      else if (state == 1 && u < b) state = 0;
    }
    const MeanSE s = acc.summary();
    if (std::abs(s.mean - rep.truth) <= q * s.se) ++rep.covered;
  }
  rep.coverage = trials ? static_cast<double>(rep.covered) / static_cast<double>(trials) : 0.0;
  return rep;
}

} // namespace mott
