#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <type_traits>

#include <CLI11.hpp>
#include <json.hpp>

#include "mott/mott.hpp"

namespace mott::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fnv_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// ------------------------------------------------------------------ settings

struct Settings {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double tail_tol = kDefaultTailTol;

  std::string env; // empty: periodic when --gaps is given, else period1-lattice
  std::vector<double> gaps;
  std::vector<double> energies;
  double floor = 1.0;
  double beta = 0.0;
  std::string gap_law = "exponential";
  double gap_value = 1.0;
  double gap_rate = 3.0;
  double tail_index = 2.5;
  double tail_scale = 1.0;
  double tail_cap = 20.0;
  std::string energy_law = "zero";
  double energy_amplitude = 0.0;
  std::uint64_t env_seed = 0;
  long radius = 64;

  double lambda = 0.0;
  long site = 0;
  std::uint64_t steps = 1000;
  double time = 0.0;
  long rho = 0;
  long target = 0;
  std::uint64_t budget = 100'000'000;
  std::size_t replicas = 1;
  std::size_t batches = kDefaultBatches;
  std::uint64_t stride = 1;
  bool binary_log = false;

  std::string set_a = "0";
  std::string set_b = "4:inf";
  std::string window = "-64:64";
  bool dromedario = false;
  bool reduced_chain = false;

  std::string check = "stationary";
  std::vector<double> f;
  bool center = false;
  double h = 1e-3;
  std::vector<double> hs{1e-2, 5e-3, 2.5e-3, 1e-3};
  std::vector<double> grid;
  double p = 2.0;
  std::string observable = "phi";
  std::size_t samples = 10'000;
  double mgf_p = 2.0;
};

// Options whose values make up the resolved (hashed) config of a subcommand.
struct Registry {
  std::vector<std::pair<std::string, std::function<json()>>> entries;

  json resolved(const std::string& sub) const {
    json j = json::object();
    j["subcommand"] = sub;
    for (const auto& [k, v] : entries) j[k] = v();
    return j;
  }
};

template <class T>
CLI::Option* bind_option(CLI::App* app, Registry& reg, const std::string& name, T& var, const std::string& desc) {
  CLI::Option* o;
  if constexpr (std::is_same_v<T, bool>) {
    o = app->add_flag("--" + name, var, desc);
  } else {
    o = app->add_option("--" + name, var, desc)->capture_default_str();
    if constexpr (std::is_same_v<T, std::vector<double>>) o->delimiter(',');
  }
  reg.entries.emplace_back(name, [&var] { return json(var); });
  return o;
}

void add_common(CLI::App* app, Registry& reg, Settings& s) {
  app->add_option("--config", s.config, "JSON config file (flat keys named after the long options)");
  app->add_option("--out", s.out, "Root directory for run directories")->capture_default_str();
  app->add_option("--threads", s.threads, "Worker threads (results do not depend on it)")->capture_default_str();
  bind_option(app, reg, "seed", s.seed, "Master seed");
  bind_option(app, reg, "tail-tol", s.tail_tol, "Relative tail tolerance of the jump laws");
}

void add_env(CLI::App* app, Registry& reg, Settings& s, bool iid) {
  std::vector<std::string> kinds{"period1-lattice", "lattice", "periodic"};
  if (iid) kinds.push_back("iid");
  bind_option(app, reg, "env", s.env, "Environment: period1-lattice | periodic | iid (default: periodic if --gaps is given)")
      ->check(CLI::IsMember(kinds));
  bind_option(app, reg, "gaps", s.gaps, "Periodic gaps Z_0..Z_{N-1}");
  bind_option(app, reg, "energies", s.energies, "Periodic energies E_0..E_{N-1} (default 0)");
  bind_option(app, reg, "floor", s.floor, "Gap floor d");
  bind_option(app, reg, "beta", s.beta, "Inverse temperature of u (0 gives u = 0)");
  if (!iid) return;
  bind_option(app, reg, "gap-law", s.gap_law, "constant | exponential | heavy_tail")
      ->check(CLI::IsMember({"constant", "exponential", "heavy_tail"}));
  bind_option(app, reg, "gap-value", s.gap_value, "Constant gap");
  bind_option(app, reg, "gap-rate", s.gap_rate, "Rate of the exponential excess over d");
  bind_option(app, reg, "tail-index", s.tail_index, "Heavy-tail index");
  bind_option(app, reg, "tail-scale", s.tail_scale, "Heavy-tail scale");
  bind_option(app, reg, "tail-cap", s.tail_cap, "Heavy-tail truncation");
  bind_option(app, reg, "energy-law", s.energy_law, "zero | uniform")->check(CLI::IsMember({"zero", "uniform"}));
  bind_option(app, reg, "energy-amplitude", s.energy_amplitude, "Uniform energies on [-A, A]");
  bind_option(app, reg, "env-seed", s.env_seed, "Seed of the environment draws");
  bind_option(app, reg, "radius", s.radius, "Window radius W");
}

// -------------------------------------------------------------- environments

PairFunction pair_of(const Settings& s) {
  if (s.beta < 0.0) throw InvalidArgument("beta must be >= 0");
  return s.beta > 0.0 ? PairFunction::mott_form(s.beta) : PairFunction::none();
}

void resolve_env(Settings& s) {
  if (s.env.empty()) s.env = s.gaps.empty() ? "period1-lattice" : "periodic";
  if (s.env != "periodic" && !s.gaps.empty())
    throw InvalidArgument("--gaps only applies to --env periodic");
  if (!s.energies.empty() && s.energies.size() != s.gaps.size())
    throw InvalidArgument("--energies needs one value per gap");
}

bool is_lattice(const Settings& s) { return s.env == "period1-lattice" || s.env == "lattice"; }

PeriodicEnvironment periodic_env(const Settings& s) {
  if (is_lattice(s)) return unit_lattice(pair_of(s));
  if (s.env != "periodic") throw InvalidArgument("this subcommand needs a periodic environment");
  if (s.gaps.empty()) throw InvalidArgument("--gaps is required for --env periodic");
  std::vector<double> e = s.energies;
  if (e.empty()) e.assign(s.gaps.size(), 0.0);
  return make_periodic(s.gaps, e, s.floor, pair_of(s));
}

GeneratorSpec generator(const Settings& s) {
  GeneratorSpec g;
  if (s.gap_law == "constant") g.gaps.kind = GapLaw::Kind::constant;
  else if (s.gap_law == "exponential") g.gaps.kind = GapLaw::Kind::exponential;
  else g.gaps.kind = GapLaw::Kind::heavy_tail;
  g.gaps.value = s.gap_value;
  g.gaps.rate = s.gap_rate;
  g.gaps.tail_index = s.tail_index;
  g.gaps.scale = s.tail_scale;
  g.gaps.cap = s.tail_cap;
  g.energies.kind = s.energy_law == "uniform" ? EnergyLaw::Kind::uniform : EnergyLaw::Kind::zero;
  g.energies.amplitude = s.energy_amplitude;
  g.floor = s.floor;
  g.seed = s.env_seed;
  g.radius = s.radius;
  g.pair = pair_of(s);
  g.validate();
  return g;
}

bool is_iid(const Settings& s) { return s.env == "iid"; }

WalkDomain domain_of(const Settings& s) {
  return is_iid(s) ? WalkDomain::generated(generator(s)) : WalkDomain::periodic(periodic_env(s));
}

EnvSource source_of(const Settings& s) {
  return is_iid(s) ? EnvSource::generated(generator(s)) : EnvSource::periodic(periodic_env(s));
}

// ------------------------------------------------------------------ parsing

long parse_bound(const std::string& t) {
  if (t == "inf" || t == "+inf") return kUnboundedIndex;
  if (t == "-inf") return -kUnboundedIndex;
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw InvalidArgument("bad index '" + t + "'");
  return v;
}

IndexInterval parse_interval(const std::string& t) {
  const auto c = t.find(':');
  if (c == std::string::npos) {
    const long k = parse_bound(t);
    return {k, k};
  }
  return {parse_bound(t.substr(0, c)), parse_bound(t.substr(c + 1))};
}

// "lo:hi,k,..." with inf / -inf allowed.
IndexSet parse_set(const std::string& t) {
  IndexSet s;
  std::stringstream ss(t);
  std::string part;
  while (std::getline(ss, part, ',')) s = s.unite(IndexSet{parse_interval(part)});
  if (s.empty()) throw InvalidArgument("empty index set '" + t + "'");
  return s;
}

// ---------------------------------------------------------------- artifacts

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class RunDir {
public:
  RunDir(const fs::path& root, const std::string& sub, json config) : config_(std::move(config)) {
    hash_ = fnv_hex(config_.dump());
    fs::create_directories(root);
    fs::path p = root / (sub + "-" + hash_);
    for (int k = 2; fs::exists(p); ++k) p = root / (sub + "-" + hash_ + "-" + std::to_string(k));
    fs::create_directory(p);
    path_ = p;
    write("config.json", config_.dump(2) + "\n");
  }

  const fs::path& path() const { return path_; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream os(path_ / name, std::ios::binary);
    os << content;
    if (!os) throw Error("cannot write " + (path_ / name).string());
    artifacts_[name] = fnv_hex(content);
  }

  void finish(const std::string& status) {
    json m;
    m["config"] = config_;
    m["config_hash"] = hash_;
    m["seed"] = config_.value("seed", json());
    m["version"] = kVersion;
    m["status"] = status;
    m["artifacts"] = artifacts_;
    std::ofstream os(path_ / "manifest.json");
    os << m.dump(2) << "\n";
  }

private:
  json config_;
  std::string hash_;
  fs::path path_;
  std::map<std::string, std::string> artifacts_;
};

struct Context {
  Settings& s;
  std::ostream& out;
  std::unique_ptr<RunDir> run;
};

json spectrum_rows(const ReversibleChain& chain, const Eigen::VectorXd& f, std::string& csv) {
  const SpectralMeasure m = spectral_measure(chain, f);
  csv = "index,eigenvalue,mass\n";
  for (std::size_t j = 0; j < m.eigenvalues.size(); ++j)
    csv += std::to_string(j) + "," + num(m.eigenvalues[j]) + "," + num(m.masses[j]) + "\n";
  return json{{"eigenvalues", m.eigenvalues}, {"masses", m.masses}};
}

// --------------------------------------------------------------- subcommands

json cmd_gen_env(Context& c) {
  const Settings& s = c.s;
  std::ostringstream csv;
  json summary;
  if (is_iid(s)) {
    const GeneratorSpec g = generator(s);
    sample_environment(g).write_csv(csv);
    const AssumptionReport a = check_assumptions(g, s.samples, s.mgf_p);
    summary = {{"samples", a.samples}, {"floor", a.floor}, {"min_gap", a.min_gap}, {"mean_gap", a.mean_gap},
               {"p", a.p}, {"mgf_estimate", a.mgf_estimate}, {"p_max", a.p_max},
               {"mgf_diverges", a.mgf_diverges}, {"floor_respected", a.floor_respected}};
    c.run->write("assumptions.json", summary.dump(2) + "\n");
  } else {
    const PeriodicEnvironment p = periodic_env(s);
    p.unroll(s.radius).write_csv(csv);
    summary = {{"period", p.period()}, {"length", p.length()}};
  }
  c.run->write("env.csv", csv.str());
  return summary;
}

const Medium& medium_for(const Settings& s, std::optional<PeriodicEnvironment>& pe, std::optional<Environment>& e) {
  if (is_iid(s)) {
    e = sample_environment(generator(s));
    return *e;
  }
  pe = periodic_env(s);
  return *pe;
}

json cmd_kernel_dump(Context& c) {
  const Settings& s = c.s;
  std::optional<PeriodicEnvironment> pe;
  std::optional<Environment> e;
  const Medium& m = medium_for(s, pe, e);
  const JumpLaw law = jump_law(m, s.lambda, s.site, s.tail_tol);
  const DerivativeTables d = derivative_tables(law);
  const Drift drift = local_drift(m, s.lambda, s.site, s.tail_tol);

  std::ostringstream laws;
  law.write_csv(laws);
  c.run->write("jump_law.csv", laws.str());
  std::string der = "offset,probability,displacement,d_first,d_second\n";
  for (long k = -law.radius; k <= law.radius; ++k) {
    const auto j = static_cast<std::size_t>(k + law.radius);
    der += std::to_string(k) + "," + num(law.probabilities[j]) + "," + num(law.displacements[j]) + "," +
           num(d.first[j]) + "," + num(d.second[j]) + "\n";
  }
  c.run->write("derivatives.csv", der);
  json r = {{"site", s.site},
            {"lambda", s.lambda},
            {"radius", law.radius},
            {"normalization", law.normalization},
            {"total_rate", total_rate(m, s.lambda, s.site, s.tail_tol)},
            {"drift", drift.value},
            {"drift_error_bound", drift.error_bound},
            {"second_moment", d.second_moment},
            {"tail_mass", law.tail_mass}};
  c.run->write("kernel.json", r.dump(2) + "\n");
  return r;
}

json cmd_simulate(Context& c, bool has_target) {
  const Settings& s = c.s;
  if (s.replicas < 1) throw InvalidArgument("replicas must be >= 1");
  const WalkDomain domain = domain_of(s);

  if (has_target) {
    if (s.rho < 1) throw InvalidArgument("hitting runs need --rho >= 1");
    std::string csv = "replica,steps,landing,overshoot,reached\n";
    std::size_t missed = 0;
    double mean_steps = 0.0;
    for (std::size_t r = 0; r < s.replicas; ++r) {
      const HittingSample h = sample_T(domain, s.lambda, s.rho, s.target, replica_seed(s.seed, r), s.budget, 0,
                                       s.tail_tol);
      csv += std::to_string(r) + "," + std::to_string(h.steps) + "," + std::to_string(h.landing) + "," +
             std::to_string(h.overshoot) + "," + (h.reached ? "1" : "0") + "\n";
      if (!h.reached) ++missed;
      mean_steps += static_cast<double>(h.steps);
    }
    c.run->write("hitting.csv", csv);
    if (missed) throw BudgetExhausted(std::to_string(missed) + " replica(s) exhausted the step budget");
    return {{"mean_steps", mean_steps / static_cast<double>(s.replicas)}, {"replicas", s.replicas}};
  }

  std::string traj = "replica,n,displacement,time\n";
  std::string summary = "replica,n,displacement,time\n";
  double mean_disp = 0.0;
  for (std::size_t r = 0; r < s.replicas; ++r) {
    RunOptions ro;
    ro.tail_tol = s.tail_tol;
    ro.record_stride = s.stride;
    ro.track_occupation = false;
    std::ostringstream bin(std::ios::binary);
    if (s.binary_log) ro.binary_log = &bin;
    const std::uint64_t seed = replica_seed(s.seed, r);
    Trajectory t;
    if (s.time > 0.0) t = run_continuous(domain, s.lambda, s.time, seed, ro);
    else if (s.rho > 0) t = run_truncated(domain, s.lambda, s.rho, StopRule::steps(s.steps), seed, ro);
    else t = run_discrete(domain, s.lambda, s.steps, seed, ro);
    for (std::size_t j = 0; j < t.steps.size(); ++j)
      traj += std::to_string(r) + "," + std::to_string(t.steps[j]) + "," + num(t.displacement[j]) + "," +
              num(t.time[j]) + "\n";
    summary += std::to_string(r) + "," + std::to_string(t.n_steps) + "," + num(t.final_displacement) + "," +
               num(t.final_time) + "\n";
    if (s.binary_log) c.run->write("path-" + std::to_string(r) + ".bin", bin.str());
    mean_disp += t.final_displacement;
  }
  c.run->write("trajectory.csv", traj);
  c.run->write("summary.csv", summary);
  return {{"mean_displacement", mean_disp / static_cast<double>(s.replicas)}, {"replicas", s.replicas}};
}

json cmd_conductance(Context& c) {
  const Settings& s = c.s;
  std::optional<PeriodicEnvironment> pe;
  std::optional<Environment> e;
  const Medium& m = medium_for(s, pe, e);
  const long rho = std::max<long>(s.rho, 1);
  const ConductanceResult r =
      effective_conductance(m, s.lambda, rho, parse_set(s.set_a), parse_set(s.set_b), parse_interval(s.window));
  json j = {{"value", r.value},
            {"window_sensitivity", r.window_sensitivity},
            {"harmonic_residual", r.harmonic_residual},
            {"free_nodes", r.free_nodes},
            {"rho", rho},
            {"lambda", s.lambda}};
  if (s.dromedario) {
    const DromedarioReport d = check_dromedario(m, s.lambda, rho);
    std::string csv = "k,lhs,reduced,rhs,ratio\n";
    for (const auto& row : d.rows)
      csv += std::to_string(row.k) + "," + num(row.lhs) + "," + num(row.reduced) + "," + num(row.rhs) + "," +
             num(row.ratio) + "\n";
    c.run->write("dromedario.csv", csv);
    j["dromedario_min_ratio"] = d.min_ratio;
    j["dromedario_left_margin"] = d.left_margin;
  }
  if (s.reduced_chain) {
    const FiniteChain chain = reduce_chain(m, s.lambda, rho);
    std::ostringstream os;
    chain.write_edges_csv(os);
    c.run->write("chain_edges.csv", os.str());
    const HittingTimeIdentity id = check_hitting_time_identity(chain, 0, {static_cast<std::size_t>(rho)});
    j["mean_hitting_time"] = id.mean_time;
    j["hitting_time_identity_residual"] = id.relative_residual;
  }
  c.run->write("conductance.json", j.dump(2) + "\n");
  return j;
}

Eigen::VectorXd state_function(const Settings& s, const ReversibleChain& chain) {
  if (static_cast<int>(s.f.size()) != chain.size())
    throw InvalidArgument("--f needs one value per state (" + std::to_string(chain.size()) + ")");
  Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(s.f.data(), static_cast<Eigen::Index>(s.f.size()));
  return s.center ? chain.center(f) : f;
}

json cmd_oracle(Context& c) {
  const Settings& s = c.s;
  const PeriodicEnvironment penv = periodic_env(s);
  json j = {{"check", s.check}};
  if (s.check == "stationary") {
    const ChainMatrices chain = build_chain(penv, s.lambda, s.tail_tol);
    const Eigen::VectorXd q = stationary(chain);
    std::string csv = "state,q,pi,phi\n";
    for (int i = 0; i < chain.n; ++i)
      csv += std::to_string(i) + "," + num(q(i)) + "," + num(chain.weights(i)) + "," + num(chain.drift(i)) + "\n";
    c.run->write("stationary.csv", csv);
    j["lambda"] = s.lambda;
    j["stationarity_residual"] = stationarity_residual(chain, q);
    j["detailed_balance_residual"] = detailed_balance_residual(chain, q);
    j["radius"] = chain.radius;
  } else if (s.check == "velocity") {
    j["lambda"] = s.lambda;
    j["v_discrete"] = exact_velocity(penv, s.lambda, s.tail_tol);
    j["v_continuous"] = exact_velocity_ct(penv, s.lambda, s.tail_tol);
  } else if (s.check == "diffusion") {
    const ReversibleChain chain(penv, s.tail_tol);
    const DiffusionReport d = diffusion_spectral(chain);
    j["d_discrete"] = d.d_discrete;
    j["d_continuous"] = d.d_continuous;
    j["d_variational"] = diffusion_variational(chain);
    j["mean_pi"] = d.mean_pi;
    j["second_moment"] = d.second_moment;
    j["drift_h_minus1_sq"] = d.drift_norm_sq;
    std::string csv;
    spectrum_rows(chain, chain.chain().drift, csv);
    c.run->write("spectrum.csv", csv);
  } else if (s.check == "derivatives") {
    const ReversibleChain chain(penv, s.tail_tol);
    const Eigen::VectorXd f = state_function(s, chain);
    const DerivativeReport d = derivative_two_ways(chain, f);
    j.update({{"sole", d.sole},
              {"luna", d.luna},
              {"gap", d.gap},
              {"var_f", d.var_f},
              {"var_phi", d.var_phi},
              {"cov", d.cov},
              {"h_minus1_f", d.h1_f},
              {"h_minus1_phi", d.h1_phi},
              {"ballo1_residual", d.ballo1_residual},
              {"ballo2_residual", d.ballo2_residual}});
    std::string csv;
    spectrum_rows(chain, f, csv);
    c.run->write("spectrum.csv", csv);
  } else {
    const EinsteinReport e = einstein_check(penv, s.h, s.tail_tol);
    j.update({{"h", e.h},
              {"fd", e.fd},
              {"richardson", e.richardson},
              {"d_discrete", e.d_discrete},
              {"gap", e.gap},
              {"relative_gap", e.relative_gap},
              {"fd_continuous", e.fd_ct},
              {"d_continuous", e.d_continuous},
              {"gap_continuous", e.gap_ct},
              {"mean_pi", e.mean_pi}});
  }
  c.run->write("report.json", j.dump(2) + "\n");
  return j;
}

json cmd_einstein(Context& c) {
  const Settings& s = c.s;
  const PeriodicEnvironment penv = periodic_env(s);
  std::string csv = "h,fd,richardson,d_discrete,gap,fd_continuous,d_continuous,gap_continuous\n";
  json rows = json::array();
  for (double h : s.hs) {
    const EinsteinReport e = einstein_check(penv, h, s.tail_tol);
    csv += num(h) + "," + num(e.fd) + "," + num(e.richardson) + "," + num(e.d_discrete) + "," + num(e.gap) + "," +
           num(e.fd_ct) + "," + num(e.d_continuous) + "," + num(e.gap_ct) + "\n";
    rows.push_back({{"h", h}, {"gap", e.gap}, {"gap_continuous", e.gap_ct}});
  }
  c.run->write("einstein.csv", csv);
  return {{"rows", rows}};
}

McOptions mc_options(const Settings& s) {
  McOptions o;
  o.seed = s.seed;
  o.replicas = s.replicas;
  o.batches = s.batches;
  o.threads = s.threads;
  o.tail_tol = s.tail_tol;
  return o;
}

std::string estimate_row(const std::string& label, const EstimateCI& e) {
  return label + "," + num(e.estimate) + "," + num(e.se) + "," + std::to_string(e.n) + "," +
         std::to_string(e.replicas) + "," + std::to_string(e.seed) + "\n";
}

json cmd_einstein_mc(Context& c) {
  const Settings& s = c.s;
  const std::vector<double> grid = s.grid.empty() ? kEinsteinGrid : s.grid;
  const EinsteinMcReport r = einstein_mc(source_of(s), grid, s.steps, mc_options(s));
  std::string csv = "lambda,estimate,stderr,n,replicas,seed\n";
  for (const auto& row : r.rows) csv += estimate_row(num(row.lambda), row.velocity);
  c.run->write("einstein_mc.csv", csv);
  json j = {{"mobility", r.mobility},
            {"mobility_se", r.mobility_se},
            {"diffusion", r.diffusion.estimate},
            {"diffusion_se", r.diffusion.se},
            {"z", r.z}};
  c.run->write("summary.json", j.dump(2) + "\n");
  return j;
}

json cmd_rn_scan(Context& c) {
  const Settings& s = c.s;
  std::vector<double> grid = s.grid;
  if (grid.empty())
    for (int k = 1; k <= 25; ++k) grid.push_back(0.02 * k);
  const RnReport r = rn_diagnostics(periodic_env(s), grid, s.p, s.tail_tol);
  std::string csv = "lambda,lp_norm,max_density,min_density,meta_ratio\n";
  for (const auto& row : r.rows)
    csv += num(row.lambda) + "," + num(row.lp_norm) + "," + num(row.max_density) + "," + num(row.min_density) +
           "," + num(row.meta_ratio) + "\n";
  c.run->write("rn.csv", csv);
  json j = {{"p", r.p}, {"sup_lp", r.sup_lp}, {"sup_meta_ratio", r.sup_meta}};
  c.run->write("rn.json", j.dump(2) + "\n");
  return j;
}

json cmd_clt(Context& c) {
  const Settings& s = c.s;
  const EnvSource source = source_of(s);
  const Observable f = make_observable(s.observable);
  const CltEstimate r = estimate_clt(source, f, s.steps, mc_options(s));
  std::string csv = "quantity,estimate,stderr,n,replicas,seed\n";
  csv += estimate_row("var_f", r.var_f) + estimate_row("var_phi", r.var_phi) + estimate_row("cov", r.cov);
  c.run->write("clt.csv", csv);
  json j = {{"var_f", r.var_f.estimate}, {"var_phi", r.var_phi.estimate}, {"cov", r.cov.estimate}};
  if (source.is_periodic()) {
    const ReversibleChain chain(source.periodic_env(), s.tail_tol);
    const auto& st = chain.chain();
    // Observables depend on the site only through its shift, so they tabulate over states.
    Eigen::VectorXd fv(chain.size());
    for (int i = 0; i < chain.size(); ++i) {
      SiteLaw law;
      law.normalization = st.weights(i);
      law.drift = st.drift(i);
      fv(i) = f.eval({source.periodic_env(), i, law});
    }
    if (std::abs(chain.mean(fv)) <= 1e-10 * std::max(1.0, fv.cwiseAbs().maxCoeff())) {
      const DerivativeReport d = derivative_two_ways(chain, fv);
      j["oracle"] = {{"var_f", d.var_f}, {"var_phi", d.var_phi}, {"cov", d.cov}, {"sole", d.sole}};
    }
  }
  c.run->write("clt.json", j.dump(2) + "\n");
  return j;
}

// ------------------------------------------------------------ config merging

std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  std::size_t sub_pos = 0;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (sub_pos == 0 && !a.empty() && a[0] != '-') sub_pos = i;
    if (a == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty() || sub_pos == 0) return args;

  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read config file " + path);
  const json cfg = json::parse(is);
  if (!cfg.is_object()) throw InvalidArgument("config must be a JSON object");

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin() + static_cast<long>(sub_pos), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "subcommand") {
      if (!value.is_string() || value.get<std::string>() != args[sub_pos])
        throw InvalidArgument("config is for subcommand " + value.dump());
      continue;
    }
    if (key == "config" || given(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ",";
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      extra.push_back("--" + key + "=" + joined);
    } else if (value.is_string()) {
      extra.push_back("--" + key + "=" + value.get<std::string>());
    } else if (value.is_number()) {
      extra.push_back("--" + key + "=" + value.dump());
    } else {
      throw InvalidArgument("unsupported config value for '" + key + "'");
    }
  }
  std::vector<std::string> merged(args.begin(), args.begin() + static_cast<long>(sub_pos) + 1);
  merged.insert(merged.end(), extra.begin(), extra.end());
  merged.insert(merged.end(), args.begin() + static_cast<long>(sub_pos) + 1, args.end());
  return merged;
}

void diagnose(std::ostream& err, Context* ctx, int code, const std::string& kind, const std::string& msg,
              json extra = json::object()) {
  json d = {{"status", code}, {"error", kind}, {"message", msg}};
  d.update(extra);
  err << d.dump() << "\n";
  if (ctx && ctx->run) {
    try {
      ctx->run->write("diagnostic.json", d.dump(2) + "\n");
      ctx->run->finish(kind);
    } catch (...) {
    }
  }
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Biased Mott variable-range hopping: simulation and exact finite-chain oracle", "mott"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::map<CLI::App*, Registry> regs;
  auto sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* a = app.add_subcommand(name, desc);
    a->set_help_flag("--help", "Print this help message and exit");
    add_common(a, regs[a], s);
    return a;
  };

  CLI::App* gen = sub("gen-env", "Sample or unroll an environment; write env.csv");
  add_env(gen, regs[gen], s, true);
  bind_option(gen, regs[gen], "samples", s.samples, "Samples for the assumption report");
  bind_option(gen, regs[gen], "mgf-p", s.mgf_p, "Exponential moment order p");

  CLI::App* kd = sub("kernel-dump", "Jump law, derivative tables and drift at one site");
  add_env(kd, regs[kd], s, true);
  bind_option(kd, regs[kd], "lambda", s.lambda, "Bias");
  bind_option(kd, regs[kd], "site", s.site, "Site index");

  CLI::App* sim = sub("simulate", "Run the discrete, continuous or truncated walk");
  add_env(sim, regs[sim], s, true);
  bind_option(sim, regs[sim], "lambda", s.lambda, "Bias");
  bind_option(sim, regs[sim], "steps", s.steps, "Steps of the discrete or truncated walk");
  bind_option(sim, regs[sim], "time", s.time, "Horizon of the continuous-time walk (> 0 selects it)");
  bind_option(sim, regs[sim], "rho", s.rho, "Truncation range (0 = untruncated)");
  CLI::Option* target_opt = bind_option(sim, regs[sim], "target", s.target, "Hitting target i: sample T_i of the truncated walk");
  bind_option(sim, regs[sim], "budget", s.budget, "Step budget per hitting sample");
  bind_option(sim, regs[sim], "replicas", s.replicas, "Independent replicas");
  bind_option(sim, regs[sim], "stride", s.stride, "Record every stride-th step (0 = endpoints)");
  bind_option(sim, regs[sim], "binary-log", s.binary_log, "Write path-<replica>.bin logs");

  CLI::App* cond = sub("conductance", "Effective rho-conductance and reduced-chain checks");
  add_env(cond, regs[cond], s, true);
  bind_option(cond, regs[cond], "lambda", s.lambda, "Bias");
  bind_option(cond, regs[cond], "rho", s.rho, "Range rho (>= 1)");
  bind_option(cond, regs[cond], "a", s.set_a, "Set A, e.g. -inf:0 or 0");
  bind_option(cond, regs[cond], "b", s.set_b, "Set B, e.g. 4:inf");
  bind_option(cond, regs[cond], "window", s.window, "Window lo:hi of free nodes");
  bind_option(cond, regs[cond], "dromedario", s.dromedario, "Also report return-probability ratios per k");
  bind_option(cond, regs[cond], "reduced-chain", s.reduced_chain, "Also export the reduced chain");

  CLI::App* orc = sub("oracle", "Exact finite-chain quantities on a periodic environment");
  add_env(orc, regs[orc], s, false);
  bind_option(orc, regs[orc], "check", s.check, "stationary | velocity | diffusion | derivatives | einstein")
      ->check(CLI::IsMember({"stationary", "velocity", "diffusion", "derivatives", "einstein"}));
  bind_option(orc, regs[orc], "lambda", s.lambda, "Bias");
  bind_option(orc, regs[orc], "f", s.f, "State function f(0..N-1)");
  bind_option(orc, regs[orc], "center", s.center, "Subtract Q_0(f) before use");
  bind_option(orc, regs[orc], "h", s.h, "Finite-difference step");

  CLI::App* ein = sub("einstein", "Finite-difference mobility against D over several steps");
  add_env(ein, regs[ein], s, false);
  bind_option(ein, regs[ein], "hs", s.hs, "Finite-difference steps");

  CLI::App* emc = sub("einstein-mc", "Monte Carlo mobility extrapolation against D");
  add_env(emc, regs[emc], s, true);
  bind_option(emc, regs[emc], "grid", s.grid, "Bias grid in (0, 0.2]");
  bind_option(emc, regs[emc], "steps", s.steps, "Steps per replica");
  bind_option(emc, regs[emc], "replicas", s.replicas, "Replicas per bias");
  bind_option(emc, regs[emc], "batches", s.batches, "Batches per run");

  CLI::App* rn = sub("rn-scan", "Radon-Nikodym density scan over a bias grid");
  add_env(rn, regs[rn], s, false);
  bind_option(rn, regs[rn], "grid", s.grid, "Bias grid in (0, 0.9]");
  bind_option(rn, regs[rn], "p", s.p, "L^p order");

  CLI::App* clt = sub("clt", "Monte Carlo CLT variances and covariance at lambda = 0");
  add_env(clt, regs[clt], s, true);
  bind_option(clt, regs[clt], "observable", s.observable, "Observable spec (see README)");
  bind_option(clt, regs[clt], "steps", s.steps, "Steps per replica");
  bind_option(clt, regs[clt], "replicas", s.replicas, "Replicas (>= 2)");

  Context ctx{s, out, nullptr};
  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    rev.pop_back(); // program name
    app.parse(rev);

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    resolve_env(s);
    ctx.run = std::make_unique<RunDir>(fs::path(s.out), name, regs[chosen].resolved(name));

    json result;
    if (name == "gen-env") result = cmd_gen_env(ctx);
    else if (name == "kernel-dump") result = cmd_kernel_dump(ctx);
    else if (name == "simulate") result = cmd_simulate(ctx, target_opt->count() > 0);
    else if (name == "conductance") result = cmd_conductance(ctx);
    else if (name == "oracle") result = cmd_oracle(ctx);
    else if (name == "einstein") result = cmd_einstein(ctx);
    else if (name == "einstein-mc") result = cmd_einstein_mc(ctx);
    else if (name == "rn-scan") result = cmd_rn_scan(ctx);
    else result = cmd_clt(ctx);

    ctx.run->finish("ok");
    out << json{{"run_dir", ctx.run->path().string()}, {"result", result}}.dump() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kSchema;
  } catch (const InvalidArgument& e) {
    diagnose(err, &ctx, kSchema, "invalid_argument", e.what());
    return kSchema;
  } catch (const json::exception& e) {
    diagnose(err, &ctx, kSchema, "config", e.what());
    return kSchema;
  } catch (const NumericalError& e) {
    diagnose(err, &ctx, kNumerical, "numerical", e.what());
    return kNumerical;
  } catch (const WindowExceeded& e) {
    diagnose(err, &ctx, kBudget, "window_exceeded", e.what(), {{"required_radius", e.required()}});
    return kBudget;
  } catch (const BudgetExhausted& e) {
    diagnose(err, &ctx, kBudget, "budget_exhausted", e.what());
    return kBudget;
  } catch (const std::exception& e) {
    diagnose(err, &ctx, kFailure, "failure", e.what());
    return kFailure;
  }
}

} // namespace mott::cli
