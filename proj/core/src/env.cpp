#include "mott/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "mott/error.hpp"
#include "mott/rng.hpp"

namespace mott {

double mott_u(double a, double b, double beta) {
  return -0.5 * beta * (std::abs(a) + std::abs(b) + std::abs(a - b));
}

PairFunction PairFunction::mott_form(double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("mott pair function needs beta >= 0");
  return {Kind::mott, beta};
}

double PairFunction::operator()(double a, double b) const {
  return kind == Kind::zero ? 0.0 : mott_u(a, b, beta);
}

double PairFunction::bound(double energy_bound) const {
  // |a| + |b| + |a - b| <= 4e on [-e, e]^2.
  return kind == Kind::zero ? 0.0 : 2.0 * beta * energy_bound;
}

std::string PairFunction::name() const { return kind == Kind::zero ? "zero" : "mott"; }

namespace {

void check_floor_and_gaps(std::span<const double> gaps, double floor) {
  if (!(floor > 0.0) || !std::isfinite(floor)) throw InvalidArgument("floor d must be positive");
  for (double z : gaps) {
    if (!std::isfinite(z)) throw InvalidArgument("non-finite gap");
    if (z < floor) throw InvalidArgument("gap below floor d");
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) {
    if (!std::isfinite(e)) throw InvalidArgument("non-finite energy");
    m = std::max(m, std::abs(e));
  }
  return m;
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

} // namespace

// ---------------------------------------------------------------- Environment

Environment Environment::from_window(std::vector<double> gaps, std::vector<double> energies,
                                     double floor, PairFunction u,
                                     double declared_energy_bound) {
  if (gaps.size() % 2 != 0 || energies.size() != gaps.size() + 1)
    throw InvalidArgument("window needs 2W gaps and 2W+1 energies");
  check_floor_and_gaps(gaps, floor);

  Environment env;
  env.radius_ = static_cast<long>(gaps.size() / 2);
  env.floor_ = floor;
  env.pair_ = u;
  const double observed = max_abs(energies);
  env.energy_bound_ = declared_energy_bound >= 0.0 ? std::max(declared_energy_bound, observed) : observed;

  const long w = env.radius_;
  env.positions_.assign(static_cast<std::size_t>(2 * w + 1), 0.0);
  for (long k = 0; k < w; ++k) // x_{k+1} = x_k + Z_k
    env.positions_[static_cast<std::size_t>(w + k + 1)] =
        env.positions_[static_cast<std::size_t>(w + k)] + gaps[static_cast<std::size_t>(w + k)];
  for (long k = -1; k >= -w; --k) // x_k = x_{k+1} - Z_k
    env.positions_[static_cast<std::size_t>(w + k)] =
        env.positions_[static_cast<std::size_t>(w + k + 1)] - gaps[static_cast<std::size_t>(w + k)];

  env.gaps_ = std::move(gaps);
  env.energies_ = std::move(energies);
  return env;
}

double Environment::gap_at(long k) const {
  if (k < -radius_ || k >= radius_) throw WindowExceeded("gap index outside window", std::abs(k) + 1);
  return gaps_[static_cast<std::size_t>(k + radius_)];
}

double Environment::position(long k) const {
  if (!contains(k)) throw WindowExceeded("position index outside window", std::abs(k));
  return positions_[static_cast<std::size_t>(k + radius_)];
}

double Environment::energy(long k) const {
  if (!contains(k)) throw WindowExceeded("energy index outside window", std::abs(k));
  return energies_[static_cast<std::size_t>(k + radius_)];
}

Environment Environment::shift(long l) const {
  if (std::abs(l) >= radius_)
    throw WindowExceeded("shift exceeds window", std::abs(l) + 1);
  const long w = radius_ - std::abs(l);
  std::vector<double> g(static_cast<std::size_t>(2 * w));
  std::vector<double> e(static_cast<std::size_t>(2 * w + 1));
  for (long k = -w; k < w; ++k) g[static_cast<std::size_t>(k + w)] = gap_at(k + l);
  for (long k = -w; k <= w; ++k) e[static_cast<std::size_t>(k + w)] = energy(k + l);
  return from_window(std::move(g), std::move(e), floor_, pair_, energy_bound_);
}

Environment Environment::reflect() const {
  // Z'_k = x'_{k+1} - x'_k = x_{-k} - x_{-k-1} = Z_{-k-1}.
  const long w = radius_;
  std::vector<double> g(static_cast<std::size_t>(2 * w));
  std::vector<double> e(static_cast<std::size_t>(2 * w + 1));
  for (long k = -w; k < w; ++k) g[static_cast<std::size_t>(k + w)] = gap_at(-k - 1);
  for (long k = -w; k <= w; ++k) e[static_cast<std::size_t>(k + w)] = energy(-k);
  return from_window(std::move(g), std::move(e), floor_, pair_, energy_bound_);
}

void Environment::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "k,Z_k,E_k,x_k\n";
  for (long k = -radius_; k <= radius_; ++k) {
    os << k << ',';
    if (k < radius_) os << gap_at(k);
    os << ',' << energy(k) << ',' << position(k) << '\n';
  }
  os.precision(old);
}

// -------------------------------------------------------- PeriodicEnvironment

PeriodicEnvironment PeriodicEnvironment::make(std::vector<double> gaps, std::vector<double> energies,
                                              double floor, PairFunction u) {
  if (gaps.empty()) throw InvalidArgument("periodic environment needs at least one gap");
  if (gaps.size() != energies.size()) throw InvalidArgument("gaps and energies differ in length");
  check_floor_and_gaps(gaps, floor);

  PeriodicEnvironment env;
  env.floor_ = floor;
  env.pair_ = u;
  env.energy_bound_ = max_abs(energies);
  env.prefix_.assign(gaps.size() + 1, 0.0);
  for (std::size_t j = 0; j < gaps.size(); ++j) env.prefix_[j + 1] = env.prefix_[j] + gaps[j];
  env.length_ = env.prefix_.back();
  env.gaps_ = std::move(gaps);
  env.energies_ = std::move(energies);
  return env;
}

std::size_t PeriodicEnvironment::wrap(long k) const {
  const long n = static_cast<long>(gaps_.size());
  long r = k % n;
  if (r < 0) r += n;
  return static_cast<std::size_t>(r);
}

double PeriodicEnvironment::position(long k) const {
  const long n = static_cast<long>(gaps_.size());
  const long q = floor_div(k, n);
  return static_cast<double>(q) * length_ + prefix_[static_cast<std::size_t>(k - q * n)];
}

PeriodicEnvironment PeriodicEnvironment::shift(long l) const {
  const std::size_t n = gaps_.size();
  std::vector<double> g(n), e(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = gaps_[wrap(static_cast<long>(j) + l)];
    e[j] = energies_[wrap(static_cast<long>(j) + l)];
  }
  return make(std::move(g), std::move(e), floor_, pair_);
}

PeriodicEnvironment PeriodicEnvironment::reflect() const {
  const std::size_t n = gaps_.size();
  std::vector<double> g(n), e(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = gaps_[wrap(-static_cast<long>(j) - 1)];
    e[j] = energies_[wrap(-static_cast<long>(j))];
  }
  return make(std::move(g), std::move(e), floor_, pair_);
}

Environment PeriodicEnvironment::unroll(long radius) const {
  if (radius < 1) throw InvalidArgument("unroll radius must be >= 1");
  std::vector<double> g(static_cast<std::size_t>(2 * radius));
  std::vector<double> e(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k < radius; ++k) g[static_cast<std::size_t>(k + radius)] = gap_at(k);
  for (long k = -radius; k <= radius; ++k) e[static_cast<std::size_t>(k + radius)] = energy(k);
  return Environment::from_window(std::move(g), std::move(e), floor_, pair_, energy_bound_);
}

PeriodicEnvironment make_periodic(std::vector<double> gaps, std::vector<double> energies, double floor,
                                  PairFunction u) {
  return PeriodicEnvironment::make(std::move(gaps), std::move(energies), floor, u);
}

PeriodicEnvironment unit_lattice(PairFunction u) { return make_periodic({1.0}, {0.0}, 1.0, u); }

// -------------------------------------------------------------- GeneratorSpec

std::string GapLaw::name() const {
  switch (kind) {
  case Kind::constant: return "constant";
  case Kind::exponential: return "exponential";
  case Kind::heavy_tail: return "heavy_tail";
  }
  return "?";
}

std::string EnergyLaw::name() const { return kind == Kind::zero ? "zero" : "uniform"; }

void GeneratorSpec::validate() const {
  if (!(floor > 0.0) || !std::isfinite(floor)) throw InvalidArgument("floor d must be positive");
  if (radius < 1) throw InvalidArgument("window radius must be >= 1");
  switch (gaps.kind) {
  case GapLaw::Kind::constant:
    if (!(gaps.value >= floor)) throw InvalidArgument("constant gap law has support below d");
    break;
  case GapLaw::Kind::exponential:
    if (!(gaps.rate > 0.0) || !std::isfinite(gaps.rate)) throw InvalidArgument("exponential gap rate must be positive");
    break;
  case GapLaw::Kind::heavy_tail:
    if (!(gaps.tail_index > 0.0) || !(gaps.scale > 0.0) || !(gaps.cap > 0.0) || !std::isfinite(gaps.cap))
      throw InvalidArgument("heavy-tail gap law needs positive index, scale and finite cap");
    break;
  }
  if (energies.kind == EnergyLaw::Kind::uniform && !(energies.amplitude >= 0.0))
    throw InvalidArgument("energy amplitude must be >= 0");
  if (pair.kind == PairFunction::Kind::mott && !(pair.beta >= 0.0))
    throw InvalidArgument("beta must be >= 0");
}

double GeneratorSpec::p_max() const {
  return gaps.kind == GapLaw::Kind::exponential ? gaps.rate : std::numeric_limits<double>::infinity();
}

double GeneratorSpec::sample_gap(double u) const {
  switch (gaps.kind) {
  case GapLaw::Kind::constant: return gaps.value;
  case GapLaw::Kind::exponential: return floor - std::log1p(-u) / gaps.rate;
  case GapLaw::Kind::heavy_tail: {
    // Lomax(alpha, s) conditioned on [0, cap], by inversion.
    const double a = gaps.tail_index, s = gaps.scale;
    const double f_cap = 1.0 - std::pow(1.0 + gaps.cap / s, -a);
    return floor + s * (std::pow(1.0 - u * f_cap, -1.0 / a) - 1.0);
  }
  }
  return floor;
}

double GeneratorSpec::sample_energy(double u) const {
  if (energies.kind == EnergyLaw::Kind::zero) return 0.0;
  return energies.amplitude * (2.0 * u - 1.0);
}

double GeneratorSpec::gap_at(long k) const {
  return sample_gap(coordinate_uniform(derive_seed(seed, "env.gap"), k));
}

double GeneratorSpec::energy_at(long k) const {
  return sample_energy(coordinate_uniform(derive_seed(seed, "env.energy"), k));
}

double GeneratorSpec::energy_bound() const {
  return energies.kind == EnergyLaw::Kind::zero ? 0.0 : energies.amplitude;
}

std::string GeneratorSpec::to_json() const {
  nlohmann::json j;
  j["gap_law"] = gaps.name();
  j["gap_value"] = gaps.value;
  j["gap_rate"] = gaps.rate;
  j["tail_index"] = gaps.tail_index;
  j["tail_scale"] = gaps.scale;
  j["tail_cap"] = gaps.cap;
  j["energy_law"] = energies.name();
  j["energy_amplitude"] = energies.amplitude;
  j["floor"] = floor;
  j["seed"] = seed;
  j["radius"] = radius;
  j["u"] = pair.name();
  j["beta"] = pair.beta;
  return j.dump();
}

GeneratorSpec GeneratorSpec::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("generator spec: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("generator spec must be a JSON object");
  static const char* const known[] = {"gap_law", "gap_value", "gap_rate", "tail_index", "tail_scale",
                                      "tail_cap", "energy_law", "energy_amplitude", "floor", "seed",
                                      "radius", "u", "beta"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw InvalidArgument("generator spec: unknown key '" + key + "'");

  GeneratorSpec s;
  try {
    const std::string law = j.value("gap_law", "constant");
    if (law == "constant") s.gaps.kind = GapLaw::Kind::constant;
    else if (law == "exponential") s.gaps.kind = GapLaw::Kind::exponential;
    else if (law == "heavy_tail") s.gaps.kind = GapLaw::Kind::heavy_tail;
    else throw InvalidArgument("generator spec: unknown gap_law '" + law + "'");
    s.gaps.value = j.value("gap_value", s.gaps.value);
    s.gaps.rate = j.value("gap_rate", s.gaps.rate);
    s.gaps.tail_index = j.value("tail_index", s.gaps.tail_index);
    s.gaps.scale = j.value("tail_scale", s.gaps.scale);
    s.gaps.cap = j.value("tail_cap", s.gaps.cap);

    const std::string elaw = j.value("energy_law", "zero");
    if (elaw == "zero") s.energies.kind = EnergyLaw::Kind::zero;
    else if (elaw == "uniform") s.energies.kind = EnergyLaw::Kind::uniform;
    else throw InvalidArgument("generator spec: unknown energy_law '" + elaw + "'");
    s.energies.amplitude = j.value("energy_amplitude", 0.0);

    s.floor = j.value("floor", s.floor);
    s.seed = j.value("seed", std::uint64_t{0});
    s.radius = j.value("radius", s.radius);
    const std::string u = j.value("u", "zero");
    const double beta = j.value("beta", 0.0);
    if (u == "zero") s.pair = PairFunction::none();
    else if (u == "mott") s.pair = PairFunction::mott_form(beta);
    else throw InvalidArgument("generator spec: unknown u '" + u + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

Environment sample_environment(const GeneratorSpec& spec) { return sample_environment(spec, spec.radius); }

Environment sample_environment(const GeneratorSpec& spec, long radius) {
  spec.validate();
  if (radius < 1) throw InvalidArgument("window radius must be >= 1");
  std::vector<double> g(static_cast<std::size_t>(2 * radius));
  std::vector<double> e(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k < radius; ++k) g[static_cast<std::size_t>(k + radius)] = spec.gap_at(k);
  for (long k = -radius; k <= radius; ++k) e[static_cast<std::size_t>(k + radius)] = spec.energy_at(k);
  return Environment::from_window(std::move(g), std::move(e), spec.floor, spec.pair, spec.energy_bound());
}

AssumptionReport check_assumptions(const GeneratorSpec& spec, std::size_t n_samples, double p) {
  spec.validate();
  if (n_samples < 1) throw InvalidArgument("check_assumptions needs n_samples >= 1");
  AssumptionReport r;
  r.samples = n_samples;
  r.floor = spec.floor;
  r.p = p;
  r.p_max = spec.p_max();
  r.mgf_diverges = p >= r.p_max;
  r.min_gap = std::numeric_limits<double>::infinity();
  double sum = 0.0, mgf = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double z = spec.gap_at(static_cast<long>(k));
    r.min_gap = std::min(r.min_gap, z);
    sum += z;
    mgf += std::exp(p * z);
  }
  r.mean_gap = sum / static_cast<double>(n_samples);
  r.mgf_estimate = mgf / static_cast<double>(n_samples);
  r.floor_respected = r.min_gap >= spec.floor;
  return r;
}

} // namespace mott
