#pragma once

// Environments for one-dimensional Mott hopping: points x_k on the line with
// gaps Z_k = x_{k+1} - x_k >= d > 0, energy marks E_k, and a symmetric bounded
// pair function u(E_i, E_j) entering the jump rates.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mott {

// -(beta/2)(|a| + |b| + |a - b|): the energetic part of the Mott rate.
double mott_u(double a, double b, double beta);

// Identifier + parameters of the pair function u.
struct PairFunction {
  enum class Kind { zero, mott };

  Kind kind = Kind::zero;
  double beta = 0.0;

  static PairFunction none() { return {}; }
  static PairFunction mott_form(double beta);

  double operator()(double a, double b) const;

  // sup |u(a,b)| over a, b in [-energy_bound, energy_bound].
  double bound(double energy_bound) const;

  std::string name() const;
  bool operator==(const PairFunction&) const = default;
};

// Coordinate bound used by unbounded media.
inline constexpr long kUnboundedIndex = 1L << 52;

// Read-only view of a (possibly infinite) marked point configuration.
// Coordinates k in [lowest(), highest()] are addressable.
class Medium {
public:
  virtual ~Medium() = default;

  virtual double position(long k) const = 0;
  virtual double energy(long k) const = 0;
  virtual long lowest() const = 0;
  virtual long highest() const = 0;
  virtual double floor() const = 0;
  virtual const PairFunction& pair() const = 0;
  // sup |E_k| over the whole medium (not only the stored part).
  virtual double energy_bound() const = 0;

  bool contains(long k) const { return k >= lowest() && k <= highest(); }
  double gap(long k) const { return position(k + 1) - position(k); }
  double u(long i, long j) const { return pair()(energy(i), energy(j)); }
  double u_bound() const { return pair().bound(energy_bound()); }
};

// Finite window of radius W around the origin: gaps Z_k for k in [-W, W-1],
// energies E_k for k in [-W, W], x_0 = 0.
class Environment final : public Medium {
public:
  // `gaps` holds Z_{-W..W-1} (size 2W), `energies` holds E_{-W..W} (size 2W+1).
  static Environment from_window(std::vector<double> gaps, std::vector<double> energies,
                                 double floor, PairFunction u,
                                 double declared_energy_bound = -1.0);

  long radius() const { return radius_; }
  double gap_at(long k) const;

  double position(long k) const override;
  double energy(long k) const override;
  long lowest() const override { return -radius_; }
  long highest() const override { return radius_; }
  double floor() const override { return floor_; }
  const PairFunction& pair() const override { return pair_; }
  double energy_bound() const override { return energy_bound_; }

  // tau_l: coordinate k of the result is coordinate k + l of *this. The
  // window shrinks to radius W - |l|.
  Environment shift(long l) const;

  // Space reflection through the origin: x'_k = -x_{-k}, E'_k = E_{-k}.
  Environment reflect() const;

  std::span<const double> gaps() const { return gaps_; }
  std::span<const double> energies() const { return energies_; }

  // Columns k,Z_k,E_k,x_k (Z_k empty on the last row).
  void write_csv(std::ostream& os) const;

private:
  Environment() = default;

  long radius_ = 0;
  std::vector<double> gaps_;
  std::vector<double> energies_;
  std::vector<double> positions_;
  double floor_ = 1.0;
  double energy_bound_ = 0.0;
  PairFunction pair_;
};

// N-periodic environment: Z_k = gaps[k mod N], E_k = energies[k mod N].
class PeriodicEnvironment final : public Medium {
public:
  static PeriodicEnvironment make(std::vector<double> gaps, std::vector<double> energies,
                                  double floor, PairFunction u);

  int period() const { return static_cast<int>(gaps_.size()); }
  // x_N - x_0.
  double length() const { return length_; }
  std::size_t wrap(long k) const;
  double gap_at(long k) const { return gaps_[wrap(k)]; }

  double position(long k) const override;
  double energy(long k) const override { return energies_[wrap(k)]; }
  long lowest() const override { return -kUnboundedIndex; }
  long highest() const override { return kUnboundedIndex; }
  double floor() const override { return floor_; }
  const PairFunction& pair() const override { return pair_; }
  double energy_bound() const override { return energy_bound_; }

  PeriodicEnvironment shift(long l) const;
  PeriodicEnvironment reflect() const;
  Environment unroll(long radius) const;

  std::span<const double> gaps() const { return gaps_; }
  std::span<const double> energies() const { return energies_; }

  bool operator==(const PeriodicEnvironment& o) const {
    return gaps_ == o.gaps_ && energies_ == o.energies_ && floor_ == o.floor_ && pair_ == o.pair_;
  }

private:
  PeriodicEnvironment() = default;

  std::vector<double> gaps_;
  std::vector<double> energies_;
  std::vector<double> prefix_;
  double length_ = 0.0;
  double floor_ = 1.0;
  double energy_bound_ = 0.0;
  PairFunction pair_;
};

PeriodicEnvironment make_periodic(std::vector<double> gaps, std::vector<double> energies,
                                  double floor, PairFunction u = PairFunction::none());

// Unit lattice x_k = k with zero energies.
PeriodicEnvironment unit_lattice(PairFunction u = PairFunction::none());

struct GapLaw {
  enum class Kind { constant, exponential, heavy_tail };

  Kind kind = Kind::constant;
  double value = 1.0;      // constant gap
  double rate = 1.0;       // Z = d + Exp(rate)
  double tail_index = 2.5; // Z = d + Lomax(tail_index, scale) truncated at cap
  double scale = 1.0;
  double cap = 20.0;

  std::string name() const;
};

struct EnergyLaw {
  enum class Kind { zero, uniform };

  Kind kind = Kind::zero;
  double amplitude = 0.0; // uniform on [-amplitude, amplitude]

  std::string name() const;
};

// i.i.d. marked point process. Draws are keyed by (seed, coordinate), so the
// environment is a pure function of the spec and any window is a restriction
// of any larger one.
struct GeneratorSpec {
  GapLaw gaps;
  EnergyLaw energies;
  double floor = 1.0;
  std::uint64_t seed = 0;
  long radius = 64;
  PairFunction pair;

  void validate() const;

  // Supremum of p with E[exp(p Z_0)] finite (+inf for bounded support).
  double p_max() const;
  double sample_gap(double uniform) const;
  double sample_energy(double uniform) const;
  double gap_at(long k) const;
  double energy_at(long k) const;
  double energy_bound() const;

  std::string to_json() const;
  static GeneratorSpec from_json(std::string_view text);
};

Environment sample_environment(const GeneratorSpec& spec);
Environment sample_environment(const GeneratorSpec& spec, long radius);

struct AssumptionReport {
  std::size_t samples = 0;
  double floor = 0.0;
  double min_gap = 0.0;
  double mean_gap = 0.0;
  double p = 0.0;
  double mgf_estimate = 0.0; // empirical E[exp(p Z_0)]
  double p_max = 0.0;
  bool mgf_diverges = false; // declared law has E[exp(p Z_0)] = +inf
  bool floor_respected = true;
};

AssumptionReport check_assumptions(const GeneratorSpec& spec, std::size_t n_samples, double p);

} // namespace mott
