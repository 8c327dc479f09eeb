#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mott {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a over the bytes of a purpose string.
constexpr std::uint64_t hash_purpose(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// All randomness in the project flows from one master seed. Streams are
// addressed by a purpose string and an integer id (replica, coordinate...):
//   key = mix64(mix64(master ^ hash(purpose)) + mix64(id))
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                    std::uint64_t id = 0) noexcept {
  return mix64(mix64(master ^ hash_purpose(purpose)) + mix64(id ^ 0xD1B54A32D192ED03ULL));
}

// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based stream: output n is mix64(key + n * gamma). Any output can be
// computed without generating its predecessors, so streams split and replay
// freely. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  result_type at(std::uint64_t n) const noexcept {
    return mix64(key_ + n * 0x9E3779B97F4A7C15ULL);
  }

  double uniform() noexcept { return to_unit((*this)()); }

  // Strictly positive uniform, safe for logarithms.
  double uniform_open() noexcept { return open_unit((*this)()); }

  // The value uniform_open() would return next, without consuming it.
  double peek_uniform_open() const noexcept { return open_unit(at(counter_)); }

  double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

  static double open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform in [0,1) attached to an integer coordinate of a keyed field. Used for
// environments: the draw at coordinate k never depends on which other
// coordinates were materialized.
inline double coordinate_uniform(std::uint64_t key, long coordinate) noexcept {
  return to_unit(mix64(key ^ mix64(static_cast<std::uint64_t>(coordinate))));
}

} // namespace mott
