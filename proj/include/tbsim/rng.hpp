#pragma once

#include <cstdint>
#include <random>

namespace tbsim {

/// Deterministic random stream. mt19937_64 is fully specified by the
/// standard, so sequences are bit-identical across platforms. All variate
/// algorithms here are fixed (no implementation-defined distributions).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0,1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson variate by inverse-CDF walk for mean < 10; larger means are
  /// split into halves (keeps the CDF walk short and well-conditioned).
  std::uint64_t poisson(double mean);

  /// Poisson variate conditioned on being >= 1.
  std::uint64_t poisson_at_least_one(double mean);

  /// Geometric gap: number of failures before the next success of a
  /// Bernoulli(p) process. Returns a sentinel-large value for p == 0.
  std::uint64_t geometric_gap(double p);

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

} // namespace tbsim
