#include "tbsim/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tbsim {

namespace {

// Inverse-CDF walk for mean < 10. One uniform per variate.
std::uint64_t poisson_inverse_cdf(double mean, double u) {
  double p = std::exp(-mean);
  double cum = p;
  std::uint64_t k = 0;
  // Generous cap; at mean < 10 the walk terminates far earlier.
  const std::uint64_t cap = 200;
  while (u >= cum && k < cap) {
    ++k;
    p *= mean / static_cast<double>(k);
    cum += p;
  }
  return k;
}

} // namespace

std::uint64_t RandomStream::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean)) {
    throw std::domain_error("poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_inverse_cdf(mean, uniform());
  // Split large means; Poisson(a+b) = Poisson(a) + Poisson(b).
  return poisson(mean / 2.0) + poisson(mean / 2.0);
}

std::uint64_t RandomStream::poisson_at_least_one(double mean) {
  if (!(mean > 0.0)) {
    throw std::domain_error("poisson_at_least_one: mean must be > 0");
  }
  if (mean >= 10.0) {
    // Rejection is fine here; a zero draw is vanishingly rare.
    for (;;) {
      const std::uint64_t k = poisson(mean);
      if (k >= 1) return k;
    }
  }
  const double p0 = std::exp(-mean);
  const double u = p0 + uniform() * (1.0 - p0);
  const std::uint64_t k = poisson_inverse_cdf(mean, u);
  return k == 0 ? 1 : k;
}

std::uint64_t RandomStream::geometric_gap(double p) {
  if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max() / 2;
  if (p >= 1.0) return 0;
  const double u = uniform();
  // log(1-u) over log(1-p); 1-u is uniform in (0,1].
  const double g = std::floor(std::log1p(-u) / std::log1p(-p));
  if (g >= 9.0e18) return std::numeric_limits<std::uint64_t>::max() / 2;
  return static_cast<std::uint64_t>(g);
}

} // namespace tbsim
