#include "tbsim/waveguide.hpp"

#include <cmath>
#include <stdexcept>

#include "tbsim/constants.hpp"
#include "tbsim/units.hpp"

namespace tbsim {

void WaveguideSpec::validate() const {
  if (!(n2 > 0.0)) throw std::invalid_argument("WaveguideSpec: n2 must be > 0");
  if (!(a_eff > 0.0)) throw std::invalid_argument("WaveguideSpec: a_eff must be > 0");
  if (!(length > 0.0)) throw std::invalid_argument("WaveguideSpec: length must be > 0");
  if (prop_loss_db < 0.0)
    throw std::invalid_argument("WaveguideSpec: prop_loss_db must be >= 0");
  if (coupling_loss_db_per_facet < 0.0)
    throw std::invalid_argument("WaveguideSpec: coupling_loss_db_per_facet must be >= 0");
}

GammaValue gamma_coefficient(const WaveguideSpec& spec, double wavelength_m) {
  spec.validate();
  if (!(wavelength_m > 0.0)) {
    throw std::domain_error("gamma_coefficient: wavelength must be > 0");
  }
  const double omega = kTwoPi * kSpeedOfLight / wavelength_m;
  return GammaValue{spec.n2 * omega / (kSpeedOfLight * spec.a_eff)};
}

double effective_length(const WaveguideSpec& spec) {
  spec.validate();
  if (spec.prop_loss_db == 0.0) return spec.length;
  const double alpha = db_to_attenuation_per_m(spec.prop_loss_db, spec.length);
  // -expm1 keeps precision in the near-lossless regime.
  return -std::expm1(-alpha * spec.length) / alpha;
}

double coherence_time(double fwhm_hz, BandwidthShape shape) {
  if (!(fwhm_hz > 0.0)) {
    throw std::domain_error("coherence_time: fwhm must be > 0");
  }
  double k = 0.0;
  switch (shape) {
    case BandwidthShape::gaussian: k = 0.441; break;
    case BandwidthShape::lorentzian: k = 1.0 / kPi; break;
    case BandwidthShape::rectangular: k = 0.886; break;
  }
  return k / fwhm_hz;
}

} // namespace tbsim
