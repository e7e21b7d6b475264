#include "tbsim/source.hpp"

#include <cmath>
#include <stdexcept>

#include "tbsim/constants.hpp"

namespace tbsim {

double PumpConfig::entangled_phase() const {
  return std::fmod(std::fmod(2.0 * relative_pump_phase, kTwoPi) + kTwoPi, kTwoPi);
}

void PumpConfig::validate() const {
  if (!(wavelength > 0.0)) throw std::invalid_argument("PumpConfig: wavelength must be > 0");
  if (peak_power < 0.0) throw std::invalid_argument("PumpConfig: peak_power must be >= 0");
  if (!(pulse_width > 0.0) || !(pulse_interval > 0.0) || pulse_width >= pulse_interval) {
    throw std::invalid_argument("PumpConfig: require 0 < pulse_width < pulse_interval");
  }
  if (!(rep_rate > 0.0)) throw std::invalid_argument("PumpConfig: rep_rate must be > 0");
}

void SourceCalibration::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("SourceCalibration: gamma must be > 0");
  if (!(l_eff > 0.0)) throw std::invalid_argument("SourceCalibration: l_eff must be > 0");
  if (!(kappa > 0.0)) throw std::invalid_argument("SourceCalibration: kappa must be > 0");
}

double mean_pairs_per_pulse(const SourceCalibration& cal, const PumpConfig& pump) {
  cal.validate();
  pump.validate();
  const double x = cal.gamma * pump.peak_power * cal.l_eff;
  return cal.kappa * x * x;
}

double calibrate_kappa(double gamma, double l_eff, double anchor_power,
                       double anchor_mu) {
  if (!(gamma > 0.0) || !(l_eff > 0.0)) {
    throw std::domain_error("calibrate_kappa: gamma and l_eff must be > 0");
  }
  if (!(anchor_power > 0.0) || !(anchor_mu > 0.0)) {
    throw std::domain_error("calibrate_kappa: anchor power and mu must be > 0");
  }
  const double x = gamma * anchor_power * l_eff;
  return anchor_mu / (x * x);
}

double noise_mean(const NoiseProfile& profile, double channel_detuning_hz) {
  if (profile.noise_mean_per_slot < 0.0) {
    throw std::invalid_argument("NoiseProfile: noise mean must be >= 0");
  }
  switch (profile.mode) {
    case NoiseMode::none:
      return 0.0;
    case NoiseMode::silicon: {
      // The silicon Raman line is narrow; channels detuned away from the
      // 15.6 THz peak see no SpRS noise.
      const double kLineHalfWidth = 0.5e12;
      const double off = std::abs(std::abs(channel_detuning_hz) - profile.raman_shift);
      return off < kLineHalfWidth ? profile.noise_mean_per_slot : 0.0;
    }
    case NoiseMode::broadband_fiber:
      return profile.noise_mean_per_slot;
  }
  return 0.0;
}

std::uint64_t sample_pair_count(double mu, RandomStream& rng) {
  if (mu < 0.0) throw std::domain_error("sample_pair_count: mu must be >= 0");
  return rng.poisson(mu);
}

} // namespace tbsim
