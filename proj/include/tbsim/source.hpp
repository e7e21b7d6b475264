#pragma once

#include <cstdint>

#include "tbsim/rng.hpp"

namespace tbsim {

/// Double-pulse pump description.
struct PumpConfig {
  double wavelength = 0.0;          // [m]
  double peak_power = 0.0;          // waveguide-coupled peak power [W]
  double pulse_width = 0.0;         // [s]
  double pulse_interval = 0.0;      // slot spacing [s]
  double rep_rate = 0.0;            // double-pulse repetition [Hz]
  double relative_pump_phase = 0.0; // phi_p [rad]

  /// Phase of the entangled state: phi = 2 phi_p (mod 2pi).
  double entangled_phase() const;

  void validate() const;
};

/// Calibrated pair-generation model: mu = kappa (gamma P L_eff)^2.
/// kappa absorbs the spectral-overlap physics not modeled here.
struct SourceCalibration {
  double gamma = 0.0; // [1/(W m)]
  double l_eff = 0.0; // [m]
  double kappa = 1.0;

  void validate() const;
};

enum class NoiseMode { silicon, broadband_fiber, none };

struct NoiseProfile {
  NoiseMode mode = NoiseMode::silicon;
  double raman_shift = 15.6e12;        // [Hz], silicon Raman peak offset
  double noise_mean_per_slot = 0.0;    // photons/slot/channel at the source
};

/// Mean photon pairs per pulse at the given pump power (quadratic law).
double mean_pairs_per_pulse(const SourceCalibration& cal, const PumpConfig& pump);

/// Fixes kappa from one measured (power, mu) operating point.
double calibrate_kappa(double gamma, double l_eff, double anchor_power,
                       double anchor_mu);

/// Source-plane noise photons per slot for a channel at the given detuning.
/// Silicon suppresses Raman noise away from the (narrow) 15.6 THz peak.
double noise_mean(const NoiseProfile& profile, double channel_detuning_hz);

/// Poisson pair-count sample; deterministic for a fixed stream state.
std::uint64_t sample_pair_count(double mu, RandomStream& rng);

} // namespace tbsim
