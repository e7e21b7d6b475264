#pragma once

#include <cstdint>
#include <optional>

#include "tbsim/rng.hpp"

namespace tbsim {

struct ChannelSpec {
  double loss_db = 0.0;              // total per-channel loss (excludes the
                                     // analyzer's intrinsic 50/50 splitting)
  double detuning_from_pump = 0.0;   // [Hz]
  std::optional<double> car_loss_db; // optional override for the
                                     // no-analyzer (car / pair-sweep) setup

  void validate() const;

  double scenario_loss_db(bool analyzers_present) const {
    return (!analyzers_present && car_loss_db) ? *car_loss_db : loss_db;
  }
};

struct DetectorSpec {
  double efficiency = 0.0;    // quantum efficiency
  double dark_per_gate = 0.0; // dark-count probability per gate
  double gate_width = 0.0;    // [s]
  double gate_rate = 0.0;     // [Hz]

  void validate() const;
};

/// Relates the gated-detector rate to the pump pulse train. The detector
/// observes every Nth double pulse.
struct GateSchedule {
  double pulse_rate = 0.0; // [Hz]
  double gate_rate = 0.0;  // [Hz]

  std::uint64_t pulses_per_gate() const; // validates integrality
  void validate() const;
};

/// Combined channel transmittance times detector quantum efficiency.
double total_efficiency(const ChannelSpec& channel, const DetectorSpec& det);

/// Threshold-detector click probability for Poisson light with the given
/// detector-plane mean photon number (before quantum efficiency):
/// p = 1 - (1 - dark) exp(-efficiency * m).
double click_probability(double mean_photons_at_detector, const DetectorSpec& det);

/// Bernoulli loss thinning.
bool thin_photon(RandomStream& rng, double survival);

} // namespace tbsim
