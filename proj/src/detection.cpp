#include "tbsim/detection.hpp"

#include <cmath>
#include <stdexcept>

#include "tbsim/units.hpp"

namespace tbsim {

void ChannelSpec::validate() const {
  if (loss_db < 0.0) throw std::invalid_argument("ChannelSpec: loss_db must be >= 0");
  if (car_loss_db && *car_loss_db < 0.0) {
    throw std::invalid_argument("ChannelSpec: car_loss_db must be >= 0");
  }
}

void DetectorSpec::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0) {
    throw std::invalid_argument("DetectorSpec: efficiency must be in [0,1]");
  }
  if (dark_per_gate < 0.0 || dark_per_gate >= 1.0) {
    throw std::invalid_argument("DetectorSpec: dark_per_gate must be in [0,1)");
  }
  if (gate_width < 0.0) throw std::invalid_argument("DetectorSpec: gate_width must be >= 0");
  if (!(gate_rate > 0.0)) throw std::invalid_argument("DetectorSpec: gate_rate must be > 0");
}

std::uint64_t GateSchedule::pulses_per_gate() const {
  validate();
  return static_cast<std::uint64_t>(std::llround(pulse_rate / gate_rate));
}

void GateSchedule::validate() const {
  if (!(pulse_rate > 0.0) || !(gate_rate > 0.0)) {
    throw std::invalid_argument("GateSchedule: rates must be > 0");
  }
  const double n = pulse_rate / gate_rate;
  if (n < 1.0 - 1e-9 || std::abs(n - std::round(n)) > 1e-6 * n) {
    throw std::invalid_argument(
        "GateSchedule: pulse_rate must be an integer multiple of gate_rate");
  }
}

double total_efficiency(const ChannelSpec& channel, const DetectorSpec& det) {
  channel.validate();
  det.validate();
  return db_to_transmittance(channel.loss_db) * det.efficiency;
}

double click_probability(double mean_photons_at_detector, const DetectorSpec& det) {
  det.validate();
  if (mean_photons_at_detector < 0.0) {
    throw std::domain_error("click_probability: mean photon number must be >= 0");
  }
  return 1.0 - (1.0 - det.dark_per_gate) *
                   std::exp(-det.efficiency * mean_photons_at_detector);
}

bool thin_photon(RandomStream& rng, double survival) {
  if (survival < 0.0 || survival > 1.0) {
    throw std::domain_error("thin_photon: survival must be in [0,1]");
  }
  return rng.bernoulli(survival);
}

} // namespace tbsim
