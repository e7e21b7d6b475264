#pragma once

#include <array>
#include <complex>

namespace tbsim {

/// Maximally entangled two-slot state (|1>_s|1>_i + e^{i phi}|2>_s|2>_i)/sqrt(2).
struct TimeBinEntangledState {
  double phi = 0.0; // relative phase [rad]
};

/// 1-bit-delay Mach-Zehnder analyzer. The path phase theta is tied to the
/// device temperature through a linear map.
struct AnalyzerSpec {
  double theta_at_ref = 0.0;          // [rad] at temp_ref
  double excess_loss_db = 0.0;
  double temperature = 0.0;           // [degC]
  double temp_to_phase = 0.0;         // [rad/degC]
  double temp_ref = 0.0;              // [degC]

  double theta() const {
    return theta_at_ref + temp_to_phase * (temperature - temp_ref);
  }
};

enum class Port : int { A = 0, B = 1 };

struct PortAmplitude {
  int slot;                 // 1..3
  Port port;
  std::complex<double> amp;
};

/// Two-port analyzer transform for an input time slot (1 or 2):
///   port A: |k> -> (|k> + e^{i theta}|k+1>)/2
///   port B: |k> -> (|k> - e^{i theta}|k+1>)/2
/// The sign flip on port B completes the map to a unitary, so the total
/// outgoing probability is exactly 1.
std::array<PortAmplitude, 4> mzi_port_amplitudes(int slot_in, double theta);

/// Full 36-entry probability table over (slot, port) outcomes of both
/// photons after the analyzers. All terms are retained, coincident or not,
/// so the table sums to 1.
class JointOutcomeDistribution {
 public:
  double& at(int slot_s, Port port_s, int slot_i, Port port_i) {
    return p_[slot_s - 1][static_cast<int>(port_s)][slot_i - 1][static_cast<int>(port_i)];
  }
  double at(int slot_s, Port port_s, int slot_i, Port port_i) const {
    return p_[slot_s - 1][static_cast<int>(port_s)][slot_i - 1][static_cast<int>(port_i)];
  }

  double sum() const;

  /// Marginal probability that the signal photon lands at (slot, port).
  double signal_marginal(int slot, Port port) const;
  double idler_marginal(int slot, Port port) const;

 private:
  double p_[3][2][3][2] = {};
};

JointOutcomeDistribution joint_outcome_distribution(
    const TimeBinEntangledState& state, double theta_s, double theta_i);

/// Closed form for the middle-slot, both-port-A coincidence:
/// (1 + cos(theta_s + theta_i - phi)) / 16 per pair.
double slot2_coincidence_probability(double phi, double theta_s, double theta_i);

} // namespace tbsim
