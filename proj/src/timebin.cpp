#include "tbsim/timebin.hpp"

#include <cmath>
#include <stdexcept>

#include "tbsim/constants.hpp"

namespace tbsim {

std::array<PortAmplitude, 4> mzi_port_amplitudes(int slot_in, double theta) {
  if (slot_in != 1 && slot_in != 2) {
    throw std::invalid_argument("mzi_port_amplitudes: input slot must be 1 or 2");
  }
  const std::complex<double> e = std::polar(0.5, theta); // e^{i theta}/2
  return {{
      {slot_in, Port::A, {0.5, 0.0}},
      {slot_in + 1, Port::A, e},
      {slot_in, Port::B, {0.5, 0.0}},
      {slot_in + 1, Port::B, -e},
  }};
}

double JointOutcomeDistribution::sum() const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 2; ++d) s += p_[a][b][c][d];
  return s;
}

double JointOutcomeDistribution::signal_marginal(int slot, Port port) const {
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 2; ++d) s += p_[slot - 1][static_cast<int>(port)][c][d];
  return s;
}

double JointOutcomeDistribution::idler_marginal(int slot, Port port) const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b) s += p_[a][b][slot - 1][static_cast<int>(port)];
  return s;
}

JointOutcomeDistribution joint_outcome_distribution(
    const TimeBinEntangledState& state, double theta_s, double theta_i) {
  // Pair amplitudes from both creation slots composed through each
  // photon's analyzer. Tiny negative values from cancellation are clamped.
  const std::complex<double> slot_amp[2] = {
      {1.0 / std::sqrt(2.0), 0.0},
      std::polar(1.0 / std::sqrt(2.0), state.phi),
  };

  std::complex<double> amp[3][2][3][2] = {};
  for (int k = 1; k <= 2; ++k) {
    const auto as = mzi_port_amplitudes(k, theta_s);
    const auto ai = mzi_port_amplitudes(k, theta_i);
    for (const auto& s : as) {
      for (const auto& i : ai) {
        amp[s.slot - 1][static_cast<int>(s.port)][i.slot - 1]
           [static_cast<int>(i.port)] += slot_amp[k - 1] * s.amp * i.amp;
      }
    }
  }

  JointOutcomeDistribution dist;
  for (int a = 1; a <= 3; ++a)
    for (int pb = 0; pb < 2; ++pb)
      for (int c = 1; c <= 3; ++c)
        for (int pd = 0; pd < 2; ++pd) {
          const auto v = amp[a - 1][pb][c - 1][pd];
          double p = std::norm(v);
          if (p < 0.0) p = 0.0;
          dist.at(a, static_cast<Port>(pb), c, static_cast<Port>(pd)) = p;
        }
  return dist;
}

double slot2_coincidence_probability(double phi, double theta_s, double theta_i) {
  return (1.0 + std::cos(theta_s + theta_i - phi)) / 16.0;
}

} // namespace tbsim
