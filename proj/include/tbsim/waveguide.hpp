#pragma once

namespace tbsim {

/// Nonlinear waveguide parameters. SI units throughout; dB only at the
/// boundaries.
struct WaveguideSpec {
  double n2 = 0.0;         // nonlinear refractive index [m^2/W]
  double a_eff = 0.0;      // effective mode area [m^2]
  double length = 0.0;     // [m]
  double prop_loss_db = 0.0;            // propagation loss over full length
  double coupling_loss_db_per_facet = 0.0;

  void validate() const; // throws std::invalid_argument on violation
};

struct GammaValue {
  double per_w_m = 0.0; // [1/(W m)]
  double per_w_km() const { return per_w_m * 1e3; }
};

/// Kerr nonlinearity coefficient gamma = n2 * omega / (c * A_eff).
GammaValue gamma_coefficient(const WaveguideSpec& spec, double wavelength_m);

/// Loss-weighted interaction length (1 - e^{-alpha L}) / alpha.
/// Equals L in the lossless limit.
double effective_length(const WaveguideSpec& spec);

enum class BandwidthShape { gaussian, lorentzian, rectangular };

/// Coherence time for a given filter FWHM under the chosen spectral-shape
/// convention. Informational only; no single convention is canonical.
double coherence_time(double fwhm_hz, BandwidthShape shape);

} // namespace tbsim
