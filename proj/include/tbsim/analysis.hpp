#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tbsim/engine.hpp"

namespace tbsim {

struct CarEstimate {
  double car = 0.0;
  double sigma = 0.0;
  bool defined = false; // false when the accidental count is zero
};

/// CAR for one slot pair (slot, slot) of a count record, with propagated
/// Poisson counting error. `slot0` is 0-based; pass 1 for the middle slot of
/// a fringe record.
CarEstimate compute_car(const CountRecord& record, int slot0 = 0);

/// Result of fitting count = a (1 + V cos(b x + c)).
struct FringeFit {
  double a = 0.0, v = 0.0, b = 0.0, c = 0.0;
  double sigma_a = 0.0, sigma_v = 0.0, sigma_b = 0.0, sigma_c = 0.0;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool over_unity = false; // finite-sample corrected fits may exceed V = 1

  double visibility() const { return v; }
};

struct FringeFitOptions {
  /// Known angular frequency b; when absent it is initialized from a coarse
  /// frequency scan of the data.
  std::optional<double> angular_frequency_hint;
  int max_iterations = 200;
};

/// Poisson-weighted (w = 1/max(count,1)) Levenberg-Marquardt fit with a
/// deterministic initializer. Parameter errors come from the chi2-scaled
/// local covariance.
FringeFit fit_fringe(std::span<const double> x, std::span<const double> counts,
                     const FringeFitOptions& options = {});

struct SubtractedFringe {
  std::vector<double> corrected; // counts minus accidental level, unclamped
  FringeFit fit;
};

/// Subtracts the per-point accidental level and refits. Negative corrected
/// counts are kept; corrected visibilities may exceed 1 on finite samples.
SubtractedFringe subtract_accidentals(std::span<const double> x,
                                      std::span<const double> counts,
                                      std::span<const double> accidental_level,
                                      const FringeFitOptions& options = {});

/// Fraction of slot-2 accidentals involving at least one dark count:
/// f = 1 - (p_s - d_s)(p_i - d_i) / (p_s p_i).
double dark_fraction_of_accidentals(const ExperimentConfig& config);

struct GammaFit {
  double gamma_per_w_m = 0.0;
  double rms_relative_residual = 0.0;
};

/// Least-squares fit of mu = (gamma P l_eff)^2 under the kappa = 1
/// convention (closed form: gamma^2 = sum(mu x)/sum(x^2), x = (P l_eff)^2).
GammaFit estimate_gamma_from_sweep(std::span<const double> powers_w,
                                   std::span<const double> mus, double l_eff);

struct MuEstimate {
  double mu = 0.0;
  double sigma = 0.0;
  bool clamped = false; // singles rate at or below the dark floor
};

/// Inverts singles counts to a source-plane mean photon number:
/// mu = (singles/gates - dark) / (T eta).
MuEstimate infer_mu_from_singles(std::uint64_t singles, std::uint64_t gates,
                                 const ChannelSpec& channel,
                                 const DetectorSpec& det,
                                 bool analyzers_present = false);

} // namespace tbsim
