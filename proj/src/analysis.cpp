#include "tbsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tbsim/constants.hpp"
#include "tbsim/units.hpp"

namespace tbsim {

CarEstimate compute_car(const CountRecord& record, int slot0) {
  if (slot0 < 0 || slot0 >= record.n_slots) {
    throw std::invalid_argument("compute_car: slot index out of range");
  }
  const double c = static_cast<double>(record.coincidences[slot0][slot0]);
  const double a = static_cast<double>(record.accidentals[slot0][slot0]);
  CarEstimate est;
  if (a <= 0.0) {
    // Undefined; caller should accumulate more gates.
    est.defined = false;
    return est;
  }
  est.defined = true;
  est.car = c / a;
  // Propagated Poisson errors; a one-count floor keeps the zero-coincidence
  // case finite.
  est.sigma = (c / a) * std::sqrt(1.0 / std::max(c, 1.0) + 1.0 / a);
  if (c == 0.0) est.sigma = 1.0 / a;
  return est;
}

namespace {

// Solves a 4x4 system in place by Gaussian elimination with partial
// pivoting. Returns false if the matrix is numerically singular.
bool solve4(double m[4][4], double rhs[4], double out[4]) {
  int idx[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(m[idx[r]][col]) > std::abs(m[idx[piv]][col])) piv = r;
    }
    std::swap(idx[col], idx[piv]);
    const double diag = m[idx[col]][col];
    if (std::abs(diag) < 1e-300) return false;
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[idx[r]][col] / diag;
      if (f == 0.0) continue;
      for (int c = col; c < 4; ++c) m[idx[r]][c] -= f * m[idx[col]][c];
      rhs[idx[r]] -= f * rhs[idx[col]];
    }
  }
  for (int col = 3; col >= 0; --col) {
    double s = rhs[idx[col]];
    for (int c = col + 1; c < 4; ++c) s -= m[idx[col]][c] * out[c];
    out[col] = s / m[idx[col]][col];
  }
  return true;
}

// 4x4 inverse via column-wise solves.
bool invert4(const double m[4][4], double inv[4][4]) {
  for (int col = 0; col < 4; ++col) {
    double a[4][4];
    double rhs[4] = {};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) a[r][c] = m[r][c];
    rhs[col] = 1.0;
    double x[4];
    if (!solve4(a, rhs, x)) return false;
    for (int r = 0; r < 4; ++r) inv[r][col] = x[r];
  }
  return true;
}

struct Model {
  // count = a (1 + v cos(b x + c))
  static double eval(const double p[4], double x) {
    return p[0] * (1.0 + p[1] * std::cos(p[2] * x + p[3]));
  }
  static void jacobian(const double p[4], double x, double j[4]) {
    const double arg = p[2] * x + p[3];
    const double co = std::cos(arg), si = std::sin(arg);
    j[0] = 1.0 + p[1] * co;
    j[1] = p[0] * co;
    j[2] = -p[0] * p[1] * x * si;
    j[3] = -p[0] * p[1] * si;
  }
};

double chi2_at(const double p[4], std::span<const double> x,
               std::span<const double> y, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - Model::eval(p, x[i]);
    s += w[i] * r * r;
  }
  return s;
}

// Deterministic initializer: mean level, peak-to-trough visibility,
// frequency from a lock-in scan (unless hinted), phase from the lock-in
// quadratures.
void initialize(std::span<const double> x, std::span<const double> y,
                std::span<const double> w, const FringeFitOptions& options,
                double p[4]) {
  const std::size_t n = x.size();
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w[i];
    mean += w[i] * y[i];
  }
  mean /= wsum;
  const auto [mn_it, mx_it] = std::minmax_element(y.begin(), y.end());
  const double mx = *mx_it, mn = *mn_it;
  double v0 = (mx + mn) > 0.0 ? (mx - mn) / (mx + mn) : 0.0;
  v0 = std::clamp(v0, 0.0, 1.0);

  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double span = *xmax_it - *xmin_it;

  auto lockin = [&](double b, double& cc, double& ss) {
    cc = 0.0;
    ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i] - mean;
      cc += w[i] * d * std::cos(b * x[i]);
      ss += w[i] * d * std::sin(b * x[i]);
    }
  };

  double b0;
  if (options.angular_frequency_hint) {
    b0 = *options.angular_frequency_hint;
  } else {
    b0 = kTwoPi / span;
    double best = -1.0;
    for (int k = 0; k < 400; ++k) {
      const double b = kTwoPi * (0.25 + 0.025 * k) / span; // 1/4 .. ~10 periods
      double cc, ss;
      lockin(b, cc, ss);
      const double r2 = cc * cc + ss * ss;
      if (r2 > best) {
        best = r2;
        b0 = b;
      }
    }
  }
  double cc, ss;
  lockin(b0, cc, ss);
  p[0] = std::max(mean, 1e-300);
  p[1] = v0;
  p[2] = b0;
  p[3] = std::atan2(-ss, cc);
}

} // namespace

FringeFit fit_fringe(std::span<const double> x, std::span<const double> counts,
                     const FringeFitOptions& options) {
  const std::size_t n = x.size();
  if (n != counts.size()) throw std::invalid_argument("fit_fringe: size mismatch");
  if (n < 5) throw std::invalid_argument("fit_fringe: need at least 5 points");
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  if (!(*xmax_it > *xmin_it)) throw std::invalid_argument("fit_fringe: degenerate x span");

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::max(counts[i], 1.0);

  double p[4];
  initialize(x, counts, w, options, p);

  double lambda = 1e-3;
  double chi2 = chi2_at(p, x, counts, w);
  FringeFit fit;
  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    double jtj[4][4] = {};
    double jtr[4] = {};
    for (std::size_t i = 0; i < n; ++i) {
      double j[4];
      Model::jacobian(p, x[i], j);
      const double r = counts[i] - Model::eval(p, x[i]);
      for (int a = 0; a < 4; ++a) {
        jtr[a] += w[i] * j[a] * r;
        for (int b = a; b < 4; ++b) jtj[a][b] += w[i] * j[a] * j[b];
      }
    }
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

    double damped[4][4];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) damped[a][b] = jtj[a][b];
    for (int a = 0; a < 4; ++a) {
      damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
    }
    double rhs[4] = {jtr[0], jtr[1], jtr[2], jtr[3]};
    double step[4];
    if (!solve4(damped, rhs, step)) {
      lambda *= 10.0;
      continue;
    }
    double trial[4] = {p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]};
    const double trial_chi2 = chi2_at(trial, x, counts, w);
    if (trial_chi2 <= chi2) {
      const double rel = std::abs(chi2 - trial_chi2) / std::max(chi2, 1e-300);
      double step_norm = 0.0;
      for (int a = 0; a < 4; ++a) {
        step_norm = std::max(step_norm, std::abs(step[a]) / (std::abs(p[a]) + 1e-12));
      }
      for (int a = 0; a < 4; ++a) p[a] = trial[a];
      chi2 = trial_chi2;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (rel < 1e-14 && step_norm < 1e-10) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  // A chi2 of exactly zero (noiseless data) counts as converged even if the
  // relative-change criterion never fired.
  if (!converged && chi2 < 1e-18) converged = true;
  if (!converged && it >= options.max_iterations) {
    throw std::runtime_error("fit_fringe: no convergence after " +
                             std::to_string(options.max_iterations) +
                             " iterations (chi2=" + std::to_string(chi2) + ")");
  }

  // Canonical form: v >= 0, c in (-pi, pi].
  if (p[1] < 0.0) {
    p[1] = -p[1];
    p[3] += kPi;
  }
  p[3] = std::remainder(p[3], kTwoPi);

  fit.a = p[0];
  fit.v = p[1];
  fit.b = p[2];
  fit.c = p[3];
  fit.chi2 = chi2;
  fit.iterations = it;
  fit.converged = true;
  fit.over_unity = p[1] > 1.0;

  // chi2-scaled covariance; vanishes for an exact fit, approaches the plain
  // Poisson-weighted covariance when reduced chi2 ~ 1.
  double jtj[4][4] = {};
  for (std::size_t i = 0; i < n; ++i) {
    double j[4];
    Model::jacobian(p, x[i], j);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) jtj[a][b] += w[i] * j[a] * j[b];
  }
  for (int a = 0; a < 4; ++a) jtj[a][a] += 1e-12 * std::max(jtj[a][a], 1.0);
  double cov[4][4];
  const double scale = n > 4 ? chi2 / static_cast<double>(n - 4) : 1.0;
  if (invert4(jtj, cov)) {
    fit.sigma_a = std::sqrt(std::max(cov[0][0] * scale, 0.0)) + 1e-15;
    fit.sigma_v = std::sqrt(std::max(cov[1][1] * scale, 0.0)) + 1e-15;
    fit.sigma_b = std::sqrt(std::max(cov[2][2] * scale, 0.0)) + 1e-15;
    fit.sigma_c = std::sqrt(std::max(cov[3][3] * scale, 0.0)) + 1e-15;
  }
  return fit;
}

SubtractedFringe subtract_accidentals(std::span<const double> x,
                                      std::span<const double> counts,
                                      std::span<const double> accidental_level,
                                      const FringeFitOptions& options) {
  if (x.size() != counts.size() || x.size() != accidental_level.size()) {
    throw std::invalid_argument("subtract_accidentals: size mismatch");
  }
  SubtractedFringe out;
  out.corrected.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (accidental_level[i] < 0.0) {
      throw std::invalid_argument("subtract_accidentals: accidental level must be >= 0");
    }
    out.corrected[i] = counts[i] - accidental_level[i]; // negatives kept
  }
  out.fit = fit_fringe(x, out.corrected, options);
  return out;
}

double dark_fraction_of_accidentals(const ExperimentConfig& config) {
  if (config.scenario != Scenario::fringe) {
    throw std::invalid_argument("dark_fraction_of_accidentals: fringe config required");
  }
  const SlotRates r = analytic_rates(config);
  const double p_s = r.p_s[1], p_i = r.p_i[1];
  if (!(p_s > 0.0) || !(p_i > 0.0)) {
    throw std::domain_error("dark_fraction_of_accidentals: zero singles probability");
  }
  const double d_s = config.signal_detector.dark_per_gate;
  const double d_i = config.idler_detector.dark_per_gate;
  return 1.0 - ((p_s - d_s) * (p_i - d_i)) / (p_s * p_i);
}

GammaFit estimate_gamma_from_sweep(std::span<const double> powers_w,
                                   std::span<const double> mus, double l_eff) {
  if (powers_w.size() != mus.size() || powers_w.empty()) {
    throw std::invalid_argument("estimate_gamma_from_sweep: need matching non-empty points");
  }
  if (!(l_eff > 0.0)) throw std::invalid_argument("estimate_gamma_from_sweep: l_eff must be > 0");
  double sxx = 0.0, sxy = 0.0;
  bool any_mu = false;
  for (std::size_t i = 0; i < powers_w.size(); ++i) {
    if (!(powers_w[i] > 0.0)) {
      throw std::invalid_argument("estimate_gamma_from_sweep: powers must be > 0");
    }
    if (mus[i] > 0.0) any_mu = true;
    const double lin = powers_w[i] * l_eff;
    const double xq = lin * lin; // mu = gamma^2 * xq
    sxx += xq * xq;
    sxy += xq * mus[i];
  }
  if (!any_mu || !(sxy > 0.0)) {
    throw std::invalid_argument("estimate_gamma_from_sweep: all mu values are zero");
  }
  GammaFit fit;
  fit.gamma_per_w_m = std::sqrt(sxy / sxx);
  double resid2 = 0.0;
  std::size_t n_resid = 0;
  for (std::size_t i = 0; i < powers_w.size(); ++i) {
    if (!(mus[i] > 0.0)) continue;
    const double lin = powers_w[i] * l_eff * fit.gamma_per_w_m;
    const double rel = (mus[i] - lin * lin) / mus[i];
    resid2 += rel * rel;
    ++n_resid;
  }
  fit.rms_relative_residual = n_resid ? std::sqrt(resid2 / static_cast<double>(n_resid)) : 0.0;
  return fit;
}

MuEstimate infer_mu_from_singles(std::uint64_t singles, std::uint64_t gates,
                                 const ChannelSpec& channel, const DetectorSpec& det,
                                 bool analyzers_present) {
  if (gates == 0) throw std::invalid_argument("infer_mu_from_singles: gates must be > 0");
  const double alpha =
      db_to_transmittance(channel.scenario_loss_db(analyzers_present)) * det.efficiency;
  if (!(alpha > 0.0)) throw std::domain_error("infer_mu_from_singles: zero efficiency");
  const double rate = static_cast<double>(singles) / static_cast<double>(gates);
  MuEstimate est;
  est.sigma = std::sqrt(std::max(static_cast<double>(singles), 1.0)) /
              static_cast<double>(gates) / alpha;
  const double mu = (rate - det.dark_per_gate) / alpha;
  if (mu <= 0.0) {
    est.mu = 0.0;
    est.clamped = rate <= det.dark_per_gate;
    return est;
  }
  est.mu = mu;
  return est;
}

} // namespace tbsim
