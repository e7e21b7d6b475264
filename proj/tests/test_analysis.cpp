#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tbsim/analysis.hpp"
#include "tbsim/config.hpp"
#include "tbsim/constants.hpp"

using namespace tbsim;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1.0);
  return x;
}

std::vector<double> fringe_counts(const std::vector<double>& x, double a, double v,
                                  double b, double c) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * (1.0 + v * std::cos(b * x[i] + c));
  return y;
}

} // namespace

TEST_CASE("CAR estimate from counts") {
  CountRecord rec;
  rec.n_slots = 1;
  rec.gates = 1000000;
  rec.coincidences[0][0] = 503;
  rec.accidentals[0][0] = 10;
  const auto est = compute_car(rec);
  CHECK(est.defined);
  CHECK(est.car == doctest::Approx(50.3));
  CHECK(est.sigma == doctest::Approx(50.3 * std::sqrt(1.0 / 503 + 1.0 / 10)).epsilon(1e-9));

  rec.accidentals[0][0] = 0;
  CHECK_FALSE(compute_car(rec).defined);
}

TEST_CASE("fringe fit recovers exact parameters") {
  const auto x = grid(0.0, kPi, 21);
  const double a = 100.0, v = 0.8, b = 2.0, c = 0.5;
  const auto y = fringe_counts(x, a, v, b, c);

  const auto fit = fit_fringe(x, y);
  CHECK(fit.converged);
  CHECK(fit.a == doctest::Approx(a).epsilon(1e-6));
  CHECK(fit.v == doctest::Approx(v).epsilon(1e-6));
  CHECK(fit.b == doctest::Approx(b).epsilon(1e-6));
  CHECK(std::cos(fit.c) == doctest::Approx(std::cos(c)).epsilon(1e-6));
  // Noiseless data: the scaled parameter errors collapse to zero.
  CHECK(fit.sigma_v < 1e-6);
  CHECK_FALSE(fit.over_unity);
}

TEST_CASE("fringe fit with a frequency hint") {
  const auto x = grid(11.6, 12.6, 21);
  const auto y = fringe_counts(x, 60.0, 0.87, kTwoPi, -kTwoPi * 12.1);
  FringeFitOptions opt;
  opt.angular_frequency_hint = kTwoPi;
  const auto fit = fit_fringe(x, y, opt);
  CHECK(fit.converged);
  CHECK(fit.v == doctest::Approx(0.87).epsilon(1e-6));
  CHECK(fit.b == doctest::Approx(kTwoPi).epsilon(1e-6));
}

TEST_CASE("negative visibility is canonicalized") {
  const auto x = grid(0.0, kPi, 25);
  // a(1 - 0.5 cos) is the same curve with the phase shifted by pi.
  const auto y = fringe_counts(x, 40.0, -0.5, 2.0, 0.3);
  const auto fit = fit_fringe(x, y);
  CHECK(fit.converged);
  CHECK(fit.v == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("fringe fit on Poisson-noisy counts") {
  const auto x = grid(11.6, 12.6, 21);
  const double a = 60.0, v = 0.85;
  const auto mean = fringe_counts(x, a, v, kTwoPi, -kTwoPi * 12.1);
  std::mt19937 gen(2718);
  std::vector<double> y(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    std::poisson_distribution<long> pd(mean[i]);
    y[i] = static_cast<double>(pd(gen));
  }

  FringeFitOptions opt;
  opt.angular_frequency_hint = kTwoPi;
  const auto fit = fit_fringe(x, y, opt);
  CHECK(fit.converged);
  // Counting statistics at this level give a few-percent visibility error.
  CHECK(fit.sigma_v > 0.005);
  CHECK(fit.sigma_v < 0.15);
  CHECK(std::abs(fit.v - v) < 4.0 * fit.sigma_v + 0.02);
}

TEST_CASE("accidental subtraction restores unit visibility") {
  const auto x = grid(11.6, 12.6, 21);
  const double a = 50.0, acc = 12.0;
  auto y = fringe_counts(x, a, 1.0, kTwoPi, -kTwoPi * 12.1);
  std::vector<double> acc_level(x.size(), acc);
  for (auto& yi : y) yi += acc;

  FringeFitOptions opt;
  opt.angular_frequency_hint = kTwoPi;
  const auto raw = fit_fringe(x, y, opt);
  CHECK(raw.v < 1.0);
  CHECK(raw.v == doctest::Approx(a / (a + acc)).epsilon(1e-6));

  const auto sub = subtract_accidentals(x, y, acc_level, opt);
  CHECK(sub.fit.converged);
  CHECK(sub.fit.v == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(sub.corrected.size() == y.size());
  CHECK(sub.corrected[0] == doctest::Approx(y[0] - acc).epsilon(1e-12));
}

TEST_CASE("over-subtraction flags over-unity visibility") {
  const auto x = grid(0.0, kPi, 21);
  auto y = fringe_counts(x, 30.0, 1.0, 2.0, 0.0);
  // Subtracting more than the true floor pushes V past 1.
  std::vector<double> acc_level(x.size(), 5.0);
  for (auto& yi : y) yi += 4.0;
  const auto sub = subtract_accidentals(x, y, acc_level);
  CHECK(sub.fit.v > 1.0);
  CHECK(sub.fit.over_unity);
}

TEST_CASE("dark counts dominate a third of the accidentals") {
  const auto cfg = paper_preset(Scenario::fringe);
  const double f = dark_fraction_of_accidentals(cfg);
  CHECK(f == doctest::Approx(0.3215).epsilon(0.02));
  CHECK(1.0 - f >= 0.65);
}

TEST_CASE("gamma recovery from a clean power sweep") {
  const double gamma = 320.0, l_eff = 7.7913e-3;
  std::vector<double> powers, mus;
  for (double p = 0.02; p <= 0.2; p += 0.02) {
    powers.push_back(p);
    mus.push_back(std::pow(gamma * p * l_eff, 2));
  }
  const auto fit = estimate_gamma_from_sweep(powers, mus, l_eff);
  CHECK(fit.gamma_per_w_m == doctest::Approx(gamma).epsilon(1e-9));
  CHECK(fit.rms_relative_residual < 1e-9);
}

TEST_CASE("gamma recovery tolerates measurement noise") {
  const double gamma = 320.0, l_eff = 7.7913e-3;
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> noise(-0.10, 0.10);
  std::vector<double> powers, mus;
  for (double p = 0.02; p <= 0.2; p += 0.01) {
    powers.push_back(p);
    mus.push_back(std::pow(gamma * p * l_eff, 2) * (1.0 + noise(gen)));
  }
  const auto fit = estimate_gamma_from_sweep(powers, mus, l_eff);
  CHECK(fit.gamma_per_w_m == doctest::Approx(gamma).epsilon(0.06));
  CHECK(fit.rms_relative_residual < 0.15);
}

TEST_CASE("gamma fit is scale equivariant") {
  std::vector<double> powers{0.05, 0.1, 0.15};
  std::vector<double> mus{0.01, 0.041, 0.088};
  const double l_eff = 7.7913e-3;
  const auto base = estimate_gamma_from_sweep(powers, mus, l_eff);
  const auto halved = estimate_gamma_from_sweep(powers, mus, l_eff / 2.0);
  CHECK(halved.gamma_per_w_m == doctest::Approx(2.0 * base.gamma_per_w_m).epsilon(1e-9));
}

TEST_CASE("mu inference inverts the singles rate") {
  const ChannelSpec channel{13.5, 400e9, {}};
  const DetectorSpec det{0.10, 4e-5, 1.4e-9, 5e6};
  const double alpha = total_efficiency(channel, det);
  const double mu = 0.05;
  const std::uint64_t gates = 10'000'000;
  const auto singles =
      static_cast<std::uint64_t>(std::llround((det.dark_per_gate + alpha * mu) * gates));
  const auto est = infer_mu_from_singles(singles, gates, channel, det);
  CHECK_FALSE(est.clamped);
  CHECK(est.mu == doctest::Approx(mu).epsilon(1e-5));
  CHECK(est.sigma > 0.0);

  const auto dark_only = infer_mu_from_singles(
      static_cast<std::uint64_t>(det.dark_per_gate * gates / 2), gates, channel, det);
  CHECK(dark_only.clamped);
  CHECK(dark_only.mu == doctest::Approx(0.0));
}
