#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "tbsim/constants.hpp"
#include "tbsim/timebin.hpp"

using namespace tbsim;
using cplx = std::complex<double>;

namespace {

// Independent re-derivation of the joint outcome table, written directly from
// the state expansion rather than via the library's amplitude composition.
// amp(j, ps, k, pi) = sum_m c_m A_s(m -> j, ps) A_i(m -> k, pi) with
// c_1 = 1/sqrt(2), c_2 = e^{i phi}/sqrt(2) and the one-bit-delay analyzer map
// |m> -> (|m> +/- e^{i theta} |m+1>)/2.
double oracle_prob(double phi, double theta_s, double theta_i, int js, int ps,
                   int ki, int pi) {
  auto analyzer = [](int m, int out_slot, int port, double theta) -> cplx {
    if (out_slot == m) return 0.5;
    if (out_slot == m + 1) {
      const cplx e = std::polar(1.0, theta);
      return port == 0 ? 0.5 * e : -0.5 * e;
    }
    return 0.0;
  };
  const cplx c[2] = {cplx(1.0 / std::sqrt(2.0), 0.0),
                     std::polar(1.0 / std::sqrt(2.0), phi)};
  cplx amp = 0.0;
  for (int m = 1; m <= 2; ++m) {
    amp += c[m - 1] * analyzer(m, js, ps, theta_s) * analyzer(m, ki, pi, theta_i);
  }
  return std::norm(amp);
}

} // namespace

TEST_CASE("analyzer output is normalized") {
  for (double theta : {0.0, 0.4, 2.5, -1.1}) {
    for (int slot : {1, 2}) {
      const auto amps = mzi_port_amplitudes(slot, theta);
      double total = 0.0;
      for (const auto& a : amps) total += std::norm(a.amp);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("analyzer amplitudes at theta = 0") {
  const auto amps = mzi_port_amplitudes(1, 0.0);
  for (const auto& a : amps) {
    CHECK(std::abs(std::abs(a.amp) - 0.5) < 1e-12);
    CHECK((a.slot == 1 || a.slot == 2));
    if (a.slot == 2 && a.port == Port::B) {
      CHECK(a.amp.real() == doctest::Approx(-0.5));
    }
    if (a.slot == 1) {
      CHECK(a.amp.real() == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("joint table matches the brute-force oracle") {
  std::mt19937 gen(31);
  std::uniform_real_distribution<double> u(-2.0 * kPi, 2.0 * kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const double phi = u(gen), ts = u(gen), ti = u(gen);
    const auto dist = joint_outcome_distribution({phi}, ts, ti);
    for (int js = 1; js <= 3; ++js)
      for (int ps = 0; ps < 2; ++ps)
        for (int ki = 1; ki <= 3; ++ki)
          for (int pi = 0; pi < 2; ++pi) {
            const double expect = oracle_prob(phi, ts, ti, js, ps, ki, pi);
            CHECK(dist.at(js, static_cast<Port>(ps), ki, static_cast<Port>(pi)) ==
                  doctest::Approx(expect).epsilon(1e-12));
          }
  }
}

TEST_CASE("closed-form entries of the joint table") {
  const double phi = 0.7, ts = 1.3, ti = -0.4;
  const auto dist = joint_outcome_distribution({phi}, ts, ti);

  // Middle-slot A/A coincidence carries the interference.
  const double delta = ts + ti - phi;
  CHECK(dist.at(2, Port::A, 2, Port::A) ==
        doctest::Approx((1.0 + std::cos(delta)) / 16.0).epsilon(1e-12));
  CHECK(slot2_coincidence_probability(phi, ts, ti) ==
        doctest::Approx((1.0 + std::cos(delta)) / 16.0).epsilon(1e-12));

  // Satellite peaks are phase independent at 1/32 each.
  CHECK(dist.at(1, Port::A, 1, Port::A) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
  CHECK(dist.at(3, Port::A, 3, Port::A) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));

  // A pair cannot split across the first and last slot.
  for (int ps = 0; ps < 2; ++ps)
    for (int pi = 0; pi < 2; ++pi) {
      CHECK(dist.at(1, static_cast<Port>(ps), 3, static_cast<Port>(pi)) ==
            doctest::Approx(0.0));
      CHECK(dist.at(3, static_cast<Port>(ps), 1, static_cast<Port>(pi)) ==
            doctest::Approx(0.0));
    }
}

TEST_CASE("normalization and no-signaling over random phases") {
  std::mt19937 gen(77);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double phi = u(gen), ts = u(gen), ti = u(gen), ti2 = u(gen);
    const auto dist = joint_outcome_distribution({phi}, ts, ti);
    CHECK(std::abs(dist.sum() - 1.0) < 1e-12);

    // Signal marginals must not depend on the idler analyzer phase.
    const auto dist2 = joint_outcome_distribution({phi}, ts, ti2);
    for (int slot = 1; slot <= 3; ++slot)
      for (int p = 0; p < 2; ++p) {
        CHECK(std::abs(dist.signal_marginal(slot, static_cast<Port>(p)) -
                       dist2.signal_marginal(slot, static_cast<Port>(p))) < 1e-12);
      }
  }
}

TEST_CASE("joint table is 2pi periodic in every phase") {
  const double phi = 0.9, ts = 0.2, ti = 1.7;
  const auto a = joint_outcome_distribution({phi}, ts, ti);
  const auto b = joint_outcome_distribution({phi + kTwoPi}, ts + kTwoPi, ti - kTwoPi);
  for (int js = 1; js <= 3; ++js)
    for (int ps = 0; ps < 2; ++ps)
      for (int ki = 1; ki <= 3; ++ki)
        for (int pi = 0; pi < 2; ++pi) {
          CHECK(std::abs(a.at(js, static_cast<Port>(ps), ki, static_cast<Port>(pi)) -
                         b.at(js, static_cast<Port>(ps), ki, static_cast<Port>(pi))) <
                1e-12);
        }
}

TEST_CASE("coincidence extremes") {
  // Delta = 0 maximizes, Delta = pi nulls the middle-slot coincidence.
  CHECK(slot2_coincidence_probability(0.0, 0.0, 0.0) ==
        doctest::Approx(1.0 / 8.0).epsilon(1e-12));
  CHECK(slot2_coincidence_probability(0.0, kPi, 0.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Symmetric in the two analyzer phases.
  CHECK(slot2_coincidence_probability(0.3, 0.8, 0.1) ==
        doctest::Approx(slot2_coincidence_probability(0.3, 0.1, 0.8)).epsilon(1e-12));
}

TEST_CASE("analyzer temperature-to-phase map") {
  AnalyzerSpec spec;
  spec.theta_at_ref = 0.25;
  spec.temp_ref = 12.30;
  spec.temp_to_phase = kTwoPi;
  spec.temperature = 12.30;
  CHECK(spec.theta() == doctest::Approx(0.25));
  spec.temperature = 12.80;
  CHECK(spec.theta() == doctest::Approx(0.25 + kPi).epsilon(1e-12));
}
