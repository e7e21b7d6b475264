#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "tbsim/analysis.hpp"
#include "tbsim/config.hpp"
#include "tbsim/constants.hpp"
#include "tbsim/engine.hpp"

using namespace tbsim;

namespace {

// Poisson-count agreement: |observed - expected| within k sigma plus a small
// absolute slack for near-zero expectations.
bool count_close(double observed, double expected, double k = 4.0) {
  const double sigma = std::sqrt(std::max(expected, 1.0));
  return std::abs(observed - expected) <= k * sigma + 3.0;
}

} // namespace

TEST_CASE("preset operating point") {
  const auto cfg = paper_preset(Scenario::car);
  CHECK(cfg.mu() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(cfg.calibration.l_eff == doctest::Approx(7.7913e-3).epsilon(1e-4));
  CHECK(cfg.calibration.kappa == doctest::Approx(1.1171).epsilon(1e-3));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config validation ties analyzers to the fringe scenario") {
  auto cfg = paper_preset(Scenario::car);
  cfg.scenario = Scenario::fringe; // analyzers missing
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  auto fringe = paper_preset(Scenario::fringe);
  CHECK(fringe.signal_analyzer.has_value());
  fringe.scenario = Scenario::car; // analyzers present but unexpected
  CHECK_THROWS_AS(fringe.validate(), std::invalid_argument);
}

TEST_CASE("optimal mu closed form") {
  const auto cfg = paper_preset(Scenario::car);
  // sqrt(d_s d_i / (alpha_s alpha_i)), hand-evaluated for the preset chain.
  CHECK(car_optimal_mu(cfg) == doctest::Approx(4.3644e-3).epsilon(1e-3));
}

TEST_CASE("analytic singles at the CAR-optimal point") {
  const auto cfg = paper_preset(Scenario::car);
  const double mu = car_optimal_mu(cfg);
  const auto r = analytic_rates(cfg, {}, mu);
  CHECK(r.n_slots == 1);
  // 1 - (1 - dark) exp(-alpha mu), hand-evaluated.
  CHECK(r.p_s[0] == doctest::Approx(5.9495e-5).epsilon(1e-3));
  CHECK(r.p_i[0] == doctest::Approx(3.6621e-5).epsilon(1e-3));
  CHECK(r.p_acc[0][0] == doctest::Approx(r.p_s[0] * r.p_i[0]).epsilon(1e-12));
}

TEST_CASE("coincidence probability reduces to first order at small mu") {
  const auto cfg = paper_preset(Scenario::car);
  const double alpha_s = 4.46684e-3, alpha_i = 5.64147e-3;
  for (double mu : {1e-4, 1e-3, 4.3644e-3}) {
    const auto r = analytic_rates(cfg, {}, mu);
    const double first_order = mu * alpha_s * alpha_i + r.p_s[0] * r.p_i[0];
    CHECK(r.p_coinc[0][0] == doctest::Approx(first_order).epsilon(2e-3));
  }
}

TEST_CASE("CAR peak location and value") {
  const auto cfg = paper_preset(Scenario::car);
  std::vector<double> grid;
  for (double m = 1e-4; m < 0.2; m *= 1.3) grid.push_back(m);
  const auto curve = analytic_car_curve(cfg, grid);

  CHECK(curve.mu_peak == doctest::Approx(car_optimal_mu(cfg)).epsilon(0.05));
  CHECK(curve.car_peak > 45.0);
  CHECK(curve.car_peak < 58.0);
  for (const auto& pt : curve.points) CHECK(pt.car <= curve.car_peak * (1.0 + 1e-9));
}

TEST_CASE("CAR approaches 1 in both mu limits") {
  const auto cfg = paper_preset(Scenario::car);
  auto car_at = [&](double mu) {
    const auto r = analytic_rates(cfg, {}, mu);
    return r.p_coinc[0][0] / r.p_acc[0][0];
  };
  CHECK(car_at(1e-9) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(car_at(1e4) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("fringe rates at the reference phases") {
  const auto cfg = paper_preset(Scenario::fringe);
  const auto r = analytic_rates(cfg); // theta_s = theta_i = 0, delta = 0
  CHECK(r.n_slots == 3);
  // Middle slot: quarter of the pairs reach each analyzer's A port.
  CHECK(r.p_s[1] == doctest::Approx(1.51655e-4).epsilon(1e-3));
  CHECK(r.p_i[1] == doctest::Approx(1.53028e-4).epsilon(1e-3));
  // Outer slots carry half the middle-slot flux.
  CHECK(r.p_s[0] == doctest::Approx((r.p_s[1] - 4e-5) / 2.0 + 4e-5).epsilon(1e-3));
  // Coincidence at delta = 0: mu/8 alpha_s alpha_i plus accidentals.
  CHECK(r.p_coinc[1][1] ==
        doctest::Approx(0.1 / 8.0 * 4.46684e-3 * 5.64147e-3 + r.p_acc[1][1]).epsilon(3e-3));

  // At delta = pi the true-pair term vanishes.
  const auto dark_fringe = analytic_rates(cfg, PhasePoint{kPi, 0.0});
  CHECK(dark_fringe.p_coinc[1][1] ==
        doctest::Approx(dark_fringe.p_acc[1][1]).epsilon(1e-6));
}

TEST_CASE("analytic fringe scan geometry") {
  const auto cfg = paper_preset(Scenario::fringe);
  std::vector<double> temps;
  for (int i = 0; i < 21; ++i) temps.push_back(11.6 + i * 0.05);
  const auto scan = analytic_fringe_scan(cfg, temps);
  REQUIRE(scan.size() == 21);
  // One degC spans one full fringe with the preset phase map.
  CHECK(scan.front().delta == doctest::Approx(scan.back().delta - kTwoPi).epsilon(1e-9));
  // Maximum at the idler reference temperature (delta = 0 there).
  double best = -1.0, best_temp = 0.0;
  for (const auto& pt : scan) {
    if (pt.p_coinc > best) {
      best = pt.p_coinc;
      best_temp = pt.temperature_c;
    }
  }
  CHECK(best_temp == doctest::Approx(12.10).epsilon(1e-9));
}

TEST_CASE("count record merge") {
  const auto cfg = paper_preset(Scenario::car);
  const auto a = mc_run(cfg, 4000, 1);
  const auto b = mc_run(cfg, 4000, 2);
  CountRecord ab = a;
  ab.merge(b);
  CountRecord ba = b;
  ba.merge(a);
  CHECK(ab == ba);
  CHECK(ab.gates == 8000);

  CountRecord fringe_rec;
  fringe_rec.n_slots = 3;
  CountRecord car_rec;
  car_rec.n_slots = 1;
  CHECK_THROWS_AS(fringe_rec.merge(car_rec), std::invalid_argument);
}

TEST_CASE("MC runs are bit-reproducible and thread invariant") {
  const auto cfg = paper_preset(Scenario::car);
  const auto a = mc_run(cfg, 500000, 77);
  const auto b = mc_run(cfg, 500000, 77);
  CHECK(a == b);

  set_mc_threads(1);
  const auto serial_sched = mc_run(cfg, 500000, 77);
  set_mc_threads(0);
  CHECK(a == serial_sched);

  const auto c = mc_run(cfg, 500000, 78);
  CHECK_FALSE(a == c);
}

TEST_CASE("MC matches the analytic rates (car scenario)") {
  const auto cfg = paper_preset(Scenario::car);
  const std::uint64_t gates = 20'000'000;
  const auto rec = mc_run(cfg, gates, 31337);
  const auto r = analytic_rates(cfg);
  const double n = static_cast<double>(gates);

  CHECK(rec.n_slots == 1);
  CHECK(count_close(static_cast<double>(rec.singles_s[0]), r.p_s[0] * n));
  CHECK(count_close(static_cast<double>(rec.singles_i[0]), r.p_i[0] * n));
  CHECK(count_close(static_cast<double>(rec.coincidences[0][0]), r.p_coinc[0][0] * n));
  // Accidentals pair adjacent gates within each of the 256 shards.
  const double acc_opportunities = n - 256.0;
  CHECK(count_close(static_cast<double>(rec.accidentals[0][0]),
                    r.p_acc[0][0] * acc_opportunities));
}

TEST_CASE("MC matches the analytic rates (fringe scenario)") {
  const auto cfg = paper_preset(Scenario::fringe);
  const std::uint64_t gates = 20'000'000;
  const auto rec = mc_run(cfg, gates, 424242);
  const auto r = analytic_rates(cfg);
  const double n = static_cast<double>(gates);

  CHECK(rec.n_slots == 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(count_close(static_cast<double>(rec.singles_s[j]), r.p_s[j] * n));
    CHECK(count_close(static_cast<double>(rec.singles_i[j]), r.p_i[j] * n));
  }
  CHECK(count_close(static_cast<double>(rec.coincidences[1][1]), r.p_coinc[1][1] * n));
  CHECK(count_close(static_cast<double>(rec.coincidences[0][0]), r.p_coinc[0][0] * n));
  // The forbidden slot pair must stay at the accidental level.
  CHECK(count_close(static_cast<double>(rec.coincidences[0][2]), r.p_coinc[0][2] * n));
}

TEST_CASE("sharded kernel agrees with the reference implementation") {
  const auto cfg = paper_preset(Scenario::car);
  const std::uint64_t gates = 2'000'000;
  const auto fast = mc_run(cfg, gates, 5150);
  const auto ref = mc_run_reference(cfg, gates, 5150);

  auto both_close = [](std::uint64_t a, std::uint64_t b) {
    const double mean = 0.5 * (static_cast<double>(a) + static_cast<double>(b));
    return std::abs(static_cast<double>(a) - static_cast<double>(b)) <=
           6.0 * std::sqrt(std::max(mean, 1.0)) + 5.0;
  };
  CHECK(both_close(fast.singles_s[0], ref.singles_s[0]));
  CHECK(both_close(fast.singles_i[0], ref.singles_i[0]));
  CHECK(both_close(fast.coincidences[0][0], ref.coincidences[0][0]));
  CHECK(both_close(fast.accidentals[0][0], ref.accidentals[0][0]));
}

TEST_CASE("MC fringe scan layout") {
  const auto cfg = paper_preset(Scenario::fringe);
  const std::vector<double> temps{12.10, 12.35, 12.60};
  const auto records = mc_fringe_scan(cfg, temps, 50000, 9);
  REQUIRE(records.size() == 3);
  for (const auto& rec : records) {
    CHECK(rec.n_slots == 3);
    CHECK(rec.gates == 50000);
  }
  // Half a fringe away (12.60 vs 12.10) the coincidence rate collapses.
  const auto again = mc_fringe_scan(cfg, temps, 50000, 9);
  CHECK(records[0] == again[0]); // deterministic per-point seeding
}
