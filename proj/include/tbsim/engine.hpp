#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tbsim/detection.hpp"
#include "tbsim/source.hpp"
#include "tbsim/timebin.hpp"
#include "tbsim/waveguide.hpp"

namespace tbsim {

enum class Scenario { pair_sweep, car, fringe };

struct ExperimentConfig {
  PumpConfig pump;
  WaveguideSpec waveguide;
  SourceCalibration calibration;
  NoiseProfile noise;
  ChannelSpec signal_channel, idler_channel;
  DetectorSpec signal_detector, idler_detector;
  std::optional<AnalyzerSpec> signal_analyzer, idler_analyzer;
  GateSchedule schedule;
  Scenario scenario = Scenario::car;
  std::uint64_t config_hash = 0;

  void validate() const;
  double mu() const; // pairs per gated pulse (per qubit in the fringe setup)
};

struct PhasePoint {
  double theta_s = 0.0;
  double theta_i = 0.0;
};

/// Per-gate probabilities from the closed-form engine. Slots are 1-based in
/// the physics; arrays here are 0-based with `n_slots` valid entries.
struct SlotRates {
  int n_slots = 1;
  std::array<double, 3> p_s{}, p_i{};  // singles click probabilities
  double p_coinc[3][3] = {};           // same-gate joint click, port A/A
  double p_acc[3][3] = {};             // shifted-gate (independent) product
};

/// Closed-form per-gate click and coincidence probabilities.
///
/// Coincidences use the exact Poisson-marking joint-click expression
/// 1 - S - I + S*I*e^{w}, which reduces to mu*P*alpha_s*alpha_i + p_s*p_i at
/// first order and keeps CAR -> 1 in both the mu -> 0 and mu -> inf limits.
SlotRates analytic_rates(const ExperimentConfig& config,
                         std::optional<PhasePoint> phase = {},
                         std::optional<double> mu_override = {});

struct CarPoint {
  double mu = 0.0;
  double car = 0.0;
};

struct CarCurve {
  std::vector<CarPoint> points;
  double mu_peak = 0.0;
  double car_peak = 0.0;
};

/// CAR as a function of mean idler photon number, plus the curve maximum.
CarCurve analytic_car_curve(const ExperimentConfig& config,
                            std::span<const double> mu_grid);

/// Noise-free closed form for the CAR-optimal mu: sqrt(d_s d_i / (a_s a_i)).
double car_optimal_mu(const ExperimentConfig& config);

struct FringePoint {
  double temperature_c = 0.0;
  double theta_i = 0.0;
  double delta = 0.0;    // theta_s + theta_i - phi
  double p_coinc = 0.0;  // slot-2 A/A coincidence probability per gate
  double p_acc = 0.0;    // slot-2 accidental (p_s * p_i)
  double p_s = 0.0, p_i = 0.0;
};

/// Expected slot-2 coincidence probability vs idler analyzer temperature,
/// first order in mu: mu (1+cos delta)/16 alpha_s alpha_i + p_s p_i.
std::vector<FringePoint> analytic_fringe_scan(
    const ExperimentConfig& config, std::span<const double> idler_temps_c);

/// Accumulated counts for one run. Mergeable by component-wise addition.
struct CountRecord {
  std::uint64_t gates = 0;
  int n_slots = 1;
  std::array<std::uint64_t, 3> singles_s{}, singles_i{};
  std::uint64_t coincidences[3][3] = {};
  std::uint64_t accidentals[3][3] = {};
  std::uint64_t config_hash = 0;

  void merge(const CountRecord& other);
  bool operator==(const CountRecord& other) const;
};

/// Monte Carlo engine. Gates are split across a fixed number of shards;
/// shard k owns its own stream with a seed mixed from (seed, k), so results
/// are bit-identical for a given seed regardless of thread count.
/// Accidentals are counted against the previous gate's idler clicks.
CountRecord mc_run(const ExperimentConfig& config, std::uint64_t gates,
                   std::uint64_t seed, std::optional<PhasePoint> phase = {},
                   std::optional<double> mu_override = {});

/// Straightforward per-gate serial loop over the same model. Kept as the
/// reference implementation for validating the sharded kernel; draw order
/// differs, so agreement with mc_run is statistical, not bitwise.
CountRecord mc_run_reference(const ExperimentConfig& config, std::uint64_t gates,
                             std::uint64_t seed,
                             std::optional<PhasePoint> phase = {},
                             std::optional<double> mu_override = {});

std::vector<CountRecord> mc_fringe_scan(const ExperimentConfig& config,
                                        std::span<const double> idler_temps_c,
                                        std::uint64_t gates_per_point,
                                        std::uint64_t seed);

/// Worker cap for mc_run. 0 means use all available OpenMP threads.
void set_mc_threads(int n);
int mc_threads();

} // namespace tbsim
