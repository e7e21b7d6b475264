#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tbsim {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t mc_gates = 10'000'000;
  std::uint64_t seed = 20260824;
  /// Target expected peak coincidence count per fringe point for the
  /// subtracted-visibility check (sets gates per point).
  double fringe_peak_counts = 60.0;
  int fringe_points = 21;
};

/// Runs the full validation suite against the shipped preset. Each entry
/// corresponds to one release gate; `detail` carries the measured numbers.
std::vector<CriterionResult> run_acceptance_suite(const AcceptanceOptions& options = {});

} // namespace tbsim
