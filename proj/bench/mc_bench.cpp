// Throughput comparison of the sharded OpenMP kernel against the serial
// per-gate reference implementation, plus a sanity cross-check of the
// resulting rates.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "tbsim/config.hpp"
#include "tbsim/engine.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* label, std::uint64_t gates, double secs,
            const tbsim::CountRecord& rec) {
  std::printf("%-22s %12llu gates in %7.3f s  (%8.2f Mgates/s)  singles_s=%llu coinc=%llu\n",
              label, static_cast<unsigned long long>(gates), secs,
              gates / secs / 1e6,
              static_cast<unsigned long long>(rec.singles_s[0] + rec.singles_s[1] +
                                              rec.singles_s[2]),
              static_cast<unsigned long long>(rec.coincidences[0][0] +
                                              rec.coincidences[1][1] +
                                              rec.coincidences[2][2]));
}

} // namespace

int main(int argc, char** argv) {
  std::uint64_t gates = 20'000'000;
  if (argc > 1) gates = std::strtoull(argv[1], nullptr, 10);
  const std::uint64_t seed = 42;

  for (const auto scenario : {tbsim::Scenario::car, tbsim::Scenario::fringe}) {
    const auto cfg = tbsim::paper_preset(scenario);
    const char* name = scenario == tbsim::Scenario::car ? "car" : "fringe";
    std::printf("--- scenario %s (mu = %.3f) ---\n", name, cfg.mu());

    auto t0 = Clock::now();
    const auto parallel = tbsim::mc_run(cfg, gates, seed);
    const double tp = seconds_since(t0);
    report("mc_run (parallel)", gates, tp, parallel);

    t0 = Clock::now();
    const auto serial = tbsim::mc_run_reference(cfg, gates, seed);
    const double ts = seconds_since(t0);
    report("mc_run_reference", gates, ts, serial);

    std::printf("speedup: %.2fx\n\n", ts / tp);
  }
  return 0;
}
