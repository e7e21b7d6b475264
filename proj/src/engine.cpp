#include "tbsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tbsim/constants.hpp"
#include "tbsim/units.hpp"

#ifdef TBSIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace tbsim {

namespace {

int g_mc_threads = 0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Everything the engines need, in detector-plane terms.
struct Derived {
  bool fringe = false;
  int n_slots = 1;
  double mu = 0.0;
  double phi = 0.0;
  double theta_s = 0.0, theta_i = 0.0;
  double alpha_s = 0.0, alpha_i = 0.0; // channel transmittance * efficiency
  double d_s = 0.0, d_i = 0.0;
  double nu_s = 0.0, nu_i = 0.0;       // source noise per input slot
  JointOutcomeDistribution dist;
};

Derived derive(const ExperimentConfig& config, std::optional<PhasePoint> phase,
               std::optional<double> mu_override) {
  config.validate();
  Derived d;
  d.fringe = config.scenario == Scenario::fringe;
  d.n_slots = d.fringe ? 3 : 1;
  d.mu = mu_override ? *mu_override : config.mu();
  if (d.mu < 0.0) throw std::domain_error("engine: mu must be >= 0");
  d.phi = config.pump.entangled_phase();

  double t_s = db_to_transmittance(config.signal_channel.scenario_loss_db(d.fringe));
  double t_i = db_to_transmittance(config.idler_channel.scenario_loss_db(d.fringe));
  if (d.fringe) {
    t_s *= db_to_transmittance(config.signal_analyzer->excess_loss_db);
    t_i *= db_to_transmittance(config.idler_analyzer->excess_loss_db);
    d.theta_s = phase ? phase->theta_s : config.signal_analyzer->theta();
    d.theta_i = phase ? phase->theta_i : config.idler_analyzer->theta();
    d.dist = joint_outcome_distribution({d.phi}, d.theta_s, d.theta_i);
  }
  d.alpha_s = t_s * config.signal_detector.efficiency;
  d.alpha_i = t_i * config.idler_detector.efficiency;
  d.d_s = config.signal_detector.dark_per_gate;
  d.d_i = config.idler_detector.dark_per_gate;
  d.nu_s = noise_mean(config.noise, config.signal_channel.detuning_from_pump);
  d.nu_i = noise_mean(config.noise, config.idler_channel.detuning_from_pump);
  return d;
}

// Port-A noise routing: a source noise photon in input slot k (1..2) exits
// at (k, A) or (k+1, A) with probability 1/4 each.
double noise_port_a_mean(double nu_per_input_slot, int slot /*1..3*/) {
  const int feeds = (slot == 2) ? 2 : 1;
  return nu_per_input_slot * 0.25 * static_cast<double>(feeds);
}

} // namespace

void ExperimentConfig::validate() const {
  pump.validate();
  waveguide.validate();
  calibration.validate();
  signal_channel.validate();
  idler_channel.validate();
  signal_detector.validate();
  idler_detector.validate();
  schedule.validate();
  const bool want_analyzers = scenario == Scenario::fringe;
  if (want_analyzers != (signal_analyzer.has_value() && idler_analyzer.has_value())) {
    throw std::invalid_argument(
        "ExperimentConfig: analyzers must be present exactly for the fringe scenario");
  }
}

double ExperimentConfig::mu() const {
  return mean_pairs_per_pulse(calibration, pump);
}

SlotRates analytic_rates(const ExperimentConfig& config,
                         std::optional<PhasePoint> phase,
                         std::optional<double> mu_override) {
  const Derived d = derive(config, phase, mu_override);
  SlotRates r;
  r.n_slots = d.n_slots;

  double survive_s[3] = {}, survive_i[3] = {}; // detected-photon mean per slot
  if (d.fringe) {
    for (int j = 1; j <= 3; ++j) {
      survive_s[j - 1] = d.alpha_s * (d.mu * d.dist.signal_marginal(j, Port::A) +
                                      noise_port_a_mean(d.nu_s, j));
      survive_i[j - 1] = d.alpha_i * (d.mu * d.dist.idler_marginal(j, Port::A) +
                                      noise_port_a_mean(d.nu_i, j));
    }
  } else {
    survive_s[0] = d.alpha_s * (d.mu + d.nu_s);
    survive_i[0] = d.alpha_i * (d.mu + d.nu_i);
  }

  double no_click_s[3], no_click_i[3];
  for (int j = 0; j < d.n_slots; ++j) {
    no_click_s[j] = (1.0 - d.d_s) * std::exp(-survive_s[j]);
    no_click_i[j] = (1.0 - d.d_i) * std::exp(-survive_i[j]);
    r.p_s[j] = 1.0 - no_click_s[j];
    r.p_i[j] = 1.0 - no_click_i[j];
  }

  for (int j = 0; j < d.n_slots; ++j) {
    for (int k = 0; k < d.n_slots; ++k) {
      const double cell =
          d.fringe ? d.dist.at(j + 1, Port::A, k + 1, Port::A) : (j == k ? 1.0 : 0.0);
      const double w = d.alpha_s * d.alpha_i * d.mu * cell;
      r.p_coinc[j][k] =
          1.0 - no_click_s[j] - no_click_i[k] + no_click_s[j] * no_click_i[k] * std::exp(w);
      r.p_acc[j][k] = r.p_s[j] * r.p_i[k];
    }
  }
  return r;
}

double car_optimal_mu(const ExperimentConfig& config) {
  const Derived d = derive(config, {}, 0.0);
  if (!(d.alpha_s > 0.0) || !(d.alpha_i > 0.0)) {
    throw std::domain_error("car_optimal_mu: channel efficiencies must be > 0");
  }
  return std::sqrt(d.d_s * d.d_i / (d.alpha_s * d.alpha_i));
}

CarCurve analytic_car_curve(const ExperimentConfig& config,
                            std::span<const double> mu_grid) {
  if (mu_grid.empty()) throw std::invalid_argument("analytic_car_curve: empty mu grid");
  CarCurve curve;
  auto car_at = [&](double mu) {
    const SlotRates r = analytic_rates(config, {}, mu);
    return r.p_coinc[0][0] / r.p_acc[0][0];
  };
  for (double mu : mu_grid) {
    if (!(mu > 0.0)) throw std::invalid_argument("analytic_car_curve: mu values must be > 0");
    curve.points.push_back({mu, car_at(mu)});
  }
  // Golden-section search in log mu; the curve is unimodal between the
  // CAR -> 1 limits at both ends.
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(1e-6), hi = std::log(10.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = car_at(std::exp(x1)), f2 = car_at(std::exp(x2));
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + gr * (hi - lo); f2 = car_at(std::exp(x2));
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - gr * (hi - lo); f1 = car_at(std::exp(x1));
    }
  }
  curve.mu_peak = std::exp(0.5 * (lo + hi));
  curve.car_peak = car_at(curve.mu_peak);
  return curve;
}

std::vector<FringePoint> analytic_fringe_scan(const ExperimentConfig& config,
                                              std::span<const double> idler_temps_c) {
  if (config.scenario != Scenario::fringe || !config.signal_analyzer ||
      !config.idler_analyzer) {
    throw std::invalid_argument("analytic_fringe_scan: fringe scenario with analyzers required");
  }
  std::vector<FringePoint> out;
  out.reserve(idler_temps_c.size());
  const double theta_s = config.signal_analyzer->theta();
  for (double temp : idler_temps_c) {
    AnalyzerSpec idler = *config.idler_analyzer;
    idler.temperature = temp;
    const double theta_i = idler.theta();
    const SlotRates r = analytic_rates(config, PhasePoint{theta_s, theta_i});
    const Derived d = derive(config, PhasePoint{theta_s, theta_i}, {});
    FringePoint pt;
    pt.temperature_c = temp;
    pt.theta_i = theta_i;
    pt.delta = theta_s + theta_i - d.phi;
    pt.p_s = r.p_s[1];
    pt.p_i = r.p_i[1];
    pt.p_acc = r.p_acc[1][1];
    // First order in mu: true-pair term plus independent-click accidentals.
    pt.p_coinc = d.mu * slot2_coincidence_probability(d.phi, theta_s, theta_i) *
                     d.alpha_s * d.alpha_i +
                 pt.p_acc;
    out.push_back(pt);
  }
  return out;
}

void CountRecord::merge(const CountRecord& other) {
  if (n_slots != other.n_slots) {
    throw std::invalid_argument("CountRecord::merge: slot layouts differ");
  }
  gates += other.gates;
  for (int j = 0; j < 3; ++j) {
    singles_s[j] += other.singles_s[j];
    singles_i[j] += other.singles_i[j];
    for (int k = 0; k < 3; ++k) {
      coincidences[j][k] += other.coincidences[j][k];
      accidentals[j][k] += other.accidentals[j][k];
    }
  }
}

bool CountRecord::operator==(const CountRecord& other) const {
  if (gates != other.gates || n_slots != other.n_slots) return false;
  for (int j = 0; j < 3; ++j) {
    if (singles_s[j] != other.singles_s[j] || singles_i[j] != other.singles_i[j])
      return false;
    for (int k = 0; k < 3; ++k) {
      if (coincidences[j][k] != other.coincidences[j][k]) return false;
      if (accidentals[j][k] != other.accidentals[j][k]) return false;
    }
  }
  return true;
}

namespace {

struct OutcomeCell {
  std::uint8_t slot_s, port_s, slot_i, port_i; // slots 0-based here
};

struct KernelParams {
  bool fringe = false;
  int n_slots = 1;
  double mu = 0.0;
  double q_pair = 0.0; // P(>=1 pair per gate)
  double alpha_s = 0.0, alpha_i = 0.0;
  double d_s = 0.0, d_i = 0.0;
  double nu_s = 0.0, nu_i = 0.0;       // per input slot
  double q_noise_s = 0.0, q_noise_i = 0.0;
  std::array<double, 36> cdf{};
  std::array<OutcomeCell, 36> cells{};
};

KernelParams make_kernel(const Derived& d) {
  KernelParams kp;
  kp.fringe = d.fringe;
  kp.n_slots = d.n_slots;
  kp.mu = d.mu;
  kp.q_pair = -std::expm1(-d.mu);
  kp.alpha_s = d.alpha_s;
  kp.alpha_i = d.alpha_i;
  kp.d_s = d.d_s;
  kp.d_i = d.d_i;
  kp.nu_s = d.nu_s;
  kp.nu_i = d.nu_i;
  kp.q_noise_s = -std::expm1(-d.nu_s);
  kp.q_noise_i = -std::expm1(-d.nu_i);
  if (d.fringe) {
    int n = 0;
    double cum = 0.0;
    for (int a = 1; a <= 3; ++a)
      for (int pb = 0; pb < 2; ++pb)
        for (int c = 1; c <= 3; ++c)
          for (int pd = 0; pd < 2; ++pd) {
            cum += d.dist.at(a, static_cast<Port>(pb), c, static_cast<Port>(pd));
            kp.cdf[n] = cum;
            kp.cells[n] = {static_cast<std::uint8_t>(a - 1), static_cast<std::uint8_t>(pb),
                           static_cast<std::uint8_t>(c - 1), static_cast<std::uint8_t>(pd)};
            ++n;
          }
    kp.cdf[35] = 1.0; // guard against rounding at the top of the table
  }
  return kp;
}

constexpr std::uint64_t kNoEvent = std::numeric_limits<std::uint64_t>::max();

inline std::uint64_t first_event(RandomStream& rs, double q) {
  if (q <= 0.0) return kNoEvent;
  return rs.geometric_gap(q);
}

inline void advance_event(RandomStream& rs, double q, std::uint64_t& next) {
  const std::uint64_t gap = rs.geometric_gap(q);
  next = (gap >= kNoEvent - next - 1) ? kNoEvent : next + 1 + gap;
}

inline int sample_cell(const KernelParams& kp, double u) {
  int idx = 0;
  while (idx < 35 && u >= kp.cdf[idx]) ++idx;
  return idx;
}

// Event-skipping shard kernel: gates without a pair, noise photon, or dark
// count contribute nothing and are jumped over with geometric gaps. Draw
// order within a gate is fixed: pairs, signal darks, idler darks, signal
// noise, idler noise.
void run_shard(const KernelParams& kp, std::uint64_t gates, std::uint64_t seed,
               CountRecord& out) {
  RandomStream rs(seed);
  out.gates = gates;
  out.n_slots = kp.n_slots;

  std::uint64_t next_pair = first_event(rs, kp.q_pair);
  std::uint64_t next_dark_s[3], next_dark_i[3];
  std::uint64_t next_noise_s[2] = {kNoEvent, kNoEvent};
  std::uint64_t next_noise_i[2] = {kNoEvent, kNoEvent};
  for (int j = 0; j < kp.n_slots; ++j) {
    next_dark_s[j] = first_event(rs, kp.d_s);
    next_dark_i[j] = first_event(rs, kp.d_i);
  }
  const int noise_inputs = kp.fringe ? 2 : 1;
  for (int j = 0; j < noise_inputs; ++j) {
    next_noise_s[j] = first_event(rs, kp.q_noise_s);
    next_noise_i[j] = first_event(rs, kp.q_noise_i);
  }

  std::uint64_t last_g = kNoEvent;
  bool last_idl[3] = {};

  for (;;) {
    std::uint64_t g = next_pair;
    for (int j = 0; j < kp.n_slots; ++j) {
      g = std::min({g, next_dark_s[j], next_dark_i[j]});
    }
    for (int j = 0; j < noise_inputs; ++j) {
      g = std::min({g, next_noise_s[j], next_noise_i[j]});
    }
    if (g >= gates) break;

    bool sig[3] = {}, idl[3] = {};

    if (next_pair == g) {
      const std::uint64_t pairs = rs.poisson_at_least_one(kp.mu);
      for (std::uint64_t p = 0; p < pairs; ++p) {
        if (kp.fringe) {
          const OutcomeCell& cell = kp.cells[sample_cell(kp, rs.uniform())];
          if (cell.port_s == 0 && rs.bernoulli(kp.alpha_s)) sig[cell.slot_s] = true;
          if (cell.port_i == 0 && rs.bernoulli(kp.alpha_i)) idl[cell.slot_i] = true;
        } else {
          if (rs.bernoulli(kp.alpha_s)) sig[0] = true;
          if (rs.bernoulli(kp.alpha_i)) idl[0] = true;
        }
      }
      advance_event(rs, kp.q_pair, next_pair);
    }
    for (int j = 0; j < kp.n_slots; ++j) {
      if (next_dark_s[j] == g) {
        sig[j] = true;
        advance_event(rs, kp.d_s, next_dark_s[j]);
      }
      if (next_dark_i[j] == g) {
        idl[j] = true;
        advance_event(rs, kp.d_i, next_dark_i[j]);
      }
    }
    for (int j = 0; j < noise_inputs; ++j) {
      if (next_noise_s[j] == g) {
        const std::uint64_t n = rs.poisson_at_least_one(kp.nu_s);
        for (std::uint64_t p = 0; p < n; ++p) {
          if (kp.fringe) {
            // Route through the analyzer: (slot j or j+1) x (A or B).
            const double u = rs.uniform();
            const int slot = j + (u >= 0.5 ? 1 : 0);
            const bool port_a = std::fmod(u, 0.5) < 0.25;
            if (port_a && rs.bernoulli(kp.alpha_s)) sig[slot] = true;
          } else if (rs.bernoulli(kp.alpha_s)) {
            sig[0] = true;
          }
        }
        advance_event(rs, kp.q_noise_s, next_noise_s[j]);
      }
      if (next_noise_i[j] == g) {
        const std::uint64_t n = rs.poisson_at_least_one(kp.nu_i);
        for (std::uint64_t p = 0; p < n; ++p) {
          if (kp.fringe) {
            const double u = rs.uniform();
            const int slot = j + (u >= 0.5 ? 1 : 0);
            const bool port_a = std::fmod(u, 0.5) < 0.25;
            if (port_a && rs.bernoulli(kp.alpha_i)) idl[slot] = true;
          } else if (rs.bernoulli(kp.alpha_i)) {
            idl[0] = true;
          }
        }
        advance_event(rs, kp.q_noise_i, next_noise_i[j]);
      }
    }

    for (int j = 0; j < kp.n_slots; ++j) {
      if (sig[j]) ++out.singles_s[j];
      if (idl[j]) ++out.singles_i[j];
    }
    for (int j = 0; j < kp.n_slots; ++j) {
      if (!sig[j]) continue;
      for (int k = 0; k < kp.n_slots; ++k) {
        if (idl[k]) ++out.coincidences[j][k];
      }
    }
    if (last_g != kNoEvent && last_g + 1 == g) {
      for (int j = 0; j < kp.n_slots; ++j) {
        if (!sig[j]) continue;
        for (int k = 0; k < kp.n_slots; ++k) {
          if (last_idl[k]) ++out.accidentals[j][k];
        }
      }
    }
    last_g = g;
    for (int j = 0; j < 3; ++j) last_idl[j] = idl[j];
  }
}

} // namespace

void set_mc_threads(int n) { g_mc_threads = n < 0 ? 0 : n; }
int mc_threads() { return g_mc_threads; }

CountRecord mc_run(const ExperimentConfig& config, std::uint64_t gates,
                   std::uint64_t seed, std::optional<PhasePoint> phase,
                   std::optional<double> mu_override) {
  if (gates < 1) throw std::invalid_argument("mc_run: gates must be >= 1");
  const Derived d = derive(config, phase, mu_override);
  const KernelParams kp = make_kernel(d);

  const std::uint64_t shards = std::min<std::uint64_t>(gates, 256);
  const std::uint64_t base = gates / shards;
  const std::uint64_t extra = gates % shards;
  std::vector<CountRecord> parts(shards);

#ifdef TBSIM_HAVE_OPENMP
  const int threads = g_mc_threads > 0 ? g_mc_threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (long long s = 0; s < static_cast<long long>(shards); ++s) {
    const std::uint64_t n = base + (static_cast<std::uint64_t>(s) < extra ? 1 : 0);
    // splitmix64 keeps shard streams decorrelated across nearby seeds;
    // a plain XOR would map adjacent seeds onto the same set of streams.
    run_shard(kp, n, splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(s) + 1),
              parts[s]);
  }

  CountRecord total;
  total.n_slots = kp.n_slots;
  total.config_hash = config.config_hash;
  for (const auto& p : parts) total.merge(p);
  return total;
}

CountRecord mc_run_reference(const ExperimentConfig& config, std::uint64_t gates,
                             std::uint64_t seed, std::optional<PhasePoint> phase,
                             std::optional<double> mu_override) {
  if (gates < 1) throw std::invalid_argument("mc_run_reference: gates must be >= 1");
  const Derived d = derive(config, phase, mu_override);
  const KernelParams kp = make_kernel(d);

  RandomStream rs(seed);
  CountRecord out;
  out.gates = gates;
  out.n_slots = kp.n_slots;
  out.config_hash = config.config_hash;
  const int noise_inputs = kp.fringe ? 2 : 1;

  bool last_idl[3] = {};
  for (std::uint64_t g = 0; g < gates; ++g) {
    bool sig[3] = {}, idl[3] = {};
    const std::uint64_t pairs = sample_pair_count(kp.mu, rs);
    for (std::uint64_t p = 0; p < pairs; ++p) {
      if (kp.fringe) {
        const OutcomeCell& cell = kp.cells[sample_cell(kp, rs.uniform())];
        if (cell.port_s == 0 && thin_photon(rs, kp.alpha_s)) sig[cell.slot_s] = true;
        if (cell.port_i == 0 && thin_photon(rs, kp.alpha_i)) idl[cell.slot_i] = true;
      } else {
        if (thin_photon(rs, kp.alpha_s)) sig[0] = true;
        if (thin_photon(rs, kp.alpha_i)) idl[0] = true;
      }
    }
    for (int j = 0; j < noise_inputs; ++j) {
      const std::uint64_t ns = kp.nu_s > 0.0 ? rs.poisson(kp.nu_s) : 0;
      for (std::uint64_t p = 0; p < ns; ++p) {
        if (kp.fringe) {
          const double u = rs.uniform();
          const int slot = j + (u >= 0.5 ? 1 : 0);
          if (std::fmod(u, 0.5) < 0.25 && thin_photon(rs, kp.alpha_s)) sig[slot] = true;
        } else if (thin_photon(rs, kp.alpha_s)) {
          sig[0] = true;
        }
      }
      const std::uint64_t ni = kp.nu_i > 0.0 ? rs.poisson(kp.nu_i) : 0;
      for (std::uint64_t p = 0; p < ni; ++p) {
        if (kp.fringe) {
          const double u = rs.uniform();
          const int slot = j + (u >= 0.5 ? 1 : 0);
          if (std::fmod(u, 0.5) < 0.25 && thin_photon(rs, kp.alpha_i)) idl[slot] = true;
        } else if (thin_photon(rs, kp.alpha_i)) {
          idl[0] = true;
        }
      }
    }
    for (int j = 0; j < kp.n_slots; ++j) {
      if (rs.bernoulli(kp.d_s)) sig[j] = true;
      if (rs.bernoulli(kp.d_i)) idl[j] = true;
    }

    for (int j = 0; j < kp.n_slots; ++j) {
      if (sig[j]) ++out.singles_s[j];
      if (idl[j]) ++out.singles_i[j];
      if (!sig[j]) continue;
      for (int k = 0; k < kp.n_slots; ++k) {
        if (idl[k]) ++out.coincidences[j][k];
      }
    }
    if (g > 0) {
      for (int j = 0; j < kp.n_slots; ++j) {
        if (!sig[j]) continue;
        for (int k = 0; k < kp.n_slots; ++k) {
          if (last_idl[k]) ++out.accidentals[j][k];
        }
      }
    }
    for (int j = 0; j < 3; ++j) last_idl[j] = idl[j];
  }
  return out;
}

std::vector<CountRecord> mc_fringe_scan(const ExperimentConfig& config,
                                        std::span<const double> idler_temps_c,
                                        std::uint64_t gates_per_point,
                                        std::uint64_t seed) {
  if (config.scenario != Scenario::fringe) {
    throw std::invalid_argument("mc_fringe_scan: fringe scenario required");
  }
  std::vector<CountRecord> out;
  out.reserve(idler_temps_c.size());
  const double theta_s = config.signal_analyzer->theta();
  for (std::size_t idx = 0; idx < idler_temps_c.size(); ++idx) {
    AnalyzerSpec idler = *config.idler_analyzer;
    idler.temperature = idler_temps_c[idx];
    // Decorrelate points; shard seeds are derived from this per-point base.
    const std::uint64_t point_seed = seed ^ splitmix64(idx + 1);
    out.push_back(mc_run(config, gates_per_point, point_seed,
                         PhasePoint{theta_s, idler.theta()}));
  }
  return out;
}

} // namespace tbsim
