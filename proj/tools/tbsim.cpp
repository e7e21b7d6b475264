// tbsim: time-bin entangled photon-pair source simulator.
//
// Subcommands reproduce the standard measurements of a silicon-waveguide
// SFWM pair source: design numbers (gamma), pair number vs pump power,
// CAR vs mean photon number, and two-photon interference fringes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbsim/analysis.hpp"
#include "tbsim/config.hpp"
#include "tbsim/constants.hpp"
#include "tbsim/engine.hpp"
#include "tbsim/units.hpp"
#include "tbsim/validation.hpp"
#include "tbsim/waveguide.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonOptions {
  std::string config_path;
  std::string engine = "analytic";
  std::uint64_t gates = 1'000'000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int threads = -1; // -1: env or default
};

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return tbsim::fnv1a64(buf.str());
}

void apply_threads(const CommonOptions& opt) {
  if (opt.threads >= 0) {
    tbsim::set_mc_threads(opt.threads);
    return;
  }
  if (const char* env = std::getenv("TBSIM_THREADS")) {
    tbsim::set_mc_threads(std::max(0, std::atoi(env)));
  }
}

json make_manifest(const CommonOptions& opt, const std::string& scenario,
                   const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "tbsim";
  m["version"] = kVersion;
  m["scenario"] = scenario;
  m["engine"] = opt.engine;
  m["seed"] = opt.seed;
  m["gates"] = opt.gates;
  m["config_path"] = opt.config_path;
  m["config_hash"] = hex64(hash_file(opt.config_path));
  m["outputs"] = outputs;
  return m;
}

void write_csv(const fs::path& path, const json& manifest,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# tbsim " << kVersion << " manifest " << manifest.dump() << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i)
    v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

int run_gamma(const CommonOptions& opt, double fwhm_ghz) {
  const auto cfg = tbsim::load_experiment_config(opt.config_path, tbsim::Scenario::car);
  const auto gamma = tbsim::gamma_coefficient(cfg.waveguide, cfg.pump.wavelength);
  const double l_eff = tbsim::effective_length(cfg.waveguide);
  const double fwhm = fwhm_ghz * 1e9;
  const double tau_g = tbsim::coherence_time(fwhm, tbsim::BandwidthShape::gaussian);
  const double tau_l = tbsim::coherence_time(fwhm, tbsim::BandwidthShape::lorentzian);
  const double tau_r = tbsim::coherence_time(fwhm, tbsim::BandwidthShape::rectangular);

  std::printf("gamma            = %.4e /(W km)  (%.4e /(W m))\n", gamma.per_w_km(),
              gamma.per_w_m);
  std::printf("effective length = %.4e m  (physical %.4e m)\n", l_eff,
              cfg.waveguide.length);
  std::printf("coherence time @ %.1f GHz FWHM:\n", fwhm_ghz);
  std::printf("  gaussian     = %.4e s\n", tau_g);
  std::printf("  lorentzian   = %.4e s\n", tau_l);
  std::printf("  rectangular  = %.4e s\n", tau_r);

  if (opt.out_dir != ".") fs::create_directories(opt.out_dir);
  const fs::path out = fs::path(opt.out_dir) / "gamma.json";
  json doc;
  doc["manifest"] = make_manifest(opt, "gamma", {"gamma.json"});
  doc["gamma_per_w_km"] = gamma.per_w_km();
  doc["gamma_per_w_m"] = gamma.per_w_m;
  doc["effective_length_m"] = l_eff;
  doc["coherence_time_s"] = {{"gaussian", tau_g}, {"lorentzian", tau_l},
                             {"rectangular", tau_r}};
  write_json(out, doc);
  return 0;
}

int run_pair_sweep(const CommonOptions& opt, double pmin_mw, double pmax_mw, int points) {
  auto cfg = tbsim::load_experiment_config(opt.config_path, tbsim::Scenario::pair_sweep);
  const bool mc = opt.engine == "mc" || opt.engine == "both";
  const auto powers = linspace(pmin_mw * 1e-3, pmax_mw * 1e-3, points);

  std::vector<std::string> header{"power_mw", "mu_analytic"};
  if (mc) {
    header.insert(header.end(), {"mu_signal_mc", "mu_signal_mc_err", "mu_idler_mc",
                                 "mu_idler_mc_err"});
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<double> mu_analytic;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    tbsim::ExperimentConfig point = cfg;
    point.pump.peak_power = powers[i];
    const double mu = point.mu();
    mu_analytic.push_back(mu);
    std::vector<std::string> row{sci(powers[i] * 1e3), sci(mu)};
    if (mc) {
      const auto rec = tbsim::mc_run(point, opt.gates, opt.seed + i);
      const auto ms = tbsim::infer_mu_from_singles(rec.singles_s[0], rec.gates,
                                                   point.signal_channel,
                                                   point.signal_detector);
      const auto mi = tbsim::infer_mu_from_singles(rec.singles_i[0], rec.gates,
                                                   point.idler_channel,
                                                   point.idler_detector);
      row.insert(row.end(), {sci(ms.mu), sci(ms.sigma), sci(mi.mu), sci(mi.sigma)});
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(opt.out_dir);
  const json manifest =
      make_manifest(opt, "pair_sweep", {"pair_sweep.csv", "pair_sweep_summary.json"});
  write_csv(fs::path(opt.out_dir) / "pair_sweep.csv", manifest, header, rows);

  const auto fit = tbsim::estimate_gamma_from_sweep(powers, mu_analytic,
                                                    cfg.calibration.l_eff);
  json summary;
  summary["manifest"] = manifest;
  summary["gamma_fit_per_w_km"] = fit.gamma_per_w_m * 1e3;
  summary["gamma_fit_convention"] = "kappa=1";
  summary["rms_relative_residual"] = fit.rms_relative_residual;
  write_json(fs::path(opt.out_dir) / "pair_sweep_summary.json", summary);
  std::printf("pair-sweep: %d points, fitted gamma (kappa=1) = %.4e /(W km)\n", points,
              fit.gamma_per_w_m * 1e3);
  return 0;
}

int run_car(const CommonOptions& opt, double mu_min, double mu_max, int points) {
  auto cfg = tbsim::load_experiment_config(opt.config_path, tbsim::Scenario::car);
  const bool analytic = opt.engine == "analytic" || opt.engine == "both";
  const bool mc = opt.engine == "mc" || opt.engine == "both";
  const auto grid = logspace(mu_min, mu_max, points);
  const auto curve = tbsim::analytic_car_curve(cfg, grid);

  std::vector<std::string> header{"mu_idler"};
  if (analytic) header.push_back("car_analytic");
  if (mc) {
    header.push_back("car_mc");
    header.push_back("car_mc_err");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row{sci(grid[i])};
    if (analytic) row.push_back(sci(curve.points[i].car));
    if (mc) {
      const auto rec = tbsim::mc_run(cfg, opt.gates, opt.seed + i, {}, grid[i]);
      const auto est = tbsim::compute_car(rec);
      row.push_back(sci(est.defined ? est.car : std::nan("")));
      row.push_back(sci(est.defined ? est.sigma : std::nan("")));
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(opt.out_dir);
  const json manifest = make_manifest(opt, "car", {"car.csv", "car_summary.json"});
  write_csv(fs::path(opt.out_dir) / "car.csv", manifest, header, rows);

  json summary;
  summary["manifest"] = manifest;
  summary["peak_mu"] = curve.mu_peak;
  summary["peak_car"] = curve.car_peak;
  summary["optimal_mu_closed_form"] =
      cfg.noise.noise_mean_per_slot == 0.0 ? tbsim::car_optimal_mu(cfg) : curve.mu_peak;
  write_json(fs::path(opt.out_dir) / "car_summary.json", summary);
  std::printf("car: peak CAR = %.2f at mu = %.4e\n", curve.car_peak, curve.mu_peak);
  return 0;
}

json fit_to_json(const tbsim::FringeFit& fit) {
  return json{{"visibility", fit.v},       {"sigma_visibility", fit.sigma_v},
              {"amplitude", fit.a},        {"sigma_amplitude", fit.sigma_a},
              {"angular_frequency", fit.b}, {"phase", fit.c},
              {"chi2", fit.chi2},          {"over_unity", fit.over_unity}};
}

int run_fringe(const CommonOptions& opt, double tmin_c, double tmax_c, int points) {
  auto cfg = tbsim::load_experiment_config(opt.config_path, tbsim::Scenario::fringe);
  const bool analytic = opt.engine == "analytic" || opt.engine == "both";
  const bool mc = opt.engine == "mc" || opt.engine == "both";
  const auto temps = linspace(tmin_c, tmax_c, points);
  const auto scan = tbsim::analytic_fringe_scan(cfg, temps);

  tbsim::FringeFitOptions fit_options;
  fit_options.angular_frequency_hint = cfg.idler_analyzer->temp_to_phase;

  std::vector<std::string> header{"temp_c", "theta_i_rad", "delta_rad"};
  if (analytic) {
    header.push_back("p_coinc_analytic");
    header.push_back("p_acc_analytic");
  }
  if (mc) {
    header.push_back("counts_mc");
    header.push_back("acc_estimate_mc");
  }

  std::vector<tbsim::CountRecord> records;
  if (mc) records = tbsim::mc_fringe_scan(cfg, temps, opt.gates, opt.seed);

  std::vector<std::vector<std::string>> rows;
  std::vector<double> x, y_analytic, acc_analytic, y_mc, acc_mc;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto& pt = scan[i];
    std::vector<std::string> row{sci(pt.temperature_c), sci(pt.theta_i), sci(pt.delta)};
    x.push_back(pt.temperature_c);
    if (analytic) {
      row.push_back(sci(pt.p_coinc));
      row.push_back(sci(pt.p_acc));
      y_analytic.push_back(pt.p_coinc);
      acc_analytic.push_back(pt.p_acc);
    }
    if (mc) {
      const auto& rec = records[i];
      const double counts = static_cast<double>(rec.coincidences[1][1]);
      const double acc = static_cast<double>(rec.singles_s[1]) *
                         static_cast<double>(rec.singles_i[1]) /
                         static_cast<double>(rec.gates);
      row.push_back(sci(counts));
      row.push_back(sci(acc));
      y_mc.push_back(counts);
      acc_mc.push_back(acc);
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(opt.out_dir);
  const json manifest =
      make_manifest(opt, "fringe", {"fringe.csv", "fringe_summary.json"});
  write_csv(fs::path(opt.out_dir) / "fringe.csv", manifest, header, rows);

  json summary;
  summary["manifest"] = manifest;
  if (analytic) {
    const auto raw = tbsim::fit_fringe(x, y_analytic, fit_options);
    const auto sub = tbsim::subtract_accidentals(x, y_analytic, acc_analytic, fit_options);
    summary["analytic"] = {{"raw_fit", fit_to_json(raw)},
                           {"subtracted_fit", fit_to_json(sub.fit)}};
    std::printf("fringe (analytic): V_raw = %.4f, V_subtracted = %.4f\n", raw.v, sub.fit.v);
  }
  if (mc) {
    const auto raw = tbsim::fit_fringe(x, y_mc, fit_options);
    const auto sub = tbsim::subtract_accidentals(x, y_mc, acc_mc, fit_options);
    summary["mc"] = {{"raw_fit", fit_to_json(raw)},
                     {"subtracted_fit", fit_to_json(sub.fit)},
                     {"gates_per_point", opt.gates}};
    std::printf("fringe (mc): V_raw = %.4f +- %.4f, V_subtracted = %.4f +- %.4f\n",
                raw.v, raw.sigma_v, sub.fit.v, sub.fit.sigma_v);
  }
  write_json(fs::path(opt.out_dir) / "fringe_summary.json", summary);
  return 0;
}

int run_validate(std::uint64_t gates, std::uint64_t seed) {
  tbsim::AcceptanceOptions options;
  options.mc_gates = gates;
  options.seed = seed;
  const auto results = tbsim::run_acceptance_suite(options);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s  criterion %d (%s): %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin entangled photon-pair source simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions opt;
  double fwhm_ghz = 25.0;
  double pmin_mw = 10.0, pmax_mw = 200.0;
  double mu_min = 1e-4, mu_max = 0.2;
  double tmin_c = 11.6, tmax_c = 12.6;
  int points = 21;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config", opt.config_path, "configuration file")->required();
    }
    sub->add_option("--engine", opt.engine, "analytic | mc | both")
        ->check(CLI::IsMember({"analytic", "mc", "both"}));
    sub->add_option("--gates", opt.gates, "Monte Carlo gates per point");
    sub->add_option("--seed", opt.seed, "Monte Carlo seed");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--threads", opt.threads, "MC worker threads (0 = all)");
  };

  auto* gamma_cmd = app.add_subcommand("gamma", "waveguide design numbers");
  add_common(gamma_cmd, true);
  gamma_cmd->add_option("--fwhm-ghz", fwhm_ghz, "filter FWHM for coherence times");

  auto* sweep_cmd = app.add_subcommand("pair-sweep", "pair number vs pump power");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--pmin-mw", pmin_mw, "minimum peak power [mW]");
  sweep_cmd->add_option("--pmax-mw", pmax_mw, "maximum peak power [mW]");
  sweep_cmd->add_option("--points", points, "grid points");

  auto* car_cmd = app.add_subcommand("car", "CAR vs mean idler photon number");
  add_common(car_cmd, true);
  car_cmd->add_option("--mu-min", mu_min, "minimum mu");
  car_cmd->add_option("--mu-max", mu_max, "maximum mu");
  car_cmd->add_option("--points", points, "grid points");

  auto* fringe_cmd = app.add_subcommand("fringe", "two-photon interference fringe");
  add_common(fringe_cmd, true);
  fringe_cmd->add_option("--tmin-c", tmin_c, "idler temperature scan start [degC]");
  fringe_cmd->add_option("--tmax-c", tmax_c, "idler temperature scan end [degC]");
  fringe_cmd->add_option("--points", points, "grid points");

  std::uint64_t validate_gates = 10'000'000;
  std::uint64_t validate_seed = 20260824;
  auto* validate_cmd = app.add_subcommand("validate", "run the release validation suite");
  validate_cmd->add_option("--gates", validate_gates, "Monte Carlo gates for the MC checks");
  validate_cmd->add_option("--seed", validate_seed, "Monte Carlo seed");
  validate_cmd->add_option("--threads", opt.threads, "MC worker threads (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_threads(opt);
    if (gamma_cmd->parsed()) return run_gamma(opt, fwhm_ghz);
    if (sweep_cmd->parsed()) return run_pair_sweep(opt, pmin_mw, pmax_mw, points);
    if (car_cmd->parsed()) return run_car(opt, mu_min, mu_max, points);
    if (fringe_cmd->parsed()) return run_fringe(opt, tmin_c, tmax_c, points);
    if (validate_cmd->parsed()) return run_validate(validate_gates, validate_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
