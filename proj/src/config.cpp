#include "tbsim/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tbsim/constants.hpp"

namespace tbsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail_key(const std::string& source, const std::string& section,
                           const std::string& key, const std::string& what) {
  throw std::invalid_argument(source + ": [" + section + "] " + key + ": " + what);
}

} // namespace

ConfigDoc ConfigDoc::parse(std::string_view text, std::string source_name) {
  ConfigDoc doc;
  doc.source_ = std::move(source_name);
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument(doc.source_ + ":" + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(doc.source_ + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(doc.source_ + ":" + std::to_string(line_no) +
                                  ": empty key");
    }
    doc.sections_[section][key] = value;
  }
  return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigDoc::text(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) fail_key(source_, section, key, "missing section");
  const auto k = s->second.find(key);
  if (k == s->second.end()) fail_key(source_, section, key, "missing key");
  return k->second;
}

std::string ConfigDoc::text_or(const std::string& section, const std::string& key,
                               std::string fallback) const {
  return has(section, key) ? text(section, key) : std::move(fallback);
}

double ConfigDoc::number(const std::string& section, const std::string& key) const {
  const std::string v = text(section, key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || trim(end) != "") {
    fail_key(source_, section, key, "not a number: '" + v + "'");
  }
  return x;
}

double ConfigDoc::number_or(const std::string& section, const std::string& key,
                            double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

ChannelSpec channel_from(const ConfigDoc& doc, const std::string& section) {
  ChannelSpec ch;
  ch.loss_db = doc.number(section, "loss_db");
  ch.detuning_from_pump = doc.number(section, "detuning_ghz") * 1e9;
  if (doc.has(section, "car_loss_db")) {
    ch.car_loss_db = doc.number(section, "car_loss_db");
  }
  return ch;
}

DetectorSpec detector_from(const ConfigDoc& doc, const std::string& section) {
  DetectorSpec det;
  det.efficiency = doc.number(section, "efficiency");
  det.dark_per_gate = doc.number(section, "dark_per_gate");
  det.gate_width = doc.number(section, "gate_width_ns") * 1e-9;
  det.gate_rate = doc.number(section, "gate_rate_mhz") * 1e6;
  return det;
}

AnalyzerSpec analyzer_from(const ConfigDoc& doc, const std::string& section) {
  AnalyzerSpec an;
  an.theta_at_ref = doc.number_or(section, "theta_at_ref_rad", 0.0);
  an.excess_loss_db = doc.number_or(section, "excess_loss_db", 0.0);
  an.temperature = doc.number(section, "temperature_c");
  an.temp_to_phase = doc.number_or(section, "temp_to_phase_rad_per_c", kTwoPi);
  an.temp_ref = doc.number_or(section, "temp_ref_c", an.temperature);
  return an;
}

} // namespace

ExperimentConfig experiment_config_from_doc(const ConfigDoc& doc, Scenario scenario,
                                            std::uint64_t content_hash) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.config_hash = content_hash;

  cfg.pump.wavelength = doc.number("pump", "wavelength_nm") * 1e-9;
  cfg.pump.peak_power = doc.number("pump", "peak_power_mw") * 1e-3;
  cfg.pump.pulse_width = doc.number("pump", "pulse_width_ps") * 1e-12;
  cfg.pump.pulse_interval = doc.number("pump", "pulse_interval_ns") * 1e-9;
  cfg.pump.rep_rate = doc.number("pump", "rep_rate_mhz") * 1e6;
  cfg.pump.relative_pump_phase = doc.number_or("pump", "relative_pump_phase_rad", 0.0);

  cfg.waveguide.n2 = doc.number("waveguide", "n2_m2_per_w");
  cfg.waveguide.a_eff = doc.number("waveguide", "a_eff_um2") * 1e-12;
  cfg.waveguide.length = doc.number("waveguide", "length_cm") * 1e-2;
  cfg.waveguide.prop_loss_db = doc.number("waveguide", "prop_loss_db");
  cfg.waveguide.coupling_loss_db_per_facet =
      doc.number("waveguide", "coupling_loss_db_per_facet");

  cfg.calibration.gamma = doc.number("calibration", "gamma_per_w_km") * 1e-3;
  cfg.calibration.l_eff = doc.has("calibration", "l_eff_cm")
                              ? doc.number("calibration", "l_eff_cm") * 1e-2
                              : effective_length(cfg.waveguide);
  if (doc.has("calibration", "kappa")) {
    cfg.calibration.kappa = doc.number("calibration", "kappa");
  } else {
    cfg.calibration.kappa = calibrate_kappa(
        cfg.calibration.gamma, cfg.calibration.l_eff,
        doc.number("calibration", "anchor_power_mw") * 1e-3,
        doc.number("calibration", "anchor_mu"));
  }

  const std::string mode = doc.text_or("noise", "mode", "silicon");
  if (mode == "silicon") {
    cfg.noise.mode = NoiseMode::silicon;
  } else if (mode == "broadband_fiber") {
    cfg.noise.mode = NoiseMode::broadband_fiber;
  } else if (mode == "none") {
    cfg.noise.mode = NoiseMode::none;
  } else {
    throw std::invalid_argument(doc.source_name() +
                                ": [noise] mode: unknown value '" + mode + "'");
  }
  cfg.noise.raman_shift = doc.number_or("noise", "raman_shift_thz", 15.6) * 1e12;
  cfg.noise.noise_mean_per_slot = doc.number_or("noise", "noise_mean_per_slot", 0.0);

  cfg.signal_channel = channel_from(doc, "signal_channel");
  cfg.idler_channel = channel_from(doc, "idler_channel");
  cfg.signal_detector = detector_from(doc, "signal_detector");
  cfg.idler_detector = detector_from(doc, "idler_detector");

  if (scenario == Scenario::fringe) {
    cfg.signal_analyzer = analyzer_from(doc, "signal_analyzer");
    cfg.idler_analyzer = analyzer_from(doc, "idler_analyzer");
  }

  cfg.schedule.pulse_rate = doc.number("schedule", "pulse_rate_mhz") * 1e6;
  cfg.schedule.gate_rate = doc.number("schedule", "gate_rate_mhz") * 1e6;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        Scenario scenario) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return experiment_config_from_doc(ConfigDoc::parse(text, path.string()), scenario,
                                    fnv1a64(text));
}

ExperimentConfig paper_preset(Scenario scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.config_hash = fnv1a64("tbsim-paper-preset-v1");

  cfg.pump = {1551.1e-9, 0.12, 90e-12, 1e-9, 100e6, 0.0};

  cfg.waveguide = {9e-18, 0.042e-12, 1.09e-2, 3.1, 4.5};

  cfg.calibration.gamma = 3.2e5 * 1e-3; // fitted value, [1/(W m)]
  cfg.calibration.l_eff = effective_length(cfg.waveguide);
  cfg.calibration.kappa =
      calibrate_kappa(cfg.calibration.gamma, cfg.calibration.l_eff, 0.12, 0.1);

  cfg.noise = {NoiseMode::silicon, 15.6e12, 0.0};

  cfg.signal_channel = {13.5, +400e9, std::nullopt};
  cfg.idler_channel = {12.9, -400e9, std::nullopt};
  cfg.signal_detector = {0.10, 4e-5, 1.4e-9, 5e6};
  cfg.idler_detector = {0.11, 1.2e-5, 1.4e-9, 5e6};

  if (scenario == Scenario::fringe) {
    cfg.signal_analyzer = AnalyzerSpec{0.0, 0.0, 12.30, kTwoPi, 12.30};
    cfg.idler_analyzer = AnalyzerSpec{0.0, 0.0, 12.10, kTwoPi, 12.10};
  }

  cfg.schedule = {100e6, 5e6};

  cfg.validate();
  return cfg;
}

} // namespace tbsim
