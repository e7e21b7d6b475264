#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "tbsim/engine.hpp"

namespace tbsim {

/// Minimal sectioned key-value document ([section] / key = value, # or ;
/// comments). Errors name the offending section and key.
class ConfigDoc {
 public:
  static ConfigDoc parse_file(const std::filesystem::path& path);
  static ConfigDoc parse(std::string_view text, std::string source_name);

  bool has(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key,
                   double fallback) const;
  std::string text(const std::string& section, const std::string& key) const;
  std::string text_or(const std::string& section, const std::string& key,
                      std::string fallback) const;

  const std::string& source_name() const { return source_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string source_;
};

/// FNV-1a 64-bit hash; used as the config content hash in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

/// Builds an ExperimentConfig for the given scenario from a config file.
/// The analyzer sections are consumed only for the fringe scenario.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        Scenario scenario);
ExperimentConfig experiment_config_from_doc(const ConfigDoc& doc,
                                            Scenario scenario,
                                            std::uint64_t content_hash);

/// The shipped device/setup preset (silicon wire waveguide, 25 GHz channels
/// at +-400 GHz, gated InGaAs detectors). kappa is calibrated so that
/// mu = 0.1 at 120 mW coupled peak power.
ExperimentConfig paper_preset(Scenario scenario);

} // namespace tbsim
