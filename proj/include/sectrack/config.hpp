#pragma once

#include "sectrack/harness.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace sectrack {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepConfig {
  SweepAxis axis = SweepAxis::n_anchors;
  std::vector<double> values;
  int trials = 500;
  int threads = 0;
};

struct CalibrationConfig {
  int runs = 200;
  double percentile = 99.5;
  double delta_floor_percentile = 97.5;
  double maha_floor_percentile = 87.5;
};

struct OutputConfig {
  std::string dir = "out";
};

// Everything a command needs, defaulted to the experimental baseline:
// 100x100 m field, 6 anchors, 1 malicious, sigma_db = 0.5, sigma_attack = 20 m.
struct CliConfig {
  std::uint64_t seed = 1;
  ScenarioConfig scenario;
  DetectorConfig detector;
  TrackerParams tracker;
  SweepConfig sweep;
  CalibrationConfig calibration;
  OutputConfig output;

  TrialConfig trial() const { return {scenario, detector, tracker}; }
};

// Reads a config object over the defaults. Unknown keys and type mismatches
// raise ConfigError naming the offending dotted key.
CliConfig parse_config(const nlohmann::json& root);

// Parses a file; syntax errors carry nlohmann's line/column diagnostics.
nlohmann::json load_config_json(const std::string& path);

// Applies one "section.key=value" override onto the raw JSON tree. Values are
// parsed as JSON when possible, kept as strings otherwise.
void apply_override(nlohmann::json& root, const std::string& key_eq_value);

// Invariant checks with key-named diagnostics.
void validate(const CliConfig& cfg);

nlohmann::ordered_json to_json(const CliConfig& cfg);

std::string to_string(DetectorMode mode);
std::string to_string(AttackKind kind);
std::string to_string(SweepAxis axis);
DetectorMode detector_mode_from_string(const std::string& s);
AttackKind attack_kind_from_string(const std::string& s);
SweepAxis sweep_axis_from_string(const std::string& s);

}  // namespace sectrack
