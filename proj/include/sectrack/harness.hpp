#pragma once

#include "sectrack/detection.hpp"
#include "sectrack/scenario.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sectrack {

struct TrialConfig {
  ScenarioConfig scenario;
  DetectorConfig detector;
  TrackerParams tracker;
};

struct RunOutcome {
  std::uint64_t seed = 0;
  GroundTruth truth;
  MeasurementStream measurements;
  RunReport report;
  double runtime_s = 0.0;
};

// Deterministic given (cfg, seed); the seed overrides cfg.scenario.seed.
RunOutcome run_trial(const TrialConfig& cfg, std::uint64_t seed);

enum class SweepAxis { n_anchors, n_malicious, sigma_db, sigma_attack };

struct SweepSpec {
  SweepAxis axis = SweepAxis::n_anchors;
  std::vector<double> values;
  int trials = 500;
  TrialConfig base;
  std::uint64_t root_seed = 1;
  int threads = 0;  // 0 -> hardware concurrency
};

struct MetricRow {
  double axis_value = 0.0;
  // Undefined (reported as null) when the sweep point has no malicious anchors.
  std::optional<double> true_detection_rate;
  double false_detection_rate = 0.0;
  double mse_m2 = 0.0;  // mean over trials of the per-run MSE
  int trials = 0;
  double mean_runtime_s = 0.0;
};

// Per-trial seed; a pure function of (root, point index, trial index) so that
// parallel and serial execution see identical streams.
std::uint64_t trial_seed(std::uint64_t root, std::size_t value_index, int trial);

TrialConfig apply_axis(TrialConfig base, SweepAxis axis, double value);

// Monte-Carlo sweep; trials fan out across threads, aggregation always happens
// in trial order.
std::vector<MetricRow> run_sweep(const SweepSpec& spec);

struct CalibrationSpec {
  TrialConfig base;  // must be attack-free (n_malicious == 0)
  int runs = 200;
  double percentile = 99.5;  // per-step ratio pool, for gamma and maha_margin
  // Flag floors calibrate on per-run per-anchor maxima; the delta and
  // Mahalanobis nulls have different tail shapes, hence separate percentiles.
  double delta_floor_percentile = 97.5;
  double maha_floor_percentile = 87.5;
  std::uint64_t seed = 7;
};

struct CalibrationResult {
  double gamma = 0.0;
  double delta_floor_m = 0.0;
  double maha_margin = 1.0;
  double maha_floor = 0.0;
  double percentile = 0.0;
  double delta_floor_percentile = 0.0;
  double maha_floor_percentile = 0.0;
  int runs = 0;
};

// Replays the detection statistics over attack-free runs and reads gamma,
// maha_margin, and the absolute flag floors off the requested percentile of
// the pooled per-step statistics.
CalibrationResult calibrate(const CalibrationSpec& spec);

}  // namespace sectrack
