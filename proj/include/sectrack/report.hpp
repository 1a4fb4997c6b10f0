#pragma once

#include "sectrack/config.hpp"
#include "sectrack/harness.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace sectrack {

inline constexpr int kReportSchemaVersion = 1;

// Full run report: effective config echo, ground truth, per-pass per-step
// diagnostics, verdicts, and scores. Deterministic field order and number
// formatting, so identical runs serialize byte-identically.
nlohmann::ordered_json run_report_json(const RunOutcome& outcome, const CliConfig& effective);

// One MetricRow per line; header row, full float precision, LF endings.
std::string metric_csv(std::span<const MetricRow> rows);

// Config echo plus the per-point trial seeds, for reproducibility.
nlohmann::ordered_json sweep_manifest_json(const CliConfig& effective, const SweepSpec& spec);

nlohmann::ordered_json calibration_json(const CliConfig& effective, const CalibrationResult& result);

// Shortest-roundtrip-exact decimal form used by the CSV writer.
std::string format_full(double v);

}  // namespace sectrack
