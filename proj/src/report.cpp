#include "sectrack/report.hpp"

#include <cmath>
#include <cstdio>

namespace sectrack {

namespace {

using nlohmann::ordered_json;

ordered_json point_json(const Point2& p) { return ordered_json::array({p.x(), p.y()}); }

ordered_json state_json(const TargetState& s) {
  return ordered_json::array({s.x, s.vx, s.y, s.vy});
}

ordered_json verdict_json(const Verdict& v) {
  return ordered_json{{"anchor_id", v.anchor_id},
                      {"flagged_at_step", v.flagged_at_step},
                      {"mode", to_string(v.mode)},
                      {"statistic", v.statistic}};
}

}  // namespace

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json run_report_json(const RunOutcome& outcome, const CliConfig& effective) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["seed"] = outcome.seed;
  j["config"] = to_json(effective);

  ordered_json anchors = ordered_json::array();
  for (const auto& a : outcome.truth.anchors) {
    anchors.push_back({{"id", a.id},
                       {"true_pos", point_json(a.true_pos)},
                       {"reported_pos", point_json(a.reported_pos)},
                       {"honest", a.honest}});
  }
  ordered_json target = ordered_json::array();
  for (const auto& p : outcome.truth.target) target.push_back(point_json(p));
  j["truth"] = {{"anchors", anchors}, {"target", target}};
  if (!effective.scenario.attack.persistent) {
    ordered_json by_step = ordered_json::array();
    for (const auto& step : outcome.truth.reported) {
      ordered_json row = ordered_json::array();
      for (const auto& p : step) row.push_back(point_json(p));
      by_step.push_back(row);
    }
    j["truth"]["reported_by_step"] = by_step;
  }

  ordered_json dropped = ordered_json::array();
  for (const auto& d : outcome.measurements.dropped)
    dropped.push_back({{"step", d.step}, {"anchor_id", d.anchor_id}});
  j["dropped_samples"] = dropped;

  const RunReport& r = outcome.report;
  j["unobservable"] = r.unobservable;
  ordered_json passes = ordered_json::array();
  for (const auto& pass : r.passes) {
    ordered_json steps = ordered_json::array();
    for (const auto& sd : pass.steps) {
      steps.push_back({{"step", sd.step},
                       {"live_ids", sd.live_ids},
                       {"estimate", state_json(sd.estimate)},
                       {"sq_error_m2", sd.sq_error_m2},
                       {"delta", sd.delta},
                       {"delta_avg", sd.delta_avg},
                       {"delta_max", sd.delta_max},
                       {"delta_min", sd.delta_min},
                       {"maha", sd.maha},  // NaN serializes as null
                       {"gated_ids", sd.gated_ids}});
    }
    ordered_json p{{"pass", pass.pass_index}, {"live_ids", pass.live_ids}, {"steps", steps}};
    p["flagged"] = pass.flagged ? verdict_json(*pass.flagged) : ordered_json(nullptr);
    passes.push_back(p);
  }
  j["passes"] = passes;

  ordered_json verdicts = ordered_json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(verdict_json(v));
  j["verdicts"] = verdicts;
  j["final_live_ids"] = r.final_live_ids;
  j["mse_m2"] = r.mse_m2;
  j["detection"] = {{"true_detections", r.true_detections},
                    {"false_detections", r.false_detections},
                    {"n_malicious", r.n_malicious},
                    {"n_honest", r.n_honest}};
  return j;
}

std::string metric_csv(std::span<const MetricRow> rows) {
  std::string out = "axis_value,true_detection_rate,false_detection_rate,mse_m2,trials,mean_runtime_s\n";
  for (const auto& row : rows) {
    out += format_full(row.axis_value);
    out += ',';
    if (row.true_detection_rate) out += format_full(*row.true_detection_rate);
    out += ',';
    out += format_full(row.false_detection_rate);
    out += ',';
    out += format_full(row.mse_m2);
    out += ',';
    out += std::to_string(row.trials);
    out += ',';
    out += format_full(row.mean_runtime_s);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json sweep_manifest_json(const CliConfig& effective, const SweepSpec& spec) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = to_json(effective);
  j["axis"] = to_string(spec.axis);
  j["values"] = spec.values;
  j["trials"] = spec.trials;
  j["root_seed"] = spec.root_seed;
  ordered_json seeds = ordered_json::array();
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    ordered_json per_point = ordered_json::array();
    for (int t = 0; t < spec.trials; ++t) per_point.push_back(trial_seed(spec.root_seed, vi, t));
    seeds.push_back({{"axis_value", spec.values[vi]}, {"trial_seeds", per_point}});
  }
  j["seeds"] = seeds;
  return j;
}

nlohmann::ordered_json calibration_json(const CliConfig& effective, const CalibrationResult& result) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["detector"] = {{"gamma", result.gamma},
                   {"delta_floor_m", result.delta_floor_m},
                   {"maha_margin", result.maha_margin},
                   {"maha_floor", result.maha_floor}};
  j["calibration"] = {{"percentile", result.percentile},
                      {"delta_floor_percentile", result.delta_floor_percentile},
                      {"maha_floor_percentile", result.maha_floor_percentile},
                      {"runs", result.runs},
                      {"seed", effective.seed}};
  return j;
}

}  // namespace sectrack
