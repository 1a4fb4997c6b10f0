#include "sectrack/config.hpp"
#include "sectrack/harness.hpp"
#include "sectrack/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> detector;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file; missing keys take defaults");
  cmd->add_option("--seed", args.seed, "root seed (overrides the config)");
  cmd->add_option("--detector", args.detector, "classifier: delta or mahalanobis")
      ->check(CLI::IsMember({"delta", "mahalanobis"}));
  cmd->add_option("--out", args.out_dir, "output directory (created if missing)");
  cmd->add_option("--set", args.overrides,
                  "config override, e.g. --set scenario.n_anchors=8 (repeatable)");
}

sectrack::CliConfig effective_config(const CommonArgs& args) {
  json raw = json::object();
  if (!args.config_path.empty()) raw = sectrack::load_config_json(args.config_path);
  for (const auto& kv : args.overrides) sectrack::apply_override(raw, kv);
  if (args.seed) raw["seed"] = *args.seed;
  if (args.detector) raw["detector"]["mode"] = *args.detector;
  if (args.out_dir) raw["output"]["dir"] = *args.out_dir;
  sectrack::CliConfig cfg = sectrack::parse_config(raw);
  sectrack::validate(cfg);
  return cfg;
}

fs::path ensure_out_dir(const sectrack::CliConfig& cfg) {
  fs::path dir(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + (ec ? ec.message() : "not a directory"));
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_simulate(const CommonArgs& args) {
  const auto cfg = effective_config(args);
  const auto dir = ensure_out_dir(cfg);
  const auto outcome = sectrack::run_trial(cfg.trial(), cfg.seed);
  write_text(dir / "run_report.json", sectrack::run_report_json(outcome, cfg).dump(2) + "\n");

  std::cout << "simulate: seed=" << cfg.seed << " passes=" << outcome.report.passes.size()
            << " verdicts=" << outcome.report.verdicts.size()
            << " mse_m2=" << outcome.report.mse_m2 << "\n"
            << "report: " << (dir / "run_report.json").string() << "\n";
  if (outcome.report.unobservable) {
    std::cerr << "error: honest anchor geometry is unobservable "
                 "(fewer than min_anchors non-collinear honest anchors)\n";
    return 2;
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args, std::optional<int> trials, std::optional<std::string> axis) {
  auto cfg = effective_config(args);
  if (trials) cfg.sweep.trials = *trials;
  if (axis) cfg.sweep.axis = sectrack::sweep_axis_from_string(*axis);
  if (cfg.sweep.values.empty())
    throw sectrack::ConfigError("config key 'sweep.values': must be a nonempty list");
  sectrack::validate(cfg);
  const auto dir = ensure_out_dir(cfg);

  sectrack::SweepSpec spec;
  spec.axis = cfg.sweep.axis;
  spec.values = cfg.sweep.values;
  spec.trials = cfg.sweep.trials;
  spec.base = cfg.trial();
  spec.root_seed = cfg.seed;
  spec.threads = cfg.sweep.threads;

  const auto rows = sectrack::run_sweep(spec);
  write_text(dir / "sweep.csv", sectrack::metric_csv(rows));
  write_text(dir / "sweep_manifest.json", sectrack::sweep_manifest_json(cfg, spec).dump(2) + "\n");

  std::cout << "sweep: axis=" << sectrack::to_string(spec.axis) << " points=" << rows.size()
            << " trials=" << spec.trials << "\n"
            << "csv: " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_calibrate(const CommonArgs& args, std::optional<int> runs, std::optional<double> pct) {
  auto cfg = effective_config(args);
  if (runs) cfg.calibration.runs = *runs;
  if (pct) cfg.calibration.percentile = *pct;
  sectrack::validate(cfg);
  if (cfg.scenario.n_malicious != 0)
    throw sectrack::ConfigError(
        "config key 'scenario.n_malicious': calibration must run attack-free; "
        "pass --set scenario.n_malicious=0");
  const auto dir = ensure_out_dir(cfg);

  sectrack::CalibrationSpec spec;
  spec.base = cfg.trial();
  spec.runs = cfg.calibration.runs;
  spec.percentile = cfg.calibration.percentile;
  spec.delta_floor_percentile = cfg.calibration.delta_floor_percentile;
  spec.maha_floor_percentile = cfg.calibration.maha_floor_percentile;
  spec.seed = cfg.seed;

  const auto result = sectrack::calibrate(spec);
  write_text(dir / "calibration.json", sectrack::calibration_json(cfg, result).dump(2) + "\n");

  std::cout << "calibrate: runs=" << result.runs << " percentile=" << result.percentile
            << " gamma=" << result.gamma << " delta_floor_m=" << result.delta_floor_m
            << " maha_margin=" << result.maha_margin << " maha_floor=" << result.maha_floor
            << "\n"
            << "fragment: " << (dir / "calibration.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSS-based target tracking with malicious-anchor detection"};
  app.require_subcommand(1);

  CommonArgs sim_args, sweep_args, cal_args;
  std::optional<int> sweep_trials, cal_runs;
  std::optional<std::string> sweep_axis;
  std::optional<double> cal_percentile;

  auto* sim = app.add_subcommand("simulate", "run one scenario and write a run report");
  add_common(sim, sim_args);

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo parameter sweep, CSV + manifest output");
  add_common(sweep, sweep_args);
  sweep->add_option("--trials", sweep_trials, "trials per sweep point");
  sweep->add_option("--axis", sweep_axis, "sweep axis")
      ->check(CLI::IsMember({"n_anchors", "n_malicious", "sigma_db", "sigma_attack"}));

  auto* cal = app.add_subcommand("calibrate", "estimate gamma and maha_margin on attack-free runs");
  add_common(cal, cal_args);
  cal->add_option("--runs", cal_runs, "number of calibration runs");
  cal->add_option("--percentile", cal_percentile, "pooled-ratio percentile to read off");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_trials, sweep_axis);
    if (cal->parsed()) return cmd_calibrate(cal_args, cal_runs, cal_percentile);
  } catch (const sectrack::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
