#include "sectrack/harness.hpp"

#include "sectrack/stats.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sectrack {

std::uint64_t trial_seed(std::uint64_t root, std::size_t value_index, int trial) {
  return derive_seed(derive_seed(root, 0x100 + static_cast<std::uint64_t>(value_index)),
                     static_cast<std::uint64_t>(trial));
}

RunOutcome run_trial(const TrialConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.seed = seed;
  ScenarioConfig scenario = cfg.scenario;
  scenario.seed = seed;
  RngStreams rng(seed);
  out.truth = deploy(scenario, rng);
  out.measurements = synthesize_measurements(out.truth, scenario.radio, scenario.attack, rng);
  out.report = secure_track(out.truth, out.measurements, scenario.radio, cfg.detector, cfg.tracker);
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

TrialConfig apply_axis(TrialConfig base, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::n_anchors:
      base.scenario.n_anchors = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::n_malicious:
      base.scenario.n_malicious = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::sigma_db:
      base.scenario.radio.sigma_db = value;
      break;
    case SweepAxis::sigma_attack:
      base.scenario.attack.sigma_attack_m = value;
      break;
  }
  return base;
}

namespace {

struct TrialScore {
  int true_det = 0;
  int false_det = 0;
  int n_malicious = 0;
  int n_honest = 0;
  double mse = 0.0;
  double runtime = 0.0;
};

}  // namespace

std::vector<MetricRow> run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw std::invalid_argument("run_sweep: values must be nonempty");
  if (spec.trials < 1) throw std::invalid_argument("run_sweep: trials must be >= 1");

  int n_threads = spec.threads > 0 ? spec.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min(n_threads, spec.trials);

  std::vector<MetricRow> rows;
  rows.reserve(spec.values.size());
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    const TrialConfig cfg = apply_axis(spec.base, spec.axis, spec.values[vi]);
    std::vector<TrialScore> scores(static_cast<std::size_t>(spec.trials));

    auto work = [&](int begin, int end) {
      for (int t = begin; t < end; ++t) {
        const RunOutcome outcome = run_trial(cfg, trial_seed(spec.root_seed, vi, t));
        scores[static_cast<std::size_t>(t)] = {
            outcome.report.true_detections, outcome.report.false_detections,
            outcome.report.n_malicious,     outcome.report.n_honest,
            outcome.report.mse_m2,          outcome.runtime_s};
      }
    };

    if (n_threads == 1) {
      work(0, spec.trials);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (spec.trials + n_threads - 1) / n_threads;
      for (int w = 0; w < n_threads; ++w) {
        const int begin = w * chunk;
        const int end = std::min(begin + chunk, spec.trials);
        if (begin >= end) break;
        pool.emplace_back(work, begin, end);
      }
      for (auto& th : pool) th.join();
    }

    // Aggregate in trial order so parallel and serial runs agree bit for bit.
    long true_det = 0, false_det = 0, n_malicious = 0, n_honest = 0;
    double mse_sum = 0.0, runtime_sum = 0.0;
    for (const auto& s : scores) {
      true_det += s.true_det;
      false_det += s.false_det;
      n_malicious += s.n_malicious;
      n_honest += s.n_honest;
      mse_sum += s.mse;
      runtime_sum += s.runtime;
    }

    MetricRow row;
    row.axis_value = spec.values[vi];
    row.true_detection_rate =
        n_malicious > 0 ? std::optional<double>(static_cast<double>(true_det) /
                                                static_cast<double>(n_malicious))
                        : std::nullopt;
    row.false_detection_rate =
        n_honest > 0 ? static_cast<double>(false_det) / static_cast<double>(n_honest) : 0.0;
    row.mse_m2 = mse_sum / spec.trials;
    row.trials = spec.trials;
    row.mean_runtime_s = runtime_sum / spec.trials;
    rows.push_back(row);
  }
  return rows;
}

CalibrationResult calibrate(const CalibrationSpec& spec) {
  if (spec.base.scenario.n_malicious != 0)
    throw std::invalid_argument("calibrate: base config must be attack-free (n_malicious = 0)");
  if (spec.runs < 1) throw std::invalid_argument("calibrate: runs must be >= 1");
  if (spec.percentile <= 0.0 || spec.percentile > 100.0)
    throw std::invalid_argument("calibrate: percentile must be in (0, 100]");
  if (spec.delta_floor_percentile <= 0.0 || spec.delta_floor_percentile > 100.0 ||
      spec.maha_floor_percentile <= 0.0 || spec.maha_floor_percentile > 100.0)
    throw std::invalid_argument("calibrate: floor percentiles must be in (0, 100]");

  // Collect-only pass: thresholds pushed out of reach so no anchor is removed.
  TrialConfig cfg = spec.base;
  cfg.detector.gamma = std::numeric_limits<double>::infinity();
  cfg.detector.maha_margin = std::numeric_limits<double>::infinity();

  std::vector<double> delta_ratios;
  std::vector<double> maha_ratios;
  // The floors guard run-level false rejection, so they calibrate on the
  // per-run per-anchor maxima rather than the per-step pool.
  std::vector<double> delta_run_max;
  std::vector<double> maha_run_max;
  for (int r = 0; r < spec.runs; ++r) {
    const RunOutcome outcome = run_trial(cfg, derive_seed(spec.seed, 0x200 + static_cast<std::uint64_t>(r)));
    std::map<int, double> dmax;
    std::map<int, double> mmax;
    std::map<int, std::vector<double>> recent;
    const int confirm = std::max(spec.base.detector.maha_confirm_steps, 1);
    for (const auto& sd : outcome.report.passes.front().steps) {
      if (sd.step >= cfg.detector.warmup && sd.delta.size() >= 2) {
        const double spread = sd.delta_max - sd.delta_min;
        if (spread > cfg.detector.min_spread_m) {
          for (double d : sd.delta) delta_ratios.push_back((d - sd.delta_avg) / spread);
        }
        for (std::size_t i = 0; i < sd.live_ids.size(); ++i) {
          auto [it, inserted] = dmax.try_emplace(sd.live_ids[i], sd.delta[i]);
          if (!inserted) it->second = std::max(it->second, sd.delta[i]);
        }
      }
      if (sd.step >= cfg.detector.warmup + cfg.detector.window) {
        double sum = 0.0;
        int defined = 0;
        for (double s : sd.maha) {
          if (!std::isnan(s)) {
            sum += s;
            ++defined;
          }
        }
        if (defined >= 2 && sum > 0.0) {
          const double m = sum / defined;
          for (std::size_t i = 0; i < sd.live_ids.size(); ++i) {
            const double s = sd.maha[i];
            if (std::isnan(s)) continue;
            maha_ratios.push_back(s / m);
            // Level sustained over the confirmation streak: min of the last
            // `confirm` statistics for this anchor.
            auto& hist = recent[sd.live_ids[i]];
            hist.push_back(s);
            if (static_cast<int>(hist.size()) > confirm) hist.erase(hist.begin());
            if (static_cast<int>(hist.size()) == confirm) {
              const double sustained = *std::min_element(hist.begin(), hist.end());
              auto [it, inserted] = mmax.try_emplace(sd.live_ids[i], sustained);
              if (!inserted) it->second = std::max(it->second, sustained);
            }
          }
        }
      }
    }
    for (const auto& [id, v] : dmax) delta_run_max.push_back(v);
    for (const auto& [id, v] : mmax) maha_run_max.push_back(v);
  }

  CalibrationResult result;
  result.percentile = spec.percentile;
  result.delta_floor_percentile = spec.delta_floor_percentile;
  result.maha_floor_percentile = spec.maha_floor_percentile;
  result.runs = spec.runs;
  result.gamma = delta_ratios.empty() ? 0.0
                                      : std::max(0.0, percentile(delta_ratios, spec.percentile));
  result.delta_floor_m =
      delta_run_max.empty()
          ? 0.0
          : std::max(0.0, percentile(delta_run_max, spec.delta_floor_percentile));
  result.maha_margin =
      maha_ratios.empty() ? 1.0 : std::max(1.0, percentile(maha_ratios, spec.percentile));
  result.maha_floor = maha_run_max.empty()
                          ? 0.0
                          : std::max(0.0, percentile(maha_run_max, spec.maha_floor_percentile));
  return result;
}

}  // namespace sectrack
