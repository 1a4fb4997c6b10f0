// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include "sectrack/config.hpp"
#include "sectrack/detection.hpp"
#include "sectrack/harness.hpp"
#include "sectrack/propagation.hpp"
#include "sectrack/report.hpp"
#include "sectrack/stats.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

using namespace sectrack;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d. %s — %s\n", pass ? "PASS" : "FAIL", index, name.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SweepSpec baseline_sweep(SweepAxis axis, std::vector<double> values, int trials,
                         DetectorMode mode) {
  SweepSpec spec;
  spec.axis = axis;
  spec.values = std::move(values);
  spec.trials = trials;
  spec.base = TrialConfig{};
  spec.base.detector.mode = mode;
  spec.root_seed = 20240901;
  spec.threads = 0;
  return spec;
}

double rate(const MetricRow& row) { return row.true_detection_rate.value_or(0.0); }

// --- criteria -------------------------------------------------------------

double criterion_1_delta_rate() {
  const auto rows = run_sweep(baseline_sweep(SweepAxis::n_malicious, {1.0}, 500, DetectorMode::delta));
  const double r = rate(rows[0]);
  report(1, "delta detection rate at the baseline", r >= 0.70 && r <= 0.86,
         "rate " + fmt(r) + " in [0.70, 0.86], 500 trials, gamma " +
             fmt(DetectorConfig{}.gamma));
  return r;
}

void criterion_2_maha_rate(double delta_rate) {
  const auto rows =
      run_sweep(baseline_sweep(SweepAxis::n_malicious, {1.0}, 500, DetectorMode::mahalanobis));
  const double r = rate(rows[0]);
  report(2, "mahalanobis detection rate at the baseline", r >= 0.80 && r > delta_rate,
         "rate " + fmt(r) + " >= 0.80 and > delta rate " + fmt(delta_rate) + " on the same seeds");
}

void criterion_3_anchor_trend() {
  auto spec = baseline_sweep(SweepAxis::n_anchors, {5, 6, 7, 8, 9, 10, 11}, 300, DetectorMode::delta);
  const auto rows = run_sweep(spec);
  std::vector<double> det, mse;
  for (const auto& row : rows) {
    det.push_back(rate(row));
    mse.push_back(row.mse_m2);
  }
  const double s_det = spearman(spec.values, det);
  const double s_mse = spearman(spec.values, mse);
  report(3, "detection up / MSE down as honest anchors grow 4 -> 10",
         s_det >= 0.0 && s_mse <= 0.0,
         "spearman(det) " + fmt(s_det) + " >= 0, spearman(mse) " + fmt(s_mse) + " <= 0");
}

void criterion_4_malicious_trend() {
  const auto rows =
      run_sweep(baseline_sweep(SweepAxis::n_malicious, {1, 2, 3}, 300, DetectorMode::delta));
  const double det1 = rate(rows[0]), det3 = rate(rows[2]);
  bool mse_ok = true;
  for (const auto& row : rows) mse_ok = mse_ok && row.mse_m2 <= 2.0 * rows[0].mse_m2;
  report(4, "detection decreases with malicious count, MSE within 2x",
         det3 < det1 && mse_ok,
         "det(1) " + fmt(det1) + " > det(3) " + fmt(det3) + "; mse " + fmt(rows[0].mse_m2) + " / " +
             fmt(rows[1].mse_m2) + " / " + fmt(rows[2].mse_m2));
}

void criterion_5_attack_std_trend() {
  auto spec = baseline_sweep(SweepAxis::sigma_attack, {5, 10, 20, 40}, 300, DetectorMode::delta);
  const auto rows = run_sweep(spec);
  double mse_lo = rows[0].mse_m2, mse_hi = rows[0].mse_m2;
  for (const auto& row : rows) {
    mse_lo = std::min(mse_lo, row.mse_m2);
    mse_hi = std::max(mse_hi, row.mse_m2);
  }
  const bool flat = mse_hi <= 1.5 * mse_lo;
  const bool ordered = rate(rows[0]) < rate(rows[3]);
  report(5, "MSE flat over attack STD sweep, detection lower at STD 5 than 40",
         flat && ordered,
         "mse spread " + fmt(mse_lo) + ".." + fmt(mse_hi) + " (<50%), det(5) " + fmt(rate(rows[0])) +
             " < det(40) " + fmt(rate(rows[3])));
}

void criterion_6_noise_power() {
  auto spec = baseline_sweep(SweepAxis::sigma_db, {0.5, 2.0}, 300, DetectorMode::mahalanobis);
  const auto rows = run_sweep(spec);
  const bool mse_up = rows[1].mse_m2 > rows[0].mse_m2;
  const double drop = rate(rows[0]) - rate(rows[1]);
  report(6, "higher noise raises MSE, mahalanobis rate drops < 10 points",
         mse_up && drop < 0.10,
         "mse " + fmt(rows[0].mse_m2) + " -> " + fmt(rows[1].mse_m2) + ", det " +
             fmt(rate(rows[0])) + " -> " + fmt(rate(rows[1])) + " (drop " + fmt(drop) + ")");
}

void criterion_7_properties() {
  bool ok = true;
  std::string detail;

  // 7a: finite-difference Jacobian agreement <= 1e-6 relative.
  {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      TargetState state{uniform_draw(gen, -20, 120), uniform_draw(gen, -2, 2),
                        uniform_draw(gen, -20, 120), uniform_draw(gen, -2, 2)};
      std::vector<Point2> anchors;
      for (int i = 0; i < 6; ++i)
        anchors.push_back({uniform_draw(gen, 0, 100), uniform_draw(gen, 0, 100)});
      const auto h = measurement_jacobian_h(state, anchors);
      const double eps = 1e-4;
      for (int j : {0, 2}) {
        Eigen::Vector4d plus = state.vec(), minus = state.vec();
        plus[j] += eps;
        minus[j] -= eps;
        const auto hp = predicted_sq_distances(TargetState::from_vec(plus), anchors);
        const auto hm = predicted_sq_distances(TargetState::from_vec(minus), anchors);
        for (int i = 0; i < 6; ++i) {
          const double fd = (hp[i] - hm[i]) / (2.0 * eps);
          worst = std::max(worst, std::abs(h(i, j) - fd) / std::max(std::abs(fd), 1.0));
        }
      }
    }
    ok = ok && worst <= 1e-6;
    detail += "jacobian err " + fmt(worst) + "; ";
  }

  // 7b: posterior covariance PSD across 10,000 random updates.
  {
    std::mt19937_64 gen(515);
    NoiseModel noise;
    noise.process = cv_process_noise(0.01);
    noise.r_db_var = 0.25;
    double min_eig = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      EkfBelief belief;
      belief.mean = {uniform_draw(gen, 0, 100), uniform_draw(gen, -2, 2),
                     uniform_draw(gen, 0, 100), uniform_draw(gen, -2, 2)};
      belief.cov = Eigen::Vector4d{uniform_draw(gen, 0.1, 200), uniform_draw(gen, 0.1, 20),
                                   uniform_draw(gen, 0.1, 200), uniform_draw(gen, 0.1, 20)}
                       .asDiagonal();
      const int n = uniform_int_draw(gen, 3, 8);
      std::vector<Point2> anchors;
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) {
        anchors.push_back({uniform_draw(gen, 0, 100), uniform_draw(gen, 0, 100)});
        z[i] = (Point2{uniform_draw(gen, 0, 100), uniform_draw(gen, 0, 100)} - anchors.back())
                   .squaredNorm() *
               std::pow(10.0, -normal_draw(gen, 0.5) / 10.0);
      }
      const auto upd = measurement_update(time_update(belief, noise), z, anchors, noise, 10.0);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(upd.posterior.cov);
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    }
    ok = ok && min_eig >= -1e-8;
    detail += "min eig " + fmt(min_eig) + "; ";
  }

  // 7c: shadowing factorization identity to 1e-9 relative.
  {
    RadioParams radio;
    std::mt19937_64 gen(81);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const double d = uniform_draw(gen, 0.05, 180.0);
      const double n = normal_draw(gen, 2.0);
      const auto s = emit_rss(radio, {d, 0.0}, {0.0, 0.0}, n);
      const double expected = d * d * std::pow(10.0, -n / radio.alpha);
      worst = std::max(worst, std::abs(rss_to_sq_distance(radio, s) - expected) / expected);
    }
    ok = ok && worst <= 1e-9;
    detail += "factorization err " + fmt(worst) + "; ";
  }

  // 7d: mahalanobis flag sets invariant under uniform innovation scaling.
  {
    std::mt19937_64 gen(29);
    bool invariant = true;
    for (int trial = 0; trial < 100 && invariant; ++trial) {
      const int n = 6;
      std::vector<std::vector<double>> history(n);
      std::vector<double> current(n);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 10; ++k) history[i].push_back(normal_draw(gen, 1.0 + i));
        current[i] = normal_draw(gen, 1.0 + 2 * i);
      }
      std::vector<int> ids(n);
      for (int i = 0; i < n; ++i) ids[i] = i;
      DetectorConfig cfg;
      cfg.maha_margin = 2.0;
      auto flags_for = [&](double c) {
        InnovationWindow w(n, 10);
        for (int i = 0; i < n; ++i)
          for (double v : history[i]) w.push(i, c * v);
        Eigen::VectorXd innovation(n);
        for (int i = 0; i < n; ++i) innovation[i] = c * current[i];
        const auto stat = innovation_norm(w, innovation, ids);
        return maha_flag({stat.data(), static_cast<std::size_t>(n)}, ids, cfg);
      };
      const auto base = flags_for(1.0);
      for (double c : {1e-6, 0.37, 41.0, 1e6})
        invariant = invariant && flags_for(c) == base;
    }
    ok = ok && invariant;
    detail += std::string("maha scale invariance ") + (invariant ? "holds" : "BROKEN") + "; ";
  }

  // 7e: detect-remove-rerun terminates within N_s - 2 passes.
  {
    bool bounded = true;
    TrialConfig cfg;
    cfg.detector.gamma = 0.0;  // flag-hungry
    cfg.detector.min_spread_m = 0.0;
    for (int n_anchors : {5, 6, 8, 10}) {
      cfg.scenario.n_anchors = n_anchors;
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto outcome = run_trial(cfg, seed);
        bounded = bounded && static_cast<int>(outcome.report.passes.size()) <= n_anchors - 2;
      }
    }
    ok = ok && bounded;
    detail += std::string("termination bound ") + (bounded ? "holds" : "BROKEN") + "; ";
  }

  // 7f: attack-free false-detection rate <= 10% at the shipped gamma.
  {
    auto spec = baseline_sweep(SweepAxis::n_malicious, {0.0}, 500, DetectorMode::delta);
    const auto rows = run_sweep(spec);
    ok = ok && rows[0].false_detection_rate <= 0.10;
    detail += "attack-free false rate " + fmt(rows[0].false_detection_rate);
  }

  report(7, "property suite", ok, detail);
}

void criterion_8_determinism() {
  CliConfig cfg;
  cfg.seed = 321;

  const auto a = run_trial(cfg.trial(), cfg.seed);
  const auto b = run_trial(cfg.trial(), cfg.seed);
  const bool json_identical =
      run_report_json(a, cfg).dump(2) == run_report_json(b, cfg).dump(2);

  SweepSpec serial = baseline_sweep(SweepAxis::sigma_attack, {10, 20}, 40, DetectorMode::delta);
  serial.threads = 1;
  SweepSpec parallel = serial;
  parallel.threads = 4;
  // The runtime column is wall-clock and excluded from the comparison; every
  // statistical column must match byte for byte.
  auto strip_runtime = [](const std::string& csv) {
    std::string out;
    std::size_t start = 0;
    while (start < csv.size()) {
      auto end = csv.find('\n', start);
      if (end == std::string::npos) end = csv.size();
      const std::string line = csv.substr(start, end - start);
      out += line.substr(0, line.rfind(','));
      out += '\n';
      start = end + 1;
    }
    return out;
  };
  const bool csv_identical =
      strip_runtime(metric_csv(run_sweep(serial))) == strip_runtime(metric_csv(run_sweep(parallel)));

  report(8, "determinism", json_identical && csv_identical,
         std::string("report JSON byte-identical: ") + (json_identical ? "yes" : "NO") +
             ", serial vs parallel CSV identical: " + (csv_identical ? "yes" : "NO"));
}

}  // namespace

int main() {
  std::printf("acceptance: baseline 6 anchors, 1 malicious, sigma_db 0.5, sigma_attack 20, "
              "gamma %.4f, maha_margin %.2f\n",
              DetectorConfig{}.gamma, DetectorConfig{}.maha_margin);
  const double delta_rate = criterion_1_delta_rate();
  criterion_2_maha_rate(delta_rate);
  criterion_3_anchor_trend();
  criterion_4_malicious_trend();
  criterion_5_attack_std_trend();
  criterion_6_noise_power();
  criterion_7_properties();
  criterion_8_determinism();
  if (g_failures > 0) std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  else std::printf("acceptance: all criteria passed\n");
  return g_failures;
}
