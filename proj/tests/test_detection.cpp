#include "sectrack/detection.hpp"
#include "sectrack/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace sectrack;

namespace {

DeltaStats make_stats(std::vector<double> deltas) {
  DeltaStats s;
  s.step = 20;
  s.delta = Eigen::Map<Eigen::VectorXd>(deltas.data(), static_cast<Eigen::Index>(deltas.size()));
  for (int i = 0; i < static_cast<int>(deltas.size()); ++i) s.anchor_ids.push_back(i);
  s.delta_avg = s.delta.mean();
  s.delta_max = s.delta.maxCoeff();
  s.delta_min = s.delta.minCoeff();
  return s;
}

}  // namespace

TEST_CASE("delta stats are plain absolute differences") {
  EkfBelief posterior;
  posterior.mean = {0.0, 0.0, 0.0, 0.0};
  const std::vector<Point2> anchors{{7.0, 0.0}, {0.0, 3.0}};
  const std::vector<double> measured{10.0, 3.0};
  const std::vector<int> ids{0, 1};
  const auto s = delta_stats(posterior, measured, anchors, ids, 0);
  CHECK(s.delta[0] == doctest::Approx(3.0));  // |10 - 7|
  CHECK(s.delta[1] == doctest::Approx(0.0));
}

TEST_CASE("delta stats oracle on {1,2,9}") {
  const auto s = make_stats({1.0, 2.0, 9.0});
  CHECK(s.delta_avg == doctest::Approx(4.0));
  CHECK(s.delta_max == doctest::Approx(9.0));
  CHECK(s.delta_min == doctest::Approx(1.0));

  DetectorConfig cfg;
  cfg.gamma = 0.5;
  const auto flagged = delta_flag(s, cfg);  // threshold 4 + 0.5*8 = 8
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == 2);
}

TEST_CASE("equal deltas never flag") {
  const auto s = make_stats({2.5, 2.5, 2.5, 2.5});
  DetectorConfig cfg;
  cfg.gamma = 0.0;
  CHECK(delta_flag(s, cfg).empty());
}

TEST_CASE("a huge gamma suppresses all delta flags") {
  const auto s = make_stats({1.0, 2.0, 9.0});
  DetectorConfig cfg;
  cfg.gamma = 1e6;
  CHECK(delta_flag(s, cfg).empty());
}

TEST_CASE("innovation window variance oracle") {
  InnovationWindow w(1, 10);
  for (int i = 0; i < 10; ++i) w.push(0, i % 2 == 0 ? 1.0 : -1.0);
  REQUIRE(w.full(0));
  CHECK(w.variance(0) == doctest::Approx(10.0 / 9.0).epsilon(1e-12));

  Eigen::VectorXd innovation(1);
  innovation << 2.0;
  const std::vector<int> ids{0};
  const auto stat = innovation_norm(w, innovation, ids);
  CHECK(stat[0] == doctest::Approx(3.6).epsilon(1e-12));  // 4 / (10/9)
}

TEST_CASE("unit-variance window gives statistic nu^2") {
  InnovationWindow w(1, 10);
  const double a = std::sqrt(0.9);  // sample variance 10 a^2 / 9 = 1
  for (int i = 0; i < 10; ++i) w.push(0, i % 2 == 0 ? a : -a);
  CHECK(w.variance(0) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd innovation(1);
  innovation << 3.0;
  const std::vector<int> ids{0};
  CHECK(innovation_norm(w, innovation, ids)[0] == doctest::Approx(9.0).epsilon(1e-12));
  innovation << 0.0;
  CHECK(innovation_norm(w, innovation, ids)[0] == doctest::Approx(0.0));
}

TEST_CASE("window variance has a degenerate floor") {
  InnovationWindow w(1, 10);
  for (int i = 0; i < 10; ++i) w.push(0, 5.0);  // constant -> zero variance
  CHECK(w.variance(0) == doctest::Approx(1e-12));
}

TEST_CASE("statistics are undefined until the window fills") {
  InnovationWindow w(2, 10);
  for (int i = 0; i < 9; ++i) w.push(0, 1.0);
  CHECK_FALSE(w.full(0));
  Eigen::VectorXd innovation(2);
  innovation << 1.0, 1.0;
  const std::vector<int> ids{0, 1};
  const auto stat = innovation_norm(w, innovation, ids);
  CHECK(std::isnan(stat[0]));
  CHECK(std::isnan(stat[1]));
}

TEST_CASE("maha flag oracle on {1,1,1,1,1,10}") {
  const std::vector<double> stats{1, 1, 1, 1, 1, 10};
  const std::vector<int> ids{0, 1, 2, 3, 4, 5};
  DetectorConfig cfg;
  cfg.maha_margin = 2.0;  // mean 2.5, threshold 5
  const auto flagged = maha_flag(stats, ids, cfg);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == 5);
}

TEST_CASE("equal statistics and single anchors never flag") {
  DetectorConfig cfg;
  cfg.maha_margin = 1.0;
  const std::vector<int> ids{0, 1, 2};
  CHECK(maha_flag(std::vector<double>{4, 4, 4}, ids, cfg).empty());
  const std::vector<int> one{0};
  cfg.maha_margin = 2.0;
  CHECK(maha_flag(std::vector<double>{123.0}, one, cfg).empty());
}

TEST_CASE("mahalanobis flags are invariant under uniform innovation scaling") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 6;
    std::vector<std::vector<double>> history(n);
    std::vector<double> current(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 10; ++k) history[i].push_back(normal_draw(gen, 1.0 + i));
      current[i] = normal_draw(gen, 1.0 + 3 * i);
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
      return std::make_pair(stat, maha_flag({stat.data(), static_cast<std::size_t>(n)}, ids, cfg));
    };

    const auto [base_stat, base_flags] = flags_for(1.0);
    // Scales keep every window variance above the 1e-12 degenerate floor.
    for (double c : {1e-3, 3.7, 1e3}) {
      const auto [stat, flags] = flags_for(c);
      for (int i = 0; i < n; ++i)
        CHECK(stat[i] == doctest::Approx(base_stat[i]).epsilon(1e-9));
      CHECK(flags == base_flags);
    }
  }
}

TEST_CASE("the delta classifier is not invariant under the same innovation scaling") {
  // Fixed predicted squared distances and innovations; the measured distance
  // is sqrt(h + c*nu), the posterior distance sqrt(h). Scaling c moves the
  // delta spread nonlinearly, so the flag set changes with c.
  const std::vector<double> h{100.0, 100.0, 100.0};
  const std::vector<double> nu{1.0, 2.0, 4.2};
  DetectorConfig cfg;
  cfg.gamma = 0.55;
  cfg.min_spread_m = 0.0;

  auto flags_for = [&](double c) {
    std::vector<double> deltas;
    for (std::size_t i = 0; i < h.size(); ++i)
      deltas.push_back(std::abs(std::sqrt(h[i] + c * nu[i]) - std::sqrt(h[i])));
    return delta_flag(make_stats(deltas), cfg);
  };

  CHECK(flags_for(0.001) != flags_for(1e6));
}

TEST_CASE("clean noise-free run produces no verdicts and near-zero MSE") {
  TrialConfig cfg;
  cfg.scenario.n_malicious = 0;
  cfg.scenario.radio.sigma_db = 0.0;
  const auto outcome = run_trial(cfg, 21);
  CHECK(outcome.report.verdicts.empty());
  CHECK(outcome.report.passes.size() == 1);
  CHECK(outcome.report.mse_m2 < 0.25);
}

TEST_CASE("noiseless convergence reaches half-meter accuracy by step 50") {
  TrialConfig cfg;
  cfg.scenario.n_malicious = 0;
  cfg.scenario.radio.sigma_db = 0.0;
  cfg.tracker.process_noise_q = 0.001;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto outcome = run_trial(cfg, seed);
    const auto& steps = outcome.report.passes.front().steps;
    CHECK(std::sqrt(steps[50].sq_error_m2) <= 0.5);
  }
}

TEST_CASE("detect-remove-rerun terminates and removed anchors never return") {
  TrialConfig cfg;
  cfg.detector.gamma = 0.0;  // flag-hungry configuration
  cfg.detector.min_spread_m = 0.0;
  for (int n_anchors : {5, 6, 8}) {
    cfg.scenario.n_anchors = n_anchors;
    cfg.scenario.n_malicious = 1;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto outcome = run_trial(cfg, seed);
      CHECK(static_cast<int>(outcome.report.passes.size()) <= n_anchors - 2);

      std::set<int> removed;
      for (const auto& v : outcome.report.verdicts) CHECK(removed.insert(v.anchor_id).second);
      for (const auto& pass : outcome.report.passes) {
        for (const auto& v : outcome.report.verdicts) {
          if (v.flagged_at_step >= 0 && pass.pass_index > 0) {
            // once removed, an anchor must not be in any later pass's live set
          }
        }
      }
      // live set shrinks monotonically across passes
      for (std::size_t p = 1; p < outcome.report.passes.size(); ++p) {
        const auto& prev = outcome.report.passes[p - 1].live_ids;
        const auto& cur = outcome.report.passes[p].live_ids;
        CHECK(cur.size() == prev.size() - 1);
        for (int id : cur) CHECK(std::find(prev.begin(), prev.end(), id) != prev.end());
      }
      CHECK(static_cast<int>(outcome.report.final_live_ids.size()) >= cfg.detector.min_anchors);
    }
  }
}

TEST_CASE("verdicts respect the warm-up window") {
  TrialConfig cfg;
  cfg.detector.gamma = 0.0;
  cfg.detector.min_spread_m = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.detector.mode = DetectorMode::delta;
    for (const auto& v : run_trial(cfg, seed).report.verdicts)
      CHECK(v.flagged_at_step >= cfg.detector.warmup);
    cfg.detector.mode = DetectorMode::mahalanobis;
    cfg.detector.maha_margin = 1.0;
    for (const auto& v : run_trial(cfg, seed).report.verdicts)
      CHECK(v.flagged_at_step >= cfg.detector.warmup + cfg.detector.window);
  }
}

TEST_CASE("collinear honest anchors mark the run unobservable") {
  GroundTruth truth;
  for (int i = 0; i < 4; ++i) {
    const double x = 10.0 * (i + 1);
    truth.anchors.push_back({i, {x, 50.0}, {x, 50.0}, true});
  }
  for (int k = 0; k < 30; ++k) truth.target.push_back({5.0 + k, 20.0});
  truth.reported.assign(30, {truth.anchors[0].true_pos, truth.anchors[1].true_pos,
                             truth.anchors[2].true_pos, truth.anchors[3].true_pos});
  RadioParams radio;
  RngStreams rng(2);
  const auto stream = synthesize_measurements(truth, radio, AttackSpec{}, rng);
  const auto report = secure_track(truth, stream, radio, DetectorConfig{}, TrackerParams{});
  CHECK(report.unobservable);
}

TEST_CASE("a fixed (20,0) location lie separates the malicious delta trace") {
  // Hand-built deployment: anchor 0 lies about its position by (20, 0).
  GroundTruth truth;
  const std::vector<Point2> positions{{15.0, 85.0}, {5.0, 5.0},   {95.0, 10.0},
                                      {90.0, 90.0}, {50.0, 95.0}, {10.0, 50.0}};
  for (int i = 0; i < 6; ++i) truth.anchors.push_back({i, positions[i], positions[i], i != 0});
  truth.anchors[0].reported_pos = positions[0] + Point2{20.0, 0.0};
  const int n_steps = 100;
  for (int k = 0; k < n_steps; ++k)
    truth.target.push_back(Point2{10.0, 10.0} + k * Point2{0.8, 0.8});
  truth.reported.assign(n_steps, {});
  for (int k = 0; k < n_steps; ++k)
    for (const auto& a : truth.anchors) truth.reported[k].push_back(a.reported_pos);

  RadioParams radio;
  RngStreams rng(4);
  const auto stream = synthesize_measurements(truth, radio, AttackSpec{}, rng);
  DetectorConfig detector;
  detector.gamma = 1e18;  // collect-only: no removals
  const auto report = secure_track(truth, stream, radio, detector, TrackerParams{});

  double malicious_sum = 0.0, honest_sum = 0.0;
  int malicious_n = 0, honest_n = 0;
  for (const auto& sd : report.passes.front().steps) {
    if (sd.step < detector.warmup) continue;
    for (std::size_t i = 0; i < sd.live_ids.size(); ++i) {
      if (sd.live_ids[i] == 0) {
        malicious_sum += sd.delta[i];
        ++malicious_n;
      } else {
        honest_sum += sd.delta[i];
        ++honest_n;
      }
    }
  }
  CHECK(malicious_sum / malicious_n > 2.0 * honest_sum / honest_n);
}
