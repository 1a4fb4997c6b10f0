#include "sectrack/scenario.hpp"

#include <stdexcept>

namespace sectrack {

GroundTruth deploy(const ScenarioConfig& cfg, RngStreams& rng) {
  if (cfg.n_anchors < 1) throw std::invalid_argument("deploy: need at least one anchor");
  if (cfg.n_malicious < 0 || cfg.n_malicious >= cfg.n_anchors)
    throw std::invalid_argument("deploy: n_malicious must be in [0, n_anchors)");
  if (cfg.n_steps < 1) throw std::invalid_argument("deploy: n_steps must be >= 1");
  if (cfg.field_w_m <= 0.0 || cfg.field_h_m <= 0.0)
    throw std::invalid_argument("deploy: field dimensions must be positive");

  GroundTruth truth;
  truth.anchors.resize(static_cast<std::size_t>(cfg.n_anchors));
  for (int i = 0; i < cfg.n_anchors; ++i) {
    auto& a = truth.anchors[static_cast<std::size_t>(i)];
    a.id = i;
    a.true_pos = {uniform_draw(rng.deployment, 0.0, cfg.field_w_m),
                  uniform_draw(rng.deployment, 0.0, cfg.field_h_m)};
    a.reported_pos = a.true_pos;
    a.honest = true;
  }

  // Malicious subset: partial Fisher-Yates over the id range.
  std::vector<int> ids(static_cast<std::size_t>(cfg.n_anchors));
  for (int i = 0; i < cfg.n_anchors; ++i) ids[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < cfg.n_malicious; ++i) {
    const int j = uniform_int_draw(rng.deployment, i, cfg.n_anchors - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    truth.anchors[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])].honest = false;
  }

  truth.target.resize(static_cast<std::size_t>(cfg.n_steps));
  for (int k = 0; k < cfg.n_steps; ++k) {
    truth.target[static_cast<std::size_t>(k)] =
        cfg.start_m + static_cast<double>(k) * cfg.velocity_m_per_step;
  }

  const bool location_attack = cfg.attack.kind == AttackKind::location_perturbation;
  std::vector<Point2> persistent_report(static_cast<std::size_t>(cfg.n_anchors));
  for (const auto& a : truth.anchors) persistent_report[static_cast<std::size_t>(a.id)] = a.true_pos;
  if (location_attack && cfg.attack.persistent) {
    for (auto& a : truth.anchors) {
      if (a.honest) continue;
      persistent_report[static_cast<std::size_t>(a.id)] +=
          Point2{normal_draw(rng.attack, cfg.attack.sigma_attack_m),
                 normal_draw(rng.attack, cfg.attack.sigma_attack_m)};
    }
  }

  truth.reported.assign(static_cast<std::size_t>(cfg.n_steps),
                        std::vector<Point2>(static_cast<std::size_t>(cfg.n_anchors)));
  for (int k = 0; k < cfg.n_steps; ++k) {
    for (const auto& a : truth.anchors) {
      Point2 report = persistent_report[static_cast<std::size_t>(a.id)];
      if (!a.honest && location_attack && !cfg.attack.persistent) {
        report = a.true_pos + Point2{normal_draw(rng.attack, cfg.attack.sigma_attack_m),
                                     normal_draw(rng.attack, cfg.attack.sigma_attack_m)};
      }
      truth.reported[static_cast<std::size_t>(k)][static_cast<std::size_t>(a.id)] = report;
    }
  }
  for (auto& a : truth.anchors) a.reported_pos = truth.reported[0][static_cast<std::size_t>(a.id)];
  return truth;
}

MeasurementStream synthesize_measurements(const GroundTruth& truth, const RadioParams& radio,
                                          const AttackSpec& attack, RngStreams& rng) {
  if (truth.target.empty()) throw std::invalid_argument("synthesize_measurements: empty truth");

  MeasurementStream stream;
  stream.steps.resize(truth.target.size());
  for (std::size_t k = 0; k < truth.target.size(); ++k) {
    auto& set = stream.steps[k];
    set.step = static_cast<int>(k);
    for (const auto& anchor : truth.anchors) {
      // Draw before the degeneracy check so a dropped sample never shifts the
      // shadowing stream of later anchors.
      const double shadow = normal_draw(rng.shadowing, radio.sigma_db);
      if ((truth.target[k] - anchor.true_pos).squaredNorm() <= 0.0) {
        stream.dropped.push_back({static_cast<int>(k), anchor.id});
        continue;
      }
      RssSample sample = emit_rss(radio, truth.target[k], anchor.true_pos, shadow, anchor.id,
                                  static_cast<int>(k));
      if (!anchor.honest && attack.kind == AttackKind::rss_bias) sample.pr_db += attack.bias_db;
      set.items.push_back({anchor.id, rss_to_sq_distance(radio, sample)});
    }
  }
  return stream;
}

}  // namespace sectrack
