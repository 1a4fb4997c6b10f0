#pragma once

#include "sectrack/propagation.hpp"
#include "sectrack/random.hpp"
#include "sectrack/types.hpp"

#include <cstdint>
#include <vector>

namespace sectrack {

enum class AttackKind {
  location_perturbation,  // malicious anchors lie about where they are
  rss_bias,               // malicious anchors bias their reported power
};

struct AttackSpec {
  AttackKind kind = AttackKind::location_perturbation;
  double sigma_attack_m = 20.0;  // per-axis std dev of the location lie
  double bias_db = 0.0;          // rss_bias mode
  bool persistent = true;        // one lie per run vs a fresh lie each step
};

struct ScenarioConfig {
  double field_w_m = 100.0;
  double field_h_m = 100.0;
  int n_anchors = 6;
  int n_malicious = 1;
  int n_steps = 100;
  Point2 start_m{10.0, 10.0};
  Point2 velocity_m_per_step{0.8, 0.8};
  RadioParams radio;
  AttackSpec attack;
  std::uint64_t seed = 1;
};

struct GroundTruth {
  std::vector<AnchorNode> anchors;
  std::vector<Point2> target;                 // true position per step
  std::vector<std::vector<Point2>> reported;  // [step][anchor] position the tracker sees

  const Point2& reported_pos(int step, int anchor_id) const {
    return reported[static_cast<std::size_t>(step)][static_cast<std::size_t>(anchor_id)];
  }
};

// Uniform anchor deployment, malicious subset selection, target path, and the
// reported (possibly spoofed) anchor positions. Deterministic given the
// streams' state.
GroundTruth deploy(const ScenarioConfig& cfg, RngStreams& rng);

// Honest physics: every anchor measures RSS from its TRUE position with fresh
// shadowing. The location attack lives purely in the reported positions;
// rss_bias mode instead biases the malicious anchors' received power.
MeasurementStream synthesize_measurements(const GroundTruth& truth, const RadioParams& radio,
                                          const AttackSpec& attack, RngStreams& rng);

}  // namespace sectrack
