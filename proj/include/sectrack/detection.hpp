#pragma once

#include "sectrack/ekf.hpp"
#include "sectrack/scenario.hpp"
#include "sectrack/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace sectrack {

enum class DetectorMode { delta, mahalanobis };

// Both classifiers pair the paper's relative test with an absolute floor
// calibrated on attack-free runs; the floors are what keep honest anchors
// from being rejected in long noisy runs. Shipped defaults for gamma and the
// floors are the output of `sectrack calibrate` on the attack-free baseline
// (200 runs, 99.5th percentile).
struct DetectorConfig {
  DetectorMode mode = DetectorMode::delta;
  double gamma = 0.7679;       // weight on the (max - min) spread in the delta test
  double delta_floor_m = 9.27; // minimum delta for a flag, meters
  int warmup = 10;             // steps before any flagging
  int window = 10;             // innovation history length W
  double maha_margin = 2.0;    // multiplier on the mean statistic
  double maha_floor = 3.60;    // minimum Mahalanobis statistic for a flag
  // Variance floor for the windowed standardized innovations. They have unit
  // model variance, so estimates far below this are sampling flukes that
  // would otherwise blow the statistic up.
  double maha_variance_floor = 0.1;
  // Consecutive steps an anchor must exceed the Mahalanobis threshold before
  // removal. One-step spikes from filter transients are not persistent; a
  // biased anchor is.
  int maha_confirm_steps = 2;
  int min_anchors = 3;         // never shrink the live set below this
  // Spread floor (meters): the delta test is skipped when max - min is below
  // this, so that sub-millimeter numerical residue on a noise-free run cannot
  // trip the scale-free threshold.
  double min_spread_m = 1e-3;
};

struct DeltaStats {
  int step = 0;
  std::vector<int> anchor_ids;
  Eigen::VectorXd delta;  // |Dist^- - Dist^+| per anchor, meters
  double delta_avg = 0.0;
  double delta_max = 0.0;
  double delta_min = 0.0;
};

// Per-anchor ring buffer of scalar innovations with a windowed variance
// estimate. The variance is only defined once a buffer holds `window` samples.
// variance_floor guards the degenerate all-equal window; trackers feeding
// standardized residuals raise it to a statistical floor (see DetectorConfig).
class InnovationWindow {
 public:
  InnovationWindow(int n_anchors, int window, double variance_floor = 1e-12);

  void push(int anchor_id, double value);
  bool full(int anchor_id) const;
  // Unbiased sample variance about the window mean, floored.
  double variance(int anchor_id) const;
  int window() const { return window_; }

 private:
  int window_;
  double variance_floor_;
  std::vector<std::vector<double>> buf_;
  std::vector<int> head_;
  std::vector<int> count_;
};

struct Verdict {
  int anchor_id = 0;
  int flagged_at_step = 0;
  DetectorMode mode = DetectorMode::delta;
  double statistic = 0.0;  // delta value or Mahalanobis statistic at flag time
};

// Filter-side knobs the measurement model does not pin down. The filter
// starts from a linear least-squares trilateration fix on the first
// measurement set (anchor centroid when the geometry is too thin).
struct TrackerParams {
  double process_noise_q = 0.5;  // white-acceleration intensity, m^2/step^3
  Eigen::Vector4d initial_cov_diag{100.0, 10.0, 100.0, 10.0};
  // Per-measurement innovation gate in sigma units. Samples whose innovation
  // exceeds this many standard deviations of the predicted innovation are not
  // fused that step (they still feed the detectors). The gate always keeps at
  // least the three least-outlying samples. 0 disables the gate.
  double innovation_gate_sigma = 2.5;
  // Cap on any single anchor's information weight, as a multiple of the
  // median weight across the fused set. The assumed noise shrinks like d^4
  // near an anchor, which would otherwise let one (possibly lying) nearby
  // anchor own the estimate. 0 disables the cap.
  double info_dominance_cap = 4.0;
};

struct StepDiag {
  int step = 0;
  std::vector<int> live_ids;  // anchors that contributed a sample this step
  std::vector<double> delta;  // aligned with live_ids
  double delta_avg = 0.0;
  double delta_max = 0.0;
  double delta_min = 0.0;
  std::vector<double> maha;   // aligned with live_ids; NaN until the window fills
  std::vector<int> gated_ids; // samples excluded from the fusion this step
  TargetState estimate;
  double sq_error_m2 = 0.0;
};

struct PassDiag {
  int pass_index = 0;
  std::vector<int> live_ids;  // at pass start
  std::vector<StepDiag> steps;
  std::optional<Verdict> flagged;  // set when the pass aborted with a removal
};

struct RunReport {
  bool unobservable = false;
  std::vector<PassDiag> passes;
  std::vector<Verdict> verdicts;
  std::vector<int> final_live_ids;
  double mse_m2 = 0.0;  // mean squared position error past warm-up, final pass
  // Scoring against ground-truth honesty labels.
  int n_malicious = 0;
  int n_honest = 0;
  int true_detections = 0;
  int false_detections = 0;
};

// Delta_i = |Dist_i^- - Dist_i^+| with Dist^+ taken from the posterior.
DeltaStats delta_stats(const EkfBelief& posterior, std::span<const double> measured_dist,
                       std::span<const Point2> anchors, std::span<const int> anchor_ids, int step);

// Flags every anchor with Delta_i > max(Delta_avg + gamma * (Delta_max -
// Delta_min), delta_floor_m).
std::vector<int> delta_flag(const DeltaStats& stats, const DetectorConfig& cfg);

// Mahalanobis statistic nu_i^2 / C_i per anchor; NaN where the window has not
// filled yet. The current innovation is scored against the windowed variance
// of the anchor's past innovations.
Eigen::VectorXd innovation_norm(const InnovationWindow& window, const Eigen::VectorXd& innovation,
                                std::span<const int> anchor_ids);

// Flags every anchor whose statistic exceeds both maha_margin *
// mean(statistics) and the absolute maha_floor.
std::vector<int> maha_flag(std::span<const double> statistics, std::span<const int> anchor_ids,
                           const DetectorConfig& cfg);

// Full detect-remove-rerun loop: track, flag past warm-up, remove the single
// worst offender, restart from step 0 on the reduced anchor set; stop when a
// pass completes cleanly or removals would sink below min_anchors.
// Measurements are replayed across passes, never regenerated.
RunReport secure_track(const GroundTruth& truth, const MeasurementStream& measurements,
                       const RadioParams& radio, const DetectorConfig& detector,
                       const TrackerParams& tracker);

}  // namespace sectrack
