#include "sectrack/detection.hpp"

#include "sectrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sectrack {

namespace {

constexpr double kVarianceFloor = 1e-12;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// True when at least min_anchors honest anchors exist and they are not all on
// one line; squared-distance measurements cannot pin a position otherwise.
bool observable_geometry(const std::vector<AnchorNode>& anchors, int min_anchors) {
  std::vector<Point2> honest;
  for (const auto& a : anchors)
    if (a.honest) honest.push_back(a.true_pos);
  if (static_cast<int>(honest.size()) < min_anchors) return false;

  const Point2 origin = honest.front();
  Point2 dir = Point2::Zero();
  for (const auto& p : honest) {
    if ((p - origin).norm() > 1e-9) {
      dir = p - origin;
      break;
    }
  }
  if (dir.isZero()) return false;
  for (const auto& p : honest) {
    const Point2 rel = p - origin;
    const double cross = dir.x() * rel.y() - dir.y() * rel.x();
    if (std::abs(cross) > 1e-9 * dir.norm() * (rel.norm() + 1.0)) return true;
  }
  return false;
}

// Linear least-squares position fix from one set of squared-distance
// measurements: differencing |x - a_i|^2 = z_i against the first anchor
// removes the quadratic term. Falls back to the anchor centroid when the
// geometry is too thin (< 3 anchors or collinear). The fix is clamped into
// the anchors' inflated bounding box: the sensors watch that region, and a
// near-singular system can otherwise throw the fix kilometers out.
Point2 ls_position_init(const std::vector<Point2>& anchors, const Eigen::VectorXd& z) {
  const auto n = static_cast<Eigen::Index>(anchors.size());
  Point2 centroid = Point2::Zero();
  for (const auto& a : anchors) centroid += a;
  centroid /= static_cast<double>(n);
  if (n < 3) return centroid;

  Eigen::MatrixXd lhs(n - 1, 2);
  Eigen::VectorXd rhs(n - 1);
  const Point2& a0 = anchors.front();
  for (Eigen::Index i = 1; i < n; ++i) {
    const Point2& ai = anchors[static_cast<std::size_t>(i)];
    lhs.row(i - 1) = 2.0 * (a0 - ai).transpose();
    rhs[i - 1] = z[i] - z[0] - ai.squaredNorm() + a0.squaredNorm();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  if (qr.rank() < 2) return centroid;
  Eigen::Vector2d fix = qr.solve(rhs);
  if (!fix.allFinite()) return centroid;

  Point2 lo = anchors.front(), hi = anchors.front();
  for (const auto& a : anchors) {
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(a);
  }
  const double margin = std::max(0.5 * (hi - lo).norm(), 20.0);
  fix = fix.cwiseMax(Point2(lo.array() - margin)).cwiseMin(Point2(hi.array() + margin));
  return fix;
}

// Robust fix: exact trilateration on every anchor triple, scored by the
// median range residual over all anchors. With up to half the anchors lying
// (about independently drawn positions) the honest triple still wins, since
// the liars' constraints are mutually inconsistent. Falls back to the plain
// least-squares fix for thin geometries.
Point2 robust_position_init(const std::vector<Point2>& anchors, const Eigen::VectorXd& z) {
  const std::size_t n = anchors.size();
  const Point2 ls = ls_position_init(anchors, z);
  if (n < 4) return ls;

  std::vector<double> ranges(n);
  for (std::size_t i = 0; i < n; ++i) ranges[i] = std::sqrt(std::max(z[static_cast<Eigen::Index>(i)], 0.0));

  auto median_residual = [&](const Point2& x) {
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = std::abs(ranges[i] - (x - anchors[i]).norm());
    std::nth_element(res.begin(), res.begin() + static_cast<long>(n / 2), res.end());
    return res[n / 2];
  };

  Point2 best = ls;
  double best_score = median_residual(ls);
  std::vector<Point2> triple(3);
  Eigen::VectorXd triple_z(3);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    for (std::size_t j = i + 1; j + 1 < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        triple[0] = anchors[i];
        triple[1] = anchors[j];
        triple[2] = anchors[k];
        triple_z << z[static_cast<Eigen::Index>(i)], z[static_cast<Eigen::Index>(j)],
            z[static_cast<Eigen::Index>(k)];
        const Point2 fix = ls_position_init(triple, triple_z);
        const double score = median_residual(fix);
        if (score < best_score) {
          best_score = score;
          best = fix;
        }
      }
    }
  }
  return best;
}

}  // namespace

InnovationWindow::InnovationWindow(int n_anchors, int window, double variance_floor)
    : window_(window),
      variance_floor_(std::max(variance_floor, kVarianceFloor)),
      buf_(static_cast<std::size_t>(n_anchors)),
      head_(static_cast<std::size_t>(n_anchors), 0),
      count_(static_cast<std::size_t>(n_anchors), 0) {
  if (n_anchors < 1) throw std::invalid_argument("InnovationWindow: need at least one anchor");
  if (window < 2) throw std::invalid_argument("InnovationWindow: window must be >= 2");
  for (auto& b : buf_) b.assign(static_cast<std::size_t>(window), 0.0);
}

void InnovationWindow::push(int anchor_id, double value) {
  auto& b = buf_.at(static_cast<std::size_t>(anchor_id));
  auto& head = head_[static_cast<std::size_t>(anchor_id)];
  b[static_cast<std::size_t>(head)] = value;
  head = (head + 1) % window_;
  auto& count = count_[static_cast<std::size_t>(anchor_id)];
  count = std::min(count + 1, window_);
}

bool InnovationWindow::full(int anchor_id) const {
  return count_.at(static_cast<std::size_t>(anchor_id)) >= window_;
}

double InnovationWindow::variance(int anchor_id) const {
  if (!full(anchor_id))
    throw std::logic_error("InnovationWindow: variance requested before the window filled");
  return std::max(sample_variance(buf_.at(static_cast<std::size_t>(anchor_id))), variance_floor_);
}

DeltaStats delta_stats(const EkfBelief& posterior, std::span<const double> measured_dist,
                       std::span<const Point2> anchors, std::span<const int> anchor_ids,
                       int step) {
  if (anchors.empty() || anchors.size() != measured_dist.size() ||
      anchors.size() != anchor_ids.size())
    throw std::invalid_argument("delta_stats: need one measured distance and id per anchor");

  DeltaStats out;
  out.step = step;
  out.anchor_ids.assign(anchor_ids.begin(), anchor_ids.end());
  out.delta.resize(static_cast<Eigen::Index>(anchors.size()));
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double post_dist = (posterior.mean.position() - anchors[i]).norm();
    out.delta[static_cast<Eigen::Index>(i)] = std::abs(measured_dist[i] - post_dist);
  }
  out.delta_avg = out.delta.mean();
  out.delta_max = out.delta.maxCoeff();
  out.delta_min = out.delta.minCoeff();
  return out;
}

std::vector<int> delta_flag(const DeltaStats& stats, const DetectorConfig& cfg) {
  std::vector<int> flagged;
  const double spread = stats.delta_max - stats.delta_min;
  if (spread <= cfg.min_spread_m) return flagged;
  const double threshold = std::max(stats.delta_avg + cfg.gamma * spread, cfg.delta_floor_m);
  for (Eigen::Index i = 0; i < stats.delta.size(); ++i) {
    if (stats.delta[i] > threshold) flagged.push_back(stats.anchor_ids[static_cast<std::size_t>(i)]);
  }
  return flagged;
}

Eigen::VectorXd innovation_norm(const InnovationWindow& window, const Eigen::VectorXd& innovation,
                                std::span<const int> anchor_ids) {
  if (innovation.size() != static_cast<Eigen::Index>(anchor_ids.size()))
    throw std::invalid_argument("innovation_norm: innovation/id count mismatch");
  Eigen::VectorXd stat(innovation.size());
  for (Eigen::Index i = 0; i < innovation.size(); ++i) {
    const int id = anchor_ids[static_cast<std::size_t>(i)];
    stat[i] = window.full(id) ? innovation[i] * innovation[i] / window.variance(id) : kNan;
  }
  return stat;
}

std::vector<int> maha_flag(std::span<const double> statistics, std::span<const int> anchor_ids,
                           const DetectorConfig& cfg) {
  if (statistics.size() != anchor_ids.size())
    throw std::invalid_argument("maha_flag: statistic/id count mismatch");
  double sum = 0.0;
  int defined = 0;
  for (double s : statistics) {
    if (!std::isnan(s)) {
      sum += s;
      ++defined;
    }
  }
  std::vector<int> flagged;
  if (defined == 0) return flagged;
  const double threshold = std::max(cfg.maha_margin * (sum / defined), cfg.maha_floor);
  for (std::size_t i = 0; i < statistics.size(); ++i) {
    if (!std::isnan(statistics[i]) && statistics[i] > threshold)
      flagged.push_back(anchor_ids[i]);
  }
  return flagged;
}

RunReport secure_track(const GroundTruth& truth, const MeasurementStream& measurements,
                       const RadioParams& radio, const DetectorConfig& detector,
                       const TrackerParams& tracker) {
  const int n_anchors = static_cast<int>(truth.anchors.size());
  const int n_steps = static_cast<int>(truth.target.size());
  if (static_cast<int>(measurements.steps.size()) != n_steps)
    throw std::invalid_argument("secure_track: measurement stream length mismatch");
  if (n_anchors < detector.min_anchors)
    throw std::invalid_argument("secure_track: fewer anchors than min_anchors");

  RunReport report;
  report.unobservable = !observable_geometry(truth.anchors, detector.min_anchors);

  NoiseModel noise;
  noise.process = cv_process_noise(tracker.process_noise_q);
  noise.r_db_var = std::max(radio.sigma_db * radio.sigma_db, 1e-12);

  std::vector<char> live(static_cast<std::size_t>(n_anchors), 1);
  const int max_passes = n_anchors - detector.min_anchors + 1;

  for (int pass = 0; pass < max_passes; ++pass) {
    PassDiag diag;
    diag.pass_index = pass;
    for (int id = 0; id < n_anchors; ++id)
      if (live[static_cast<std::size_t>(id)]) diag.live_ids.push_back(id);
    const int live_count = static_cast<int>(diag.live_ids.size());

    EkfBelief belief;
    {
      std::vector<Point2> init_anchors;
      std::vector<double> init_z;
      for (const auto& m : measurements.steps.front().items) {
        if (!live[static_cast<std::size_t>(m.anchor_id)]) continue;
        init_anchors.push_back(truth.reported_pos(0, m.anchor_id));
        init_z.push_back(m.z);
      }
      Point2 start = Point2::Zero();
      if (init_anchors.empty()) {
        for (int id : diag.live_ids) start += truth.reported_pos(0, id);
        start /= static_cast<double>(live_count);
      } else {
        start = robust_position_init(
            init_anchors, Eigen::Map<const Eigen::VectorXd>(
                              init_z.data(), static_cast<Eigen::Index>(init_z.size())));
      }
      belief.mean = TargetState{start.x(), 0.0, start.y(), 0.0};
    }
    belief.cov = tracker.initial_cov_diag.asDiagonal();

    InnovationWindow window(n_anchors, detector.window, detector.maha_variance_floor);
    std::vector<int> maha_streak(static_cast<std::size_t>(n_anchors), 0);
    std::optional<Verdict> verdict;

    for (int k = 0; k < n_steps && !verdict; ++k) {
      belief = time_update(belief, noise);
      const EkfBelief prior = belief;

      std::vector<int> ids;
      std::vector<Point2> anchors;
      std::vector<double> z_values;
      for (const auto& m : measurements.steps[static_cast<std::size_t>(k)].items) {
        if (!live[static_cast<std::size_t>(m.anchor_id)]) continue;
        ids.push_back(m.anchor_id);
        anchors.push_back(truth.reported_pos(k, m.anchor_id));
        z_values.push_back(m.z);
      }

      StepDiag sd;
      sd.step = k;
      sd.live_ids = ids;

      if (!ids.empty()) {
        const Eigen::VectorXd z =
            Eigen::Map<const Eigen::VectorXd>(z_values.data(), static_cast<Eigen::Index>(z_values.size()));
        const Eigen::VectorXd innovation = z - predicted_sq_distances(prior.mean, anchors);

        // Standardized innovation: each residual divided by the filter's
        // predicted spread sqrt(H P H^T + V R V^T)_ii. This keeps the series
        // stationary while the measurement scale drifts with distance, so one
        // windowed variance (and one flag floor) works across conditions.
        Eigen::VectorXd standardized(innovation.size());
        {
          const Eigen::MatrixXd h = measurement_jacobian_h(prior.mean, anchors);
          const Eigen::VectorXd v = noise_jacobian_v(prior.mean, anchors, radio.alpha);
          for (Eigen::Index i = 0; i < innovation.size(); ++i) {
            const double s_i = h.row(i) * prior.cov * h.row(i).transpose() +
                               v[i] * v[i] * noise.r_db_var;
            standardized[i] = innovation[i] / std::sqrt(std::max(s_i, 1e-12));
          }
        }

        // Innovation gate: fuse only samples within gate_sigma of the predicted
        // innovation spread. Position needs three ranges, so the gate always
        // keeps at least the three least-outlying samples; fusing fewer can
        // slingshot the estimate along a single range gradient.
        // Detection statistics still see every sample.
        std::vector<int> fuse_idx;
        if (tracker.innovation_gate_sigma > 0.0) {
          std::vector<int> order(ids.size());
          for (std::size_t i = 0; i < ids.size(); ++i) order[i] = static_cast<int>(i);
          std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(standardized[a]) < std::abs(standardized[b]);
          });
          const std::size_t keep_min = std::min<std::size_t>(3, ids.size());
          for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const int i = order[rank];
            if (rank < keep_min ||
                std::abs(standardized[i]) <= tracker.innovation_gate_sigma) {
              fuse_idx.push_back(i);
            } else {
              sd.gated_ids.push_back(ids[static_cast<std::size_t>(i)]);
            }
          }
          std::sort(fuse_idx.begin(), fuse_idx.end());
          std::sort(sd.gated_ids.begin(), sd.gated_ids.end());
        } else {
          for (std::size_t i = 0; i < ids.size(); ++i) fuse_idx.push_back(static_cast<int>(i));
        }
        std::vector<Point2> fuse_anchors;
        Eigen::VectorXd fuse_z(static_cast<Eigen::Index>(fuse_idx.size()));
        Eigen::VectorXd r_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(fuse_idx.size()));
        for (std::size_t i = 0; i < fuse_idx.size(); ++i) {
          fuse_anchors.push_back(anchors[static_cast<std::size_t>(fuse_idx[i])]);
          fuse_z[static_cast<Eigen::Index>(i)] = z[fuse_idx[i]];
        }
        if (tracker.info_dominance_cap > 0.0 && fuse_idx.size() >= 2) {
          const Eigen::VectorXd fuse_v = noise_jacobian_v(prior.mean, fuse_anchors, radio.alpha);
          Eigen::VectorXd weight(fuse_v.size());
          for (Eigen::Index i = 0; i < fuse_v.size(); ++i) {
            weight[i] = 1.0 / std::max(fuse_v[i] * fuse_v[i] * noise.r_db_var, 1e-300);
          }
          std::vector<double> sorted(weight.data(), weight.data() + weight.size());
          std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                           sorted.end());
          const double cap = tracker.info_dominance_cap * sorted[sorted.size() / 2];
          if (cap > 0.0) {
            for (Eigen::Index i = 0; i < weight.size(); ++i) {
              if (weight[i] > cap) r_scale[i] = weight[i] / cap;
            }
          }
        }
        belief =
            measurement_update(prior, fuse_z, fuse_anchors, noise, radio.alpha, r_scale).posterior;

        std::vector<double> measured_dist(z_values.size());
        for (std::size_t i = 0; i < z_values.size(); ++i) measured_dist[i] = std::sqrt(z_values[i]);
        const DeltaStats ds = delta_stats(belief, measured_dist, anchors, ids, k);
        sd.delta.assign(ds.delta.data(), ds.delta.data() + ds.delta.size());
        sd.delta_avg = ds.delta_avg;
        sd.delta_max = ds.delta_max;
        sd.delta_min = ds.delta_min;

        const Eigen::VectorXd stats = innovation_norm(window, standardized, ids);
        sd.maha.assign(stats.data(), stats.data() + stats.size());

        if (live_count > detector.min_anchors) {
          if (detector.mode == DetectorMode::delta && k >= detector.warmup) {
            const auto flagged = delta_flag(ds, detector);
            if (!flagged.empty()) {
              // single worst offender per pass
              int worst = flagged.front();
              double worst_delta = -1.0;
              for (int id : flagged) {
                const auto at = std::find(ids.begin(), ids.end(), id) - ids.begin();
                if (ds.delta[at] > worst_delta) {
                  worst_delta = ds.delta[at];
                  worst = id;
                }
              }
              verdict = Verdict{worst, k, DetectorMode::delta, worst_delta};
            }
          } else if (detector.mode == DetectorMode::mahalanobis &&
                     k >= detector.warmup + detector.window) {
            const auto flagged = maha_flag({sd.maha.data(), sd.maha.size()}, ids, detector);
            for (int id : ids) {
              auto& streak = maha_streak[static_cast<std::size_t>(id)];
              if (std::find(flagged.begin(), flagged.end(), id) != flagged.end()) ++streak;
              else streak = 0;
            }
            int worst = -1;
            double worst_stat = -1.0;
            for (int id : flagged) {
              if (maha_streak[static_cast<std::size_t>(id)] < detector.maha_confirm_steps) continue;
              const auto at = std::find(ids.begin(), ids.end(), id) - ids.begin();
              if (sd.maha[static_cast<std::size_t>(at)] > worst_stat) {
                worst_stat = sd.maha[static_cast<std::size_t>(at)];
                worst = id;
              }
            }
            if (worst >= 0) verdict = Verdict{worst, k, DetectorMode::mahalanobis, worst_stat};
          }
        }

        // Push after scoring so the current residual never normalizes itself.
        for (std::size_t i = 0; i < ids.size(); ++i)
          window.push(ids[i], standardized[static_cast<Eigen::Index>(i)]);
      }

      sd.estimate = belief.mean;
      sd.sq_error_m2 = (belief.mean.position() - truth.target[static_cast<std::size_t>(k)]).squaredNorm();
      diag.steps.push_back(std::move(sd));
    }

    if (verdict) {
      diag.flagged = verdict;
      report.passes.push_back(std::move(diag));
      report.verdicts.push_back(*verdict);
      live[static_cast<std::size_t>(verdict->anchor_id)] = 0;
      continue;  // restart from step 0 on the reduced set
    }
    report.passes.push_back(std::move(diag));
    break;
  }

  for (int id = 0; id < n_anchors; ++id)
    if (live[static_cast<std::size_t>(id)]) report.final_live_ids.push_back(id);

  const PassDiag& final_pass = report.passes.back();
  double err_sum = 0.0;
  int err_count = 0;
  for (const auto& sd : final_pass.steps) {
    if (sd.step < detector.warmup) continue;
    err_sum += sd.sq_error_m2;
    ++err_count;
  }
  report.mse_m2 = err_count > 0 ? err_sum / err_count : 0.0;

  for (const auto& a : truth.anchors) (a.honest ? report.n_honest : report.n_malicious)++;
  for (const auto& v : report.verdicts) {
    (truth.anchors[static_cast<std::size_t>(v.anchor_id)].honest ? report.false_detections
                                                                 : report.true_detections)++;
  }
  return report;
}

}  // namespace sectrack
