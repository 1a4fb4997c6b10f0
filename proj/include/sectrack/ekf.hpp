#pragma once

#include "sectrack/types.hpp"

#include <Eigen/Dense>

#include <span>

namespace sectrack {

// State vector [x, vx, y, vy]; positions in meters, velocities in m/step.
struct TargetState {
  double x = 0.0;
  double vx = 0.0;
  double y = 0.0;
  double vy = 0.0;

  Eigen::Vector4d vec() const { return {x, vx, y, vy}; }
  Point2 position() const { return {x, y}; }
  static TargetState from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct EkfBelief {
  TargetState mean;
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();
};

struct NoiseModel {
  Eigen::Matrix4d process = Eigen::Matrix4d::Zero();  // Q
  double r_db_var = 0.25;  // per-anchor measurement-noise variance, dB^2 domain
};

// Unit-step constant-velocity transition matrix.
Eigen::Matrix4d cv_transition();

// Discrete white-acceleration process noise, per-axis block [[q/3, q/2], [q/2, q]].
Eigen::Matrix4d cv_process_noise(double q);

EkfBelief time_update(const EkfBelief& belief, const NoiseModel& noise);

// h_i(x) = (x - x_i)^2 + (y - y_i)^2 for each anchor.
Eigen::VectorXd predicted_sq_distances(const TargetState& state, std::span<const Point2> anchors);

// Rows [2(x - x_i), 0, 2(y - y_i), 0]; zero rows allowed when the state sits
// on an anchor.
Eigen::MatrixXd measurement_jacobian_h(const TargetState& prior_mean, std::span<const Point2> anchors);

// Diagonal of the measurement-noise Jacobian; entry i is -(ln10/alpha) * d_i^2.
Eigen::VectorXd noise_jacobian_v(const TargetState& prior_mean, std::span<const Point2> anchors,
                                 double alpha);

struct MeasurementUpdate {
  EkfBelief posterior;
  Eigen::VectorXd innovation;  // z - h(prior), squared-distance domain
};

// Gain K = P H^T (H P H^T + V R V^T)^-1, linearized at the prior. A small
// ridge is added when the innovation covariance conditioning exceeds 1e12
// (V vanishes when the prior sits on an anchor). r_scale optionally inflates
// individual diagonal entries of R (empty = all ones).
MeasurementUpdate measurement_update(const EkfBelief& prior, const Eigen::VectorXd& z,
                                     std::span<const Point2> anchors, const NoiseModel& noise,
                                     double alpha,
                                     const Eigen::VectorXd& r_scale = Eigen::VectorXd());

}  // namespace sectrack
