#include "sectrack/ekf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sectrack {

Eigen::Matrix4d cv_transition() {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  a(0, 1) = 1.0;
  a(2, 3) = 1.0;
  return a;
}

Eigen::Matrix4d cv_process_noise(double q) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (int axis : {0, 2}) {
    m(axis, axis) = q / 3.0;
    m(axis, axis + 1) = q / 2.0;
    m(axis + 1, axis) = q / 2.0;
    m(axis + 1, axis + 1) = q;
  }
  return m;
}

EkfBelief time_update(const EkfBelief& belief, const NoiseModel& noise) {
  const Eigen::Matrix4d a = cv_transition();
  EkfBelief prior;
  prior.mean = TargetState::from_vec(a * belief.mean.vec());
  prior.cov = a * belief.cov * a.transpose() + noise.process;
  prior.cov = 0.5 * (prior.cov + prior.cov.transpose());
  return prior;
}

Eigen::VectorXd predicted_sq_distances(const TargetState& state, std::span<const Point2> anchors) {
  Eigen::VectorXd h(static_cast<Eigen::Index>(anchors.size()));
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    h[static_cast<Eigen::Index>(i)] = (state.position() - anchors[i]).squaredNorm();
  }
  return h;
}

Eigen::MatrixXd measurement_jacobian_h(const TargetState& prior_mean,
                                       std::span<const Point2> anchors) {
  if (anchors.empty()) throw std::invalid_argument("measurement_jacobian_h: no anchors");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(anchors.size()), 4);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    h(row, 0) = 2.0 * (prior_mean.x - anchors[i].x());
    h(row, 2) = 2.0 * (prior_mean.y - anchors[i].y());
  }
  return h;
}

Eigen::VectorXd noise_jacobian_v(const TargetState& prior_mean, std::span<const Point2> anchors,
                                 double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("noise_jacobian_v: alpha must be positive");
  Eigen::VectorXd v(static_cast<Eigen::Index>(anchors.size()));
  const double scale = -std::numbers::ln10 / alpha;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = scale * (prior_mean.position() - anchors[i]).squaredNorm();
  }
  return v;
}

MeasurementUpdate measurement_update(const EkfBelief& prior, const Eigen::VectorXd& z,
                                     std::span<const Point2> anchors, const NoiseModel& noise,
                                     double alpha, const Eigen::VectorXd& r_scale) {
  const auto n = static_cast<Eigen::Index>(anchors.size());
  if (z.size() != n)
    throw std::invalid_argument("measurement_update: measurement/anchor count mismatch");
  if (r_scale.size() != 0 && r_scale.size() != n)
    throw std::invalid_argument("measurement_update: r_scale size mismatch");
  if (n == 0) return {prior, Eigen::VectorXd{}};

  const Eigen::MatrixXd h = measurement_jacobian_h(prior.mean, anchors);
  const Eigen::VectorXd v = noise_jacobian_v(prior.mean, anchors, alpha);

  Eigen::MatrixXd s = h * prior.cov * h.transpose();
  if (r_scale.size() == n) {
    s.diagonal() += (v.array().square() * noise.r_db_var * r_scale.array()).matrix();
  } else {
    s.diagonal() += (v.array().square() * noise.r_db_var).matrix();  // V R V^T
  }
  s = 0.5 * (s + s.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("measurement_update: innovation covariance eigendecomposition failed");
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    double ridge = 1e-9 * s.trace() / static_cast<double>(n);
    if (!(ridge > 0.0)) ridge = 1e-12;
    s.diagonal().array() += ridge;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("measurement_update: innovation covariance not invertible");

  // K = P H^T S^-1, via solving S X = H P and transposing.
  const Eigen::MatrixXd k = ldlt.solve(h * prior.cov).transpose();

  MeasurementUpdate out;
  out.innovation = z - predicted_sq_distances(prior.mean, anchors);
  out.posterior.mean = TargetState::from_vec(prior.mean.vec() + k * out.innovation);
  out.posterior.cov = (Eigen::Matrix4d::Identity() - k * h) * prior.cov;
  out.posterior.cov = 0.5 * (out.posterior.cov + out.posterior.cov.transpose()).eval();
  if (!out.posterior.mean.vec().allFinite() || !out.posterior.cov.allFinite())
    throw std::runtime_error("measurement_update: non-finite posterior");
  return out;
}

}  // namespace sectrack
