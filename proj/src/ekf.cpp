#include "csfusion/ekf.hpp"

#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"

namespace csfusion {

Mat6 ekf_process_noise(double dt, double accel_psd) {
  if (!(dt > 0.0)) throw InvalidIntervalError("process noise interval must be positive");
  Mat6 q = Mat6::Zero();
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  const Mat3 i3 = Mat3::Identity();
  q.topLeftCorner<3, 3>() = accel_psd * dt3 / 3.0 * i3;
  q.topRightCorner<3, 3>() = accel_psd * dt2 / 2.0 * i3;
  q.bottomLeftCorner<3, 3>() = accel_psd * dt2 / 2.0 * i3;
  q.bottomRightCorner<3, 3>() = accel_psd * dt * i3;
  return q;
}

EkfState ekf_predict(const EkfState& s, double dt, const Mat6& q_d) {
  if (!(dt > 0.0)) throw InvalidIntervalError("prediction interval must be positive");
  Mat6 f = Mat6::Identity();
  f.topRightCorner<3, 3>() = dt * Mat3::Identity();
  EkfState out;
  out.x = f * s.x;
  out.p = f * s.p * f.transpose() + q_d;
  out.p = 0.5 * (out.p + out.p.transpose());
  return out;
}

EkfUpdateResult ekf_update(const EkfState& s, const Measurement& y, const Mat3& r) {
  if (!(r.diagonal().minCoeff() > 0.0))
    throw InvalidConfigError("measurement covariance must be positive definite");
  if (!y.finite()) throw InvalidStateError("measurement has non-finite components");

  const StateVector xs = StateVector::from_vec(s.x);
  const Mat36 h = eval_jacobian(xs);
  const Vec3 predicted = eval_h(xs).vec();
  const Vec3 innovation = y.vec() - predicted;

  Mat3 innov_cov = h * s.p * h.transpose() + r;
  bool regularized = false;
  Eigen::LLT<Mat3> chol(innov_cov);
  if (chol.info() != Eigen::Success) {
    innov_cov += (1e-9 * innov_cov.trace()) * Mat3::Identity();
    chol.compute(innov_cov);
    regularized = true;
  }

  const Eigen::Matrix<double, 6, 3> gain =
      s.p * h.transpose() * chol.solve(Mat3::Identity());

  EkfUpdateResult out;
  out.innovation = innovation;
  out.nis = innovation.dot(chol.solve(innovation));
  out.regularized = regularized;
  out.state.x = s.x + gain * innovation;
  const Mat6 ikh = Mat6::Identity() - gain * h;
  Mat6 p = ikh * s.p * ikh.transpose() + gain * r * gain.transpose();
  out.state.p = 0.5 * (p + p.transpose());
  return out;
}

}  // namespace csfusion
