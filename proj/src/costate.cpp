#include "csfusion/costate.hpp"

#include <cmath>

#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"

namespace csfusion {

double adaptive_epsilon(const Mat36& h, const EpsilonPolicy& policy) {
  const Mat3 gram = h * h.transpose();
  const double mean_trace = gram.trace() / 3.0;
  double eps = std::max(policy.floor, policy.tau * mean_trace);

  Eigen::SelfAdjointEigenSolver<Mat3> eig(gram);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const bool ill = lo <= 0.0 || hi / lo > policy.cond_limit;
  if (ill) eps = std::max(eps, policy.heavy_tau * mean_trace);
  return eps;
}

Mat3 regularized_gram_inverse(const Mat36& h, double eps) {
  if (!(eps > 0.0)) throw InvalidConfigError("regularizer must be positive");
  const Mat3 g = h * h.transpose() + eps * Mat3::Identity();
  return g.llt().solve(Mat3::Identity());
}

Vec3 compute_costate(const Mat36& h, const Vec3& sigma_sq, const Vec3& dy_obs,
                     const Vec3& eta, double dt, double eps) {
  if (!(dt > 0.0)) throw InvalidIntervalError("sampling interval must be positive");
  if (!(sigma_sq.minCoeff() > 0.0))
    throw InvalidConfigError("weighting variances must be positive");

  const Vec3 residual = dy_obs - eta * dt;
  const Vec3 whitened = residual.cwiseQuotient(sigma_sq);
  const Mat3 g = h * h.transpose() + eps * Mat3::Identity();
  return g.ldlt().solve(whitened) / dt;
}

StateVector project_state_update(const StateVector& x, const Vec3& lambda,
                                 const Mat36& h, double dt) {
  if (!(dt > 0.0)) throw InvalidIntervalError("sampling interval must be positive");
  const StateVector f = eval_dynamics(x);
  const Vec6 correction = h.transpose() * lambda;
  StateVector out;
  out.p = x.p + f.p * dt + correction.head<3>() * dt;
  out.v = x.v + f.v * dt + correction.tail<3>() * dt;
  return out;
}

double whitened_innovation(const Vec3& dy_obs, const Vec3& eta, double dt,
                           const Vec3& sigma_sq) {
  if (!(dt > 0.0)) throw InvalidIntervalError("sampling interval must be positive");
  const Vec3 residual = dy_obs - eta * dt;
  return std::sqrt(residual.cwiseProduct(residual).cwiseQuotient(sigma_sq).sum());
}

void InnovationWindow::push(double t, const Vec3& innovation) {
  if (!buf_.empty() && !(t > buf_.back().first))
    throw InvalidIntervalError("innovation timestamps must be strictly increasing");
  buf_.emplace_back(t, innovation);
  while (buf_.size() > capacity_) buf_.pop_front();
}

Vec3 InnovationWindow::mean_square() const {
  Vec3 acc = Vec3::Zero();
  for (const auto& [t, v] : buf_) acc += v.cwiseProduct(v);
  return buf_.empty() ? acc : Vec3(acc / static_cast<double>(buf_.size()));
}

Vec3 rolling_rms_sigma(const InnovationWindow& window, double sigma_min) {
  const double floor_sq = sigma_min * sigma_min;
  if (window.empty()) return Vec3::Constant(floor_sq);
  return window.mean_square().cwiseMax(floor_sq);
}

Vec3 info_weighting(const Mat36& h, const Mat6& q, double alpha, double beta,
                    double sigma_min) {
  if (!(alpha >= 0.0) || !(beta > 0.0))
    throw InvalidConfigError("info weighting requires alpha >= 0, beta > 0");
  const Mat3 info = h * q * h.transpose();
  const Vec3 weights = alpha * info.diagonal() + Vec3::Constant(beta);
  const Vec3 normalized = weights / weights.maxCoeff();
  const double floor_sq = sigma_min * sigma_min;
  return normalized.cwiseInverse().cwiseMax(floor_sq);
}

double lyapunov_value(const Vec6& dx, const Vec6& f_dt, const Mat36& h,
                      double eps) {
  if (!(eps >= 0.0)) throw InvalidConfigError("regularizer must be nonnegative");
  const Vec3 e = h * (dx - f_dt);
  const Mat3 g = h * h.transpose() + eps * Mat3::Identity();
  return 0.5 * e.dot(g.llt().solve(e));
}

}  // namespace csfusion
