#pragma once

#include <deque>
#include <utility>

#include "csfusion/types.hpp"

namespace csfusion {

/// Spectral regularization policy for the measurement Gram matrix H*H^T.
/// The working value is max(floor, tau * trace/m); when the condition number
/// estimate exceeds cond_limit the heavier heavy_tau scale takes over.
struct EpsilonPolicy {
  double floor = 1e-9;
  double tau = 1e-8;
  double cond_limit = 1e8;
  double heavy_tau = 1e-3;
};

double adaptive_epsilon(const Mat36& h, const EpsilonPolicy& policy = {});

/// (H H^T + eps I)^{-1} through a symmetric positive-definite factorization.
/// Requires eps > 0.
Mat3 regularized_gram_inverse(const Mat36& h, double eps);

/// Algebraic multiplier enforcing measurement/dynamics consistency over one
/// sampling interval:
///   lambda = (H H^T + eps I)^{-1} Sigma^{-1} (dy_obs - eta*dt) / dt.
/// sigma_sq holds the diagonal of Sigma. eps = 0 is accepted when the Gram
/// matrix itself is invertible.
Vec3 compute_costate(const Mat36& h, const Vec3& sigma_sq, const Vec3& dy_obs,
                     const Vec3& eta, double dt, double eps);

/// Forward-Euler step of the projected dynamics:
///   x' = x + f(x)*dt + H^T lambda * dt.
StateVector project_state_update(const StateVector& x, const Vec3& lambda,
                                 const Mat36& h, double dt);

/// Whitened innovation magnitude z = sqrt(r^T Sigma^{-1} r) with
/// r = dy_obs - eta*dt.
double whitened_innovation(const Vec3& dy_obs, const Vec3& eta, double dt,
                           const Vec3& sigma_sq);

/// Ring buffer of recent raw innovation vectors with strictly increasing
/// timestamps. Oldest entries are evicted once capacity is reached.
class InnovationWindow {
 public:
  explicit InnovationWindow(std::size_t capacity = 50) : capacity_(capacity) {}

  void push(double t, const Vec3& innovation);
  void clear() { buf_.clear(); }

  bool empty() const { return buf_.empty(); }
  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Per-channel mean of squared innovations over the window.
  Vec3 mean_square() const;

  const std::deque<std::pair<double, Vec3>>& entries() const { return buf_; }

 private:
  std::size_t capacity_;
  std::deque<std::pair<double, Vec3>> buf_;
};

/// Per-channel variance scale sigma_i^2 = max(sigma_min^2, RMS_i^2) over the
/// window; an empty window yields the floor on every channel.
Vec3 rolling_rms_sigma(const InnovationWindow& window, double sigma_min);

/// Information-based surrogate weighting: inverse variances proportional to
/// diag(alpha*H*Q*H^T + beta*I), normalized so the largest channel weight is
/// one, floored at sigma_min^2.
Vec3 info_weighting(const Mat36& h, const Mat6& q, double alpha, double beta,
                    double sigma_min = 1e-3);

/// Consistency error functional, evaluated in measurement coordinates:
///   V = 0.5 * e^T (H H^T + eps I)^{-1} e,  e = H (dx - f_dt).
double lyapunov_value(const Vec6& dx, const Vec6& f_dt, const Mat36& h,
                      double eps);

}  // namespace csfusion
