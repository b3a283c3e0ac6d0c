#include "csfusion/bayes_correction.hpp"

#include <cmath>
#include <limits>

#include "csfusion/errors.hpp"

namespace csfusion {

Eigen::VectorXd correct_probabilities(const Eigen::VectorXd& p,
                                      const Eigen::MatrixXd& centroids,
                                      const Eigen::VectorXd& delta_lambda,
                                      double dt, const CorrectionConfig& cfg) {
  const long k = p.size();
  if (centroids.rows() != k)
    throw InvalidConfigError("need exactly one co-state centroid per mode");
  if (centroids.cols() != delta_lambda.size())
    throw InvalidConfigError("centroid / increment dimension mismatch");
  if (!(dt > 0.0)) throw InvalidIntervalError("correction interval must be positive");
  if (!(cfg.temper_threshold > 0.0) || !(cfg.temper_scale > 0.0) ||
      cfg.temper_scale > 1.0)
    throw InvalidConfigError("tempering config out of range");
  if (p.minCoeff() < 0.0) throw InvalidPriorError("prior has negative mass");
  if (!(p.maxCoeff() > 0.0)) throw InvalidPriorError("prior is identically zero");

  Eigen::VectorXd logw(k);
  for (long j = 0; j < k; ++j) {
    const Eigen::VectorXd c = centroids.row(j).transpose();
    logw[j] = c.dot(delta_lambda) - 0.5 * c.squaredNorm() * dt;
  }

  // Center on the best supported mode, then temper uniformly while any
  // centered magnitude still exceeds the threshold.
  double top = -std::numeric_limits<double>::infinity();
  for (long j = 0; j < k; ++j)
    if (p[j] > 0.0) top = std::max(top, logw[j]);
  for (long j = 0; j < k; ++j) logw[j] -= top;

  double mag = 0.0;
  for (long j = 0; j < k; ++j)
    if (p[j] > 0.0) mag = std::max(mag, std::abs(logw[j]));
  while (mag > cfg.temper_threshold) {
    logw *= cfg.temper_scale;
    mag *= cfg.temper_scale;
  }

  Eigen::VectorXd out(k);
  double norm = 0.0;
  for (long j = 0; j < k; ++j) {
    out[j] = p[j] > 0.0 ? p[j] * std::exp(logw[j]) : 0.0;
    norm += out[j];
  }
  out /= norm;
  return out;
}

}  // namespace csfusion
