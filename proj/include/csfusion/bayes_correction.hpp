#pragma once

#include "csfusion/types.hpp"

namespace csfusion {

/// Numerical safeguards for the exponential probability correction.
/// Log-weights whose centered magnitude exceeds `temper_threshold` are
/// uniformly rescaled by `temper_scale` until they fit; uniform scaling keeps
/// the weight ordering intact.
struct CorrectionConfig {
  double temper_threshold = 30.0;
  double temper_scale = 0.5;
};

/// Exponential reweighting of mode probabilities by the observed co-state
/// increment:
///   p_hat_k ∝ exp(cbar_k . dlam - 0.5 ||cbar_k||^2 dt) p_k,
/// evaluated in log domain with log-sum-exp normalization. `centroids` holds
/// one co-state centroid per mode (row k), paired with p by index. Zero prior
/// entries stay zero.
Eigen::VectorXd correct_probabilities(const Eigen::VectorXd& p,
                                      const Eigen::MatrixXd& centroids,
                                      const Eigen::VectorXd& delta_lambda,
                                      double dt,
                                      const CorrectionConfig& cfg = {});

}  // namespace csfusion
