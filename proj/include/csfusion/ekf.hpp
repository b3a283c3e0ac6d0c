#pragma once

#include "csfusion/types.hpp"

namespace csfusion {

struct EkfState {
  Vec6 x = Vec6::Zero();
  Mat6 p = Mat6::Zero();
};

/// Discrete white-acceleration process noise for the double integrator.
Mat6 ekf_process_noise(double dt, double accel_psd);

/// Time update with the exact constant-velocity transition matrix.
EkfState ekf_predict(const EkfState& s, double dt, const Mat6& q_d);

struct EkfUpdateResult {
  EkfState state;
  Vec3 innovation = Vec3::Zero();
  double nis = 0.0;
  bool regularized = false;  // innovation covariance needed jitter
};

/// Joseph-form measurement update against the altitude/range/vertical-rate
/// map; returns the innovation and its normalized squared magnitude.
EkfUpdateResult ekf_update(const EkfState& s, const Measurement& y, const Mat3& r);

}  // namespace csfusion
