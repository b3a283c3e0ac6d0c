#pragma once

#include <Eigen/Dense>

namespace csfusion {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Translational state: position [m] and velocity [m/s].
struct StateVector {
  Vec3 p{Vec3::Zero()};
  Vec3 v{Vec3::Zero()};

  Vec6 vec() const {
    Vec6 out;
    out << p, v;
    return out;
  }
  static StateVector from_vec(const Vec6& x) {
    return {x.head<3>(), x.tail<3>()};
  }
  bool finite() const { return p.allFinite() && v.allFinite(); }
};

/// Observation triple: altitude [m], slant range [m], vertical velocity [m/s].
struct Measurement {
  double altitude = 0.0;
  double range = 0.0;
  double vertical_velocity = 0.0;

  Vec3 vec() const { return {altitude, range, vertical_velocity}; }
  static Measurement from_vec(const Vec3& y) { return {y[0], y[1], y[2]}; }
  bool finite() const { return vec().allFinite(); }
};

}  // namespace csfusion
