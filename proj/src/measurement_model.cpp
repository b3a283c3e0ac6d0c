#include "csfusion/measurement_model.hpp"

#include "csfusion/errors.hpp"

namespace csfusion {

double guarded_range(const Vec3& p) {
  return std::max(p.norm(), kRangeGuard);
}

namespace {
void require_finite(const StateVector& x) {
  if (!x.finite()) throw InvalidStateError("state vector has non-finite components");
}
}  // namespace

StateVector eval_dynamics(const StateVector& x) {
  require_finite(x);
  return {x.v, Vec3::Zero()};
}

Measurement eval_h(const StateVector& x) {
  require_finite(x);
  return {x.p.z(), guarded_range(x.p), x.v.z()};
}

Mat36 eval_jacobian(const StateVector& x) {
  require_finite(x);
  const double r = guarded_range(x.p);
  Mat36 h = Mat36::Zero();
  h(0, 2) = 1.0;
  h.block<1, 3>(1, 0) = (x.p / r).transpose();
  h(2, 5) = 1.0;
  return h;
}

Vec3 predicted_increment(const StateVector& x) {
  require_finite(x);
  const double r = guarded_range(x.p);
  return {x.v.z(), x.p.dot(x.v) / r, 0.0};
}

}  // namespace csfusion
