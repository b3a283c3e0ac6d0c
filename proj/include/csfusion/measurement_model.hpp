#pragma once

#include "csfusion/types.hpp"

namespace csfusion {

/// Floor applied to the slant range wherever it appears in a denominator,
/// so the measurement map stays defined at p = 0.
inline constexpr double kRangeGuard = 1e-6;

double guarded_range(const Vec3& p);

/// Constant-velocity prior: returns (dp/dt, dv/dt) = (v, 0).
StateVector eval_dynamics(const StateVector& x);

/// Measurement map h(x) = (altitude, slant range, vertical velocity).
Measurement eval_h(const StateVector& x);

/// Jacobian of h. Row 0 selects altitude, row 1 is the range direction
/// p/max(r, guard), row 2 selects vertical velocity.
Mat36 eval_jacobian(const StateVector& x);

/// Model-predicted measurement rate under the constant-velocity prior:
/// eta = (v_z, p.v / max(r, guard), 0).
Vec3 predicted_increment(const StateVector& x);

}  // namespace csfusion
