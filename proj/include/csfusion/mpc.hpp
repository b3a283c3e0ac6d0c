#pragma once

#include <vector>

#include "csfusion/types.hpp"

namespace csfusion {

/// Receding-horizon demonstrator coupling tracking cost with the risk
/// signals: per-stage co-state 1-norm penalty, inverse mean-first-passage
/// penalty and a quadratic probability risk constraint.
struct MpcConfig {
  int horizon = 3;
  double dt = 0.5;
  Vec6 state_weight = (Vec6() << 0.0, 0.0, 1.0, 0.1, 0.1, 1.0).finished();
  Vec3 control_weight{0.1, 0.1, 0.1};
  Vec6 x_ref = Vec6::Zero();
  double costate_weight = 0.0;   // gamma
  double inv_mfpt_weight = 0.0;  // rho
  Eigen::MatrixXd risk_metric;   // W; defaults to a hazard-mode indicator
  double risk_max = 1.0;
  std::vector<int> hazard_modes;
  Vec3 control_lo{-3.0, -3.0, -3.0};
  Vec3 control_hi{3.0, 3.0, 3.0};
  int max_iters = 400;
  double initial_step = 1.0;

  void validate() const;
};

struct MpcSolution {
  Eigen::Matrix<double, 3, Eigen::Dynamic> controls;
  double cost = 0.0;
  bool infeasible_fallback = false;
  std::vector<double> cost_trace;  // per accepted projected-gradient iterate
};

/// Total cost of a fixed control sequence under the projected dynamics with
/// a zero-order-hold co-state forecast; exposed for validation against
/// enumeration.
double mpc_cost(const StateVector& x0, const Eigen::Matrix<double, 3, Eigen::Dynamic>& u,
                const Eigen::VectorXd& p0, const Eigen::MatrixXd& l,
                const Vec3& lambda_forecast, const MpcConfig& cfg);

/// Projected gradient descent from the zero control sequence with
/// backtracking; deterministic for fixed inputs. When the autonomous
/// probability path violates the risk constraint the solver returns the
/// max-braking fallback with `infeasible_fallback` set.
MpcSolution solve_mpc(const StateVector& x0, const Eigen::VectorXd& p0,
                      const Eigen::MatrixXd& l, const Vec3& lambda_forecast,
                      const MpcConfig& cfg);

}  // namespace csfusion
