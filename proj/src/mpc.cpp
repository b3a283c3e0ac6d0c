#include "csfusion/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csfusion/errors.hpp"
#include "csfusion/generator.hpp"
#include "csfusion/measurement_model.hpp"

namespace csfusion {

void MpcConfig::validate() const {
  if (horizon < 1) throw InvalidConfigError("horizon must be >= 1");
  if (!(dt > 0.0)) throw InvalidIntervalError("control interval must be positive");
  if (state_weight.minCoeff() < 0.0 || control_weight.minCoeff() < 0.0)
    throw InvalidConfigError("cost weights must be nonnegative");
  if (costate_weight < 0.0 || inv_mfpt_weight < 0.0)
    throw InvalidConfigError("risk weights must be nonnegative");
  if (!(risk_max > 0.0)) throw InvalidConfigError("risk bound must be positive");
  if ((control_hi - control_lo).minCoeff() < 0.0)
    throw InvalidConfigError("control bounds inverted");
}

namespace {

struct RiskTerms {
  std::vector<Eigen::VectorXd> p_path;  // p_0 .. p_N
  double per_stage_costate = 0.0;       // gamma * ||lambda||_1
  std::vector<double> inv_mfpt;         // per stage rho * sum p_i/m_i
  bool constraint_ok = true;
};

Eigen::MatrixXd effective_risk_metric(const MpcConfig& cfg, long k) {
  if (cfg.risk_metric.rows() == k && cfg.risk_metric.cols() == k)
    return cfg.risk_metric;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
  for (int h : cfg.hazard_modes)
    if (h >= 0 && h < k) w(h, h) = 1.0;
  return w;
}

RiskTerms evaluate_risk(const Eigen::VectorXd& p0, const Eigen::MatrixXd& l,
                        const Vec3& lambda_forecast, const MpcConfig& cfg) {
  RiskTerms out;
  const long k = p0.size();
  const Eigen::MatrixXd w = effective_risk_metric(cfg, k);
  const Eigen::MatrixXd step = expm(l * cfg.dt);

  Eigen::VectorXd mfpt_by_mode =
      Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  if (cfg.inv_mfpt_weight > 0.0 && !cfg.hazard_modes.empty() &&
      static_cast<long>(cfg.hazard_modes.size()) < k) {
    try {
      const MfptResult res = mfpt(l, cfg.hazard_modes);
      for (std::size_t i = 0; i < res.transient_modes.size(); ++i)
        mfpt_by_mode[res.transient_modes[i]] = res.hitting_time[static_cast<long>(i)];
    } catch (const UnreachableHazardError&) {
      // hazard unreachable: the inverse-MFPT term contributes nothing
    }
  }

  Eigen::VectorXd p = p0;
  for (int stage = 0; stage <= cfg.horizon; ++stage) {
    out.p_path.push_back(p);
    if (p.dot(w * p) > cfg.risk_max + 1e-9) out.constraint_ok = false;
    if (stage < cfg.horizon) {
      double inv = 0.0;
      for (long j = 0; j < k; ++j)
        if (std::isfinite(mfpt_by_mode[j]) && mfpt_by_mode[j] > 0.0)
          inv += p[j] / mfpt_by_mode[j];
      out.inv_mfpt.push_back(cfg.inv_mfpt_weight * inv);
      p = step * p;
      const double sum = p.sum();
      if (sum > 0.0) p /= sum;
    }
  }
  out.per_stage_costate = cfg.costate_weight * lambda_forecast.lpNorm<1>();
  return out;
}

struct Rollout {
  std::vector<Vec6> states;  // x_1 .. x_N
  double tracking_cost = 0.0;
};

Rollout roll(const StateVector& x0, const Eigen::Matrix<double, 3, Eigen::Dynamic>& u,
             const Vec3& lambda_forecast, const MpcConfig& cfg) {
  // Projected dynamics with the measurement geometry frozen at x0 and a
  // zero-order-hold co-state forecast: the correction drift is constant over
  // the horizon and the rollout is linear in the controls.
  const Mat36 h = eval_jacobian(x0);
  const Vec6 correction = h.transpose() * lambda_forecast * cfg.dt;

  Rollout out;
  Vec6 x = x0.vec();
  for (int k = 0; k < cfg.horizon; ++k) {
    Vec6 next;
    next.head<3>() = x.head<3>() + x.tail<3>() * cfg.dt;
    next.tail<3>() = x.tail<3>() + u.col(k) * cfg.dt;
    next += correction;
    const Vec6 err = next - cfg.x_ref;
    out.tracking_cost += err.dot(cfg.state_weight.cwiseProduct(err)) +
                         u.col(k).dot(cfg.control_weight.cwiseProduct(u.col(k)));
    out.states.push_back(next);
    x = next;
  }
  return out;
}

}  // namespace

double mpc_cost(const StateVector& x0, const Eigen::Matrix<double, 3, Eigen::Dynamic>& u,
                const Eigen::VectorXd& p0, const Eigen::MatrixXd& l,
                const Vec3& lambda_forecast, const MpcConfig& cfg) {
  if (u.cols() != cfg.horizon) throw InvalidConfigError("control sequence length mismatch");
  const Rollout r = roll(x0, u, lambda_forecast, cfg);
  const RiskTerms risk = evaluate_risk(p0, l, lambda_forecast, cfg);
  double cost = r.tracking_cost;
  for (int k = 0; k < cfg.horizon; ++k)
    cost += risk.per_stage_costate + risk.inv_mfpt[static_cast<std::size_t>(k)];
  return cost;
}

MpcSolution solve_mpc(const StateVector& x0, const Eigen::VectorXd& p0,
                      const Eigen::MatrixXd& l, const Vec3& lambda_forecast,
                      const MpcConfig& cfg) {
  cfg.validate();
  if (!is_valid_generator(l, 1e-6))
    throw InvalidConfigError("mode-probability generator is not valid");
  if (std::abs(p0.sum() - 1.0) > 1e-9 || p0.minCoeff() < -1e-12)
    throw InvalidPriorError("mode probabilities must lie on the simplex");

  MpcSolution sol;
  sol.controls = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, cfg.horizon);

  const RiskTerms risk = evaluate_risk(p0, l, lambda_forecast, cfg);
  if (!risk.constraint_ok) {
    for (int k = 0; k < cfg.horizon; ++k) {
      sol.controls(0, k) = std::clamp(0.0, cfg.control_lo.x(), cfg.control_hi.x());
      sol.controls(1, k) = std::clamp(0.0, cfg.control_lo.y(), cfg.control_hi.y());
      sol.controls(2, k) = cfg.control_hi.z();  // max braking
    }
    sol.infeasible_fallback = true;
    sol.cost = mpc_cost(x0, sol.controls, p0, l, lambda_forecast, cfg);
    return sol;
  }

  double risk_constant = 0.0;
  for (int k = 0; k < cfg.horizon; ++k)
    risk_constant += risk.per_stage_costate + risk.inv_mfpt[static_cast<std::size_t>(k)];

  auto clamp_controls = [&](Eigen::Matrix<double, 3, Eigen::Dynamic>& u) {
    for (int k = 0; k < cfg.horizon; ++k)
      for (int i = 0; i < 3; ++i)
        u(i, k) = std::clamp(u(i, k), cfg.control_lo[i], cfg.control_hi[i]);
  };

  auto gradient = [&](const Eigen::Matrix<double, 3, Eigen::Dynamic>& u) {
    const Rollout r = roll(x0, u, lambda_forecast, cfg);
    Eigen::Matrix<double, 3, Eigen::Dynamic> g(3, cfg.horizon);
    Vec6 adjoint = Vec6::Zero();
    for (int k = cfg.horizon - 1; k >= 0; --k) {
      const Vec6 err = r.states[static_cast<std::size_t>(k)] - cfg.x_ref;
      const Vec6 dx = 2.0 * cfg.state_weight.cwiseProduct(err) + adjoint;
      g.col(k) = 2.0 * cfg.control_weight.cwiseProduct(u.col(k)) + cfg.dt * dx.tail<3>();
      // propagate through x_{k+1} = A x_k + ...
      Vec6 prev = dx;
      prev.tail<3>() += cfg.dt * dx.head<3>();
      adjoint = prev;
    }
    return g;
  };

  double cost = roll(x0, sol.controls, lambda_forecast, cfg).tracking_cost + risk_constant;
  sol.cost_trace.push_back(cost);
  double step = cfg.initial_step;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::Matrix<double, 3, Eigen::Dynamic> g = gradient(sol.controls);
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      Eigen::Matrix<double, 3, Eigen::Dynamic> trial = sol.controls - step * g;
      clamp_controls(trial);
      const double trial_cost =
          roll(x0, trial, lambda_forecast, cfg).tracking_cost + risk_constant;
      if (trial_cost < cost - 1e-15) {
        sol.controls = trial;
        cost = trial_cost;
        sol.cost_trace.push_back(cost);
        step *= 1.2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  sol.cost = cost;
  return sol;
}

}  // namespace csfusion
