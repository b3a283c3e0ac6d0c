#include <cmath>

#include "csfusion/errors.hpp"
#include "csfusion/generator.hpp"
#include "csfusion/measurement_model.hpp"
#include "csfusion/mpc.hpp"
#include "doctest.h"

using namespace csfusion;

namespace {

Eigen::MatrixXd demo_generator() {
  Eigen::MatrixXd l(3, 3);
  l << -0.05, 0.20, 0.00,  //
      0.05, -0.22, 0.10,   //
      0.00, 0.02, -0.10;
  return l;
}

MpcConfig demo_config() {
  MpcConfig cfg;
  cfg.horizon = 3;
  cfg.dt = 0.5;
  cfg.x_ref << 0.0, 0.0, 900.0, 0.0, 0.0, -10.0;
  cfg.hazard_modes = {2};
  cfg.control_lo = Vec3::Constant(-3.0);
  cfg.control_hi = Vec3::Constant(3.0);
  return cfg;
}

}  // namespace

TEST_SUITE("mpc") {

TEST_CASE("one-step unconstrained solve matches least squares") {
  MpcConfig cfg = demo_config();
  cfg.horizon = 1;
  cfg.costate_weight = 0.0;
  cfg.inv_mfpt_weight = 0.0;
  cfg.control_lo = Vec3::Constant(-1e9);
  cfg.control_hi = Vec3::Constant(1e9);
  cfg.max_iters = 2000;

  const StateVector x0{{100.0, -50.0, 1000.0}, {2.0, 1.0, -12.0}};
  const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const Vec3 lambda(0.01, -0.02, 0.03);
  const MpcSolution sol = solve_mpc(x0, p0, demo_generator(), lambda, cfg);

  // Closed form: x1 = A x0 + B u + c, J = ||x1 - ref||_Q^2 + ||u||_R^2.
  const Mat36 h = eval_jacobian(x0);
  Vec6 c = h.transpose() * lambda * cfg.dt;
  Vec6 free;  // A x0 + c
  free.head<3>() = x0.p + cfg.dt * x0.v;
  free.tail<3>() = x0.v;
  free += c;
  Eigen::Matrix<double, 6, 3> b = Eigen::Matrix<double, 6, 3>::Zero();
  b.bottomRows<3>() = cfg.dt * Mat3::Identity();
  const Mat6 q = cfg.state_weight.asDiagonal();
  const Mat3 lhs = b.transpose() * q * b + Mat3(cfg.control_weight.asDiagonal());
  const Vec3 rhs = -b.transpose() * q * (free - cfg.x_ref);
  const Vec3 u_star = lhs.ldlt().solve(rhs);

  CHECK((sol.controls.col(0) - u_star).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("a zero co-state forecast makes the penalty inert") {
  MpcConfig cfg = demo_config();
  const StateVector x0{{50.0, 20.0, 950.0}, {0.0, 0.0, -11.0}};
  const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);

  cfg.costate_weight = 0.0;
  const MpcSolution base = solve_mpc(x0, p0, demo_generator(), Vec3::Zero(), cfg);
  cfg.costate_weight = 25.0;
  const MpcSolution penalized =
      solve_mpc(x0, p0, demo_generator(), Vec3::Zero(), cfg);
  CHECK((base.controls - penalized.controls).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(base.cost == doctest::Approx(penalized.cost));
}

TEST_CASE("projected gradient cost is monotone and beats a coarse grid") {
  MpcConfig cfg = demo_config();
  cfg.horizon = 2;  // 5^6 grid candidates
  cfg.costate_weight = 0.4;
  cfg.inv_mfpt_weight = 1.0;
  const StateVector x0{{80.0, -40.0, 1020.0}, {1.5, -0.5, -13.0}};
  Eigen::VectorXd p0(3);
  p0 << 0.6, 0.3, 0.1;
  const Vec3 lambda(0.05, 0.01, -0.04);
  const Eigen::MatrixXd l = demo_generator();

  const MpcSolution sol = solve_mpc(x0, p0, l, lambda, cfg);
  for (std::size_t i = 1; i < sol.cost_trace.size(); ++i)
    CHECK(sol.cost_trace[i] <= sol.cost_trace[i - 1] + 1e-12);

  double best = std::numeric_limits<double>::infinity();
  const int levels = 5;
  auto level = [&](int idx) {
    return cfg.control_lo.x() +
           (cfg.control_hi.x() - cfg.control_lo.x()) * idx / (levels - 1.0);
  };
  const int n = cfg.horizon * 3;
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  Eigen::Matrix<double, 3, Eigen::Dynamic> u(3, cfg.horizon);
  while (true) {
    for (int i = 0; i < n; ++i)
      u(i % 3, i / 3) = level(digits[static_cast<std::size_t>(i)]);
    best = std::min(best, mpc_cost(x0, u, p0, l, lambda, cfg));
    int carry = 0;
    while (carry < n && ++digits[static_cast<std::size_t>(carry)] == levels) {
      digits[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == n) break;
  }
  CHECK(sol.cost <= best * 1.05);
}

TEST_CASE("risk constraint violations fall back to maximum braking") {
  MpcConfig cfg = demo_config();
  cfg.risk_max = 0.05;  // p^T W p with W the hazard indicator
  Eigen::VectorXd risky(3);
  risky << 0.2, 0.3, 0.5;  // hazard mass 0.5 -> p^T W p = 0.25 > 0.05
  const StateVector x0{{0.0, 0.0, 1000.0}, {0.0, 0.0, -12.0}};
  const MpcSolution sol =
      solve_mpc(x0, risky, demo_generator(), Vec3::Zero(), cfg);
  CHECK(sol.infeasible_fallback);
  for (int k = 0; k < cfg.horizon; ++k)
    CHECK(sol.controls(2, k) == cfg.control_hi.z());
}

TEST_CASE("feasible solutions respect the risk bound along the horizon") {
  MpcConfig cfg = demo_config();
  cfg.risk_max = 0.2;
  Eigen::VectorXd p0(3);
  p0 << 0.7, 0.25, 0.05;
  const Eigen::MatrixXd l = demo_generator();
  const StateVector x0{{10.0, 5.0, 990.0}, {0.0, 0.0, -10.0}};
  const MpcSolution sol = solve_mpc(x0, p0, l, Vec3::Zero(), cfg);
  CHECK(!sol.infeasible_fallback);
  Eigen::VectorXd p = p0;
  const Eigen::MatrixXd w = [&] {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(2, 2) = 1.0;
    return m;
  }();
  const Eigen::MatrixXd step = expm(l * cfg.dt);
  for (int k = 0; k <= cfg.horizon; ++k) {
    CHECK(p.dot(w * p) <= cfg.risk_max + 1e-9);
    p = step * p;
    p /= p.sum();
  }
}

TEST_CASE("raising the hazard-proximity weight never lowers the terminal horizon time") {
  MpcConfig cfg = demo_config();
  const StateVector x0{{30.0, -20.0, 1010.0}, {1.0, 0.5, -11.0}};
  Eigen::VectorXd p0(3);
  p0 << 0.5, 0.35, 0.15;
  const Eigen::MatrixXd l = demo_generator();

  double prev_mfpt = -1.0;
  for (double rho : {0.0, 1.0, 10.0}) {
    cfg.inv_mfpt_weight = rho;
    const MpcSolution sol = solve_mpc(x0, p0, l, Vec3::Zero(), cfg);
    CHECK(!sol.infeasible_fallback);
    // Terminal mode distribution under the fitted plan.
    Eigen::VectorXd p = p0;
    const Eigen::MatrixXd step = expm(l * cfg.dt);
    for (int k = 0; k < cfg.horizon; ++k) {
      p = step * p;
      p /= p.sum();
    }
    const MfptResult m = mfpt(l, cfg.hazard_modes);
    double weighted = 0.0;
    for (std::size_t i = 0; i < m.transient_modes.size(); ++i)
      weighted += p[m.transient_modes[i]] * m.hitting_time[static_cast<long>(i)];
    if (prev_mfpt >= 0.0) CHECK(weighted >= prev_mfpt - 1e-12);
    prev_mfpt = weighted;
  }
}

TEST_CASE("configuration validation") {
  MpcConfig cfg = demo_config();
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfigError);
  cfg = demo_config();
  cfg.risk_max = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfigError);

  const StateVector x0{{0.0, 0.0, 1000.0}, {0.0, 0.0, -10.0}};
  Eigen::VectorXd bad(3);
  bad << 0.5, 0.2, 0.2;  // not a distribution
  CHECK_THROWS_AS(
      solve_mpc(x0, bad, demo_generator(), Vec3::Zero(), demo_config()),
      InvalidPriorError);
}

}  // TEST_SUITE
