#include <cmath>
#include <random>

#include "csfusion/costate.hpp"
#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace csfusion;

namespace {

// Extended-precision 3x3 inverse via the adjugate, used as an independent
// route for the factorization-based implementation.
Mat3 adjugate_inverse(const Mat3& m) {
  long double a = m(0, 0), b = m(0, 1), c = m(0, 2);
  long double d = m(1, 0), e = m(1, 1), f = m(1, 2);
  long double g = m(2, 0), h = m(2, 1), i = m(2, 2);
  const long double det =
      a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  Mat3 out;
  out(0, 0) = static_cast<double>((e * i - f * h) / det);
  out(0, 1) = static_cast<double>((c * h - b * i) / det);
  out(0, 2) = static_cast<double>((b * f - c * e) / det);
  out(1, 0) = static_cast<double>((f * g - d * i) / det);
  out(1, 1) = static_cast<double>((a * i - c * g) / det);
  out(1, 2) = static_cast<double>((c * d - a * f) / det);
  out(2, 0) = static_cast<double>((d * h - e * g) / det);
  out(2, 1) = static_cast<double>((b * g - a * h) / det);
  out(2, 2) = static_cast<double>((a * e - b * d) / det);
  return out;
}

Mat36 orthonormal_rows() {
  Mat36 h = Mat36::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = 1.0;
  return h;
}

}  // namespace

TEST_SUITE("costate") {

TEST_CASE("regularized gram inverse") {
  const Mat3 scaled = regularized_gram_inverse(orthonormal_rows(), 0.5);
  CHECK((scaled - Mat3::Identity() / 1.5).norm() < 1e-14);

  const Mat3 degenerate = regularized_gram_inverse(Mat36::Zero(), 1.0);
  CHECK((degenerate - Mat3::Identity()).norm() < 1e-14);

  const Mat36 h = eval_jacobian({{3.0, 4.0, 0.0}, Vec3::Zero()});
  const Mat3 g = h * h.transpose() + 1e-8 * Mat3::Identity();
  const Mat3 inv = regularized_gram_inverse(h, 1e-8);
  CHECK((inv - adjugate_inverse(g)).cwiseAbs().maxCoeff() <
        1e-8 * adjugate_inverse(g).cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(regularized_gram_inverse(h, 0.0), InvalidConfigError);
}

TEST_CASE("costate is zero on consistent increments") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int i = 0; i < 100; ++i) {
    const StateVector x = testing::random_state(rng);
    const Mat36 h = eval_jacobian(x);
    const Vec3 eta = predicted_increment(x);
    const double dt = u(rng);
    const Vec3 sigma_sq(u(rng), u(rng), u(rng));
    const Vec3 lambda = compute_costate(h, sigma_sq, eta * dt, eta, dt, u(rng));
    CHECK(lambda.isZero(0.0));
  }
}

TEST_CASE("identity geometry passes the residual through") {
  const Vec3 lambda = compute_costate(orthonormal_rows(), Vec3::Ones(),
                                      Vec3(0.1, 0.0, 0.0), Vec3::Zero(), 1.0, 0.0);
  CHECK((lambda - Vec3(0.1, 0.0, 0.0)).norm() < 1e-15);
}

TEST_CASE("lander costate against a direct extended-precision solve") {
  const StateVector x{{0.0, 0.0, 2000.0}, {0.0, 0.0, -50.0}};
  const Mat36 h = eval_jacobian(x);
  const Vec3 sigma_sq(4.0, 4.0, 1.0);
  const double dt = 0.1, eps = 1e-6;
  const Vec3 eta = predicted_increment(x);
  const Vec3 dy = eta * dt + Vec3(1.0, 1.0, -0.2);

  const Vec3 lambda = compute_costate(h, sigma_sq, dy, eta, dt, eps);

  const Mat3 g = h * h.transpose() + eps * Mat3::Identity();
  const Vec3 expected =
      adjugate_inverse(g) * Vec3(1.0 / 4.0, 1.0 / 4.0, -0.2) / dt;
  CHECK((lambda - expected).norm() < 1e-8 * expected.norm());
}

TEST_CASE("costate scales inversely with the weighting") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 1.8);
  for (int i = 0; i < 50; ++i) {
    const StateVector x = testing::random_state(rng);
    const Mat36 h = eval_jacobian(x);
    const Vec3 eta = predicted_increment(x);
    const Vec3 sigma_sq(u(rng), u(rng), u(rng));
    const Vec3 dy = eta * 0.1 + Vec3(u(rng), u(rng), u(rng)) * 0.01;
    const Vec3 a = compute_costate(h, sigma_sq, dy, eta, 0.1, 1e-6);
    const Vec3 b = compute_costate(h, 2.0 * sigma_sq, dy, eta, 0.1, 1e-6);
    CHECK((a - 2.0 * b).norm() < 1e-9 * a.norm());
  }
}

TEST_CASE("costate rejects bad intervals") {
  const Mat36 h = orthonormal_rows();
  CHECK_THROWS_AS(
      compute_costate(h, Vec3::Ones(), Vec3::Zero(), Vec3::Zero(), 0.0, 1e-6),
      InvalidIntervalError);
  CHECK_THROWS_AS(
      compute_costate(h, Vec3::Ones(), Vec3::Zero(), Vec3::Zero(), -1.0, 1e-6),
      InvalidIntervalError);
}

TEST_CASE("projected state update") {
  const StateVector x{{100.0, -50.0, 4000.0}, {3.0, 2.0, -40.0}};
  const Mat36 h = eval_jacobian(x);

  SUBCASE("zero multiplier reduces to kinematic propagation") {
    const StateVector next = project_state_update(x, Vec3::Zero(), h, 0.5);
    CHECK((next.p - (x.p + 0.5 * x.v)).norm() < 1e-12);
    CHECK(next.v == x.v);
  }

  SUBCASE("altitude selector moves only the vertical position") {
    const StateVector rest{{0.0, 0.0, 10.0}, Vec3::Zero()};
    Mat36 sel = Mat36::Zero();
    sel(0, 2) = 1.0;
    const StateVector next = project_state_update(rest, Vec3(1.0, 0.0, 0.0), sel, 1.0);
    CHECK(next.p == Vec3(0.0, 0.0, 11.0));
    CHECK(next.v == Vec3::Zero());
  }

  SUBCASE("matches term-by-term assembly") {
    const Vec3 lambda(0.3, -0.2, 0.7);
    const double dt = 0.1;
    const StateVector next = project_state_update(x, lambda, h, dt);
    const Vec6 expected =
        x.vec() + eval_dynamics(x).vec() * dt + h.transpose() * lambda * dt;
    CHECK((next.vec() - expected).norm() < 1e-12);
  }
}

TEST_CASE("whitened innovation magnitude") {
  CHECK(whitened_innovation(Vec3(0.5, -0.1, 0.2), Vec3(5.0, -1.0, 2.0), 0.1,
                            Vec3::Ones()) == doctest::Approx(0.0));
  CHECK(whitened_innovation(Vec3(3.0, 4.0, 0.0), Vec3::Zero(), 1.0,
                            Vec3::Ones()) == doctest::Approx(5.0));
}

TEST_CASE("innovation window and rolling RMS") {
  InnovationWindow window(4);
  CHECK(rolling_rms_sigma(window, 0.1) == Vec3::Constant(0.1 * 0.1));

  window.push(0.0, Vec3::Zero());
  window.push(1.0, Vec3::Zero());
  CHECK(rolling_rms_sigma(window, 0.1) == Vec3::Constant(0.1 * 0.1));

  window.clear();
  for (int i = 0; i < 6; ++i)
    window.push(i, Vec3::Constant(0.5));  // constant innovation
  CHECK(window.size() == 4);              // capacity bound
  CHECK(rolling_rms_sigma(window, 0.1)[0] == doctest::Approx(0.25));
  CHECK(rolling_rms_sigma(window, 0.6)[0] == doctest::Approx(0.36));

  window.clear();
  double sign = 1.0;
  for (int i = 0; i < 4; ++i, sign = -sign)
    window.push(i, Vec3(sign, 0.0, 0.0));
  CHECK(rolling_rms_sigma(window, 0.1)[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(window.push(2.0, Vec3::Zero()), InvalidIntervalError);
}

TEST_CASE("information weighting") {
  const Vec3 uniform = info_weighting(Mat36::Zero(), Mat6::Identity(), 1.0, 2.0);
  CHECK(uniform == Vec3::Ones());

  const Mat36 h = eval_jacobian({{3.0, 4.0, 0.0}, Vec3::Zero()});
  const Vec3 off = info_weighting(h, Mat6::Identity(), 0.0, 1.0);
  CHECK(off == Vec3::Ones());

  // Unit row norms make every channel weight equal.
  const Vec3 w = info_weighting(h, Mat6::Identity(), 1.0, 1.0);
  CHECK((w - Vec3::Ones()).norm() < 1e-12);
}

TEST_CASE("consistency functional") {
  const StateVector x{{200.0, 100.0, 3000.0}, {1.0, -2.0, -30.0}};
  const Mat36 h = eval_jacobian(x);
  const double dt = 0.2;
  const Vec6 f_dt = eval_dynamics(x).vec() * dt;

  CHECK(lyapunov_value(f_dt, f_dt, h, 1e-6) == doctest::Approx(0.0));

  Mat36 ortho = Mat36::Zero();
  ortho(0, 0) = ortho(1, 1) = ortho(2, 2) = 1.0;
  Vec6 dx = Vec6::Zero();
  dx[0] = 1.0;  // e = (1, 0, 0)
  CHECK(lyapunov_value(dx, Vec6::Zero(), ortho, 0.0) == doctest::Approx(0.5));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Vec6 d;
    for (int j = 0; j < 6; ++j) d[j] = u(rng);
    const double eps = 1e-4;
    const double v = lyapunov_value(d, f_dt, h, eps);
    CHECK(v >= 0.0);
    // independent quadratic-form evaluation
    const Vec3 e = h * (d - f_dt);
    const Mat3 g = h * h.transpose() + eps * Mat3::Identity();
    const double expected = 0.5 * e.dot(adjugate_inverse(g) * e);
    CHECK(v == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("regularized projector converges at first order") {
  const Mat36 h = eval_jacobian({{2500.0, -1800.0, 4000.0}, Vec3::Zero()});
  // Unregularized projector through the pseudo-inverse route.
  const Mat3 gram = h * h.transpose();
  const Mat6 p_exact = h.transpose() * gram.llt().solve(Mat3::Identity()) * h;

  CHECK((p_exact * p_exact - p_exact).cwiseAbs().maxCoeff() < 1e-10);

  double prev = -1.0;
  double prev_eps = 0.0;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const Mat6 p_reg = h.transpose() * regularized_gram_inverse(h, eps) * h;
    const double err = (p_reg - p_exact).cwiseAbs().maxCoeff();
    if (prev > 0.0) {
      const double ratio = prev / err;
      const double eps_ratio = prev_eps / eps;
      CHECK(ratio > 0.5 * eps_ratio);
      CHECK(ratio < 2.0 * eps_ratio);
    }
    prev = err;
    prev_eps = eps;
  }
}

TEST_CASE("adaptive regularization scales with conditioning") {
  const Mat36 good = eval_jacobian({{3000.0, -4000.0, 5000.0}, Vec3::Zero()});
  const double eps_good = adaptive_epsilon(good);
  CHECK(eps_good < 1e-6);

  // Nadir geometry duplicates the altitude and range rows.
  const Mat36 bad = eval_jacobian({{0.0, 0.0, 5000.0}, Vec3::Zero()});
  const double eps_bad = adaptive_epsilon(bad);
  CHECK(eps_bad >= 1e-3 * (bad * bad.transpose()).trace() / 3.0);
  CHECK(eps_bad > 100.0 * eps_good);
}

}  // TEST_SUITE
