#include <cmath>
#include <random>

#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace csfusion;

TEST_SUITE("measurement_model") {

TEST_CASE("dynamics is the constant-velocity prior") {
  const StateVector d = eval_dynamics({{0.0, 0.0, 100.0}, {0.0, 0.0, -5.0}});
  CHECK(d.p == Vec3(0.0, 0.0, -5.0));
  CHECK(d.v == Vec3::Zero());

  const StateVector rest = eval_dynamics({{1.0, 2.0, 3.0}, Vec3::Zero()});
  CHECK(rest.p == Vec3::Zero());
  CHECK(rest.v == Vec3::Zero());

  const StateVector fast =
      eval_dynamics({{7000.0, 0.0, 2000.0}, {-40.0, 5.0, -60.0}});
  CHECK(fast.p == Vec3(-40.0, 5.0, -60.0));
  CHECK(fast.v == Vec3::Zero());
}

TEST_CASE("dynamics rejects non-finite states") {
  StateVector x;
  x.p = Vec3(0.0, 0.0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(eval_dynamics(x), InvalidStateError);
}

TEST_CASE("measurement map") {
  const Measurement on_axis = eval_h({{0.0, 0.0, 100.0}, {0.0, 0.0, -5.0}});
  CHECK(on_axis.altitude == doctest::Approx(100.0));
  CHECK(on_axis.range == doctest::Approx(100.0));
  CHECK(on_axis.vertical_velocity == doctest::Approx(-5.0));

  const Measurement triple = eval_h({{3.0, 4.0, 0.0}, {1.0, 1.0, 1.0}});
  CHECK(triple.altitude == 0.0);
  CHECK(triple.range == doctest::Approx(5.0));
  CHECK(triple.vertical_velocity == 1.0);

  // Range guard keeps the map defined at the origin.
  const Measurement origin = eval_h({Vec3::Zero(), Vec3::Zero()});
  CHECK(origin.range == kRangeGuard);
}

TEST_CASE("jacobian rows") {
  const Mat36 nadir = eval_jacobian({{0.0, 0.0, 100.0}, Vec3::Zero()});
  CHECK(nadir.row(0) == nadir.row(1));  // nadir geometry degenerates
  CHECK(nadir(1, 2) == doctest::Approx(1.0));

  const Mat36 h = eval_jacobian({{3.0, 4.0, 0.0}, Vec3::Zero()});
  CHECK(h(1, 0) == doctest::Approx(0.6));
  CHECK(h(1, 1) == doctest::Approx(0.8));
  CHECK(h(1, 2) == doctest::Approx(0.0));
  CHECK(h(0, 2) == 1.0);
  CHECK(h(2, 5) == 1.0);

  const Mat36 sym = eval_jacobian({{1.0, 1.0, 1.0}, Vec3::Zero()});
  for (int i = 0; i < 3; ++i)
    CHECK(sym(1, i) == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("jacobian range row has unit norm away from the guard") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const StateVector x = testing::random_state(rng);
    const Mat36 h = eval_jacobian(x);
    CHECK(h.block<1, 3>(1, 0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("predicted increment") {
  const Vec3 radial = predicted_increment({{0.0, 0.0, 100.0}, {0.0, 0.0, -5.0}});
  CHECK(radial == Vec3(-5.0, -5.0, 0.0));

  const Vec3 tangential = predicted_increment({{3.0, 4.0, 0.0}, {-4.0, 3.0, 0.0}});
  CHECK(tangential.isZero(1e-15));

  const Vec3 slant = predicted_increment({{1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}});
  CHECK(slant[0] == doctest::Approx(1.0));
  CHECK(slant[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(slant[2] == 0.0);
}

TEST_CASE("predicted increment equals jacobian applied to the prior") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const StateVector x = testing::random_state(rng);
    const Vec3 eta = predicted_increment(x);
    const Vec3 hf = eval_jacobian(x) * eval_dynamics(x).vec();
    CHECK((eta - hf).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + hf.norm()));
  }
}

TEST_CASE("predicted increment matches the finite-difference limit") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const StateVector x = testing::random_state(rng);
    const Vec3 eta = predicted_increment(x);
    const Vec6 f = eval_dynamics(x).vec();
    double prev_err = -1.0;
    for (double delta : {1e-2, 5e-3, 2.5e-3}) {
      const StateVector moved = StateVector::from_vec(x.vec() + delta * f);
      const Vec3 fd = (eval_h(moved).vec() - eval_h(x).vec()) / delta;
      const double err = (fd - eta).norm();
      if (prev_err >= 0.0) CHECK(err <= 0.75 * prev_err);  // first order
      prev_err = err;
    }
  }
}

}  // TEST_SUITE
