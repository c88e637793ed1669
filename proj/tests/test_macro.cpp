#include <cmath>

#include "doctest.h"
#include "stokeshom/macro_solver.hpp"

using namespace shom;

namespace {
const MacroDomain kUnit{1.0, 1.0};
}

TEST_CASE("manufactured solution family is consistent") {
  auto mms = mms_forcing(identity_tensor(0.0));
  // divergence-free by the curl construction, zero trace on the boundary
  for (double x : {0.1, 0.3, 0.7}) {
    for (double y : {0.2, 0.5, 0.9}) {
      const Eigen::Matrix2d g = mms.velocity_grad(Vec2d(x, y));
      CHECK(std::abs(g(0, 0) + g(1, 1)) < 1e-12);
      // finite-difference cross check of the gradient
      const double d = 1e-6;
      const Vec2d fx =
          (mms.velocity(Vec2d(x + d, y)) - mms.velocity(Vec2d(x - d, y))) / (2 * d);
      CHECK(std::abs(fx[0] - g(0, 0)) < 1e-5);
      CHECK(std::abs(fx[1] - g(1, 0)) < 1e-5);
    }
  }
  for (double t : {0.0, 0.25, 0.8, 1.0}) {
    CHECK(mms.velocity(Vec2d(t, 0.0)).norm() < 1e-14);
    CHECK(mms.velocity(Vec2d(0.0, t)).norm() < 1e-14);
    CHECK(mms.velocity(Vec2d(t, 1.0)).norm() < 1e-14);
  }
  // with q = identity and theta = 0 the forcing reduces to -laplace(u) + grad p
  const Vec2d x0(0.37, 0.61);
  auto lap = [&](int c) {
    const double d = 1e-4;
    return (mms.velocity(x0 + Vec2d(d, 0))[c] + mms.velocity(x0 - Vec2d(d, 0))[c] +
            mms.velocity(x0 + Vec2d(0, d))[c] + mms.velocity(x0 - Vec2d(0, d))[c] -
            4 * mms.velocity(x0)[c]) /
           (d * d);
  };
  const double d = 1e-6;
  const Vec2d gradp((mms.pressure(x0 + Vec2d(d, 0)) - mms.pressure(x0 - Vec2d(d, 0))) / (2 * d),
                    (mms.pressure(x0 + Vec2d(0, d)) - mms.pressure(x0 - Vec2d(0, d))) / (2 * d));
  const Vec2d f = mms.forcing(x0);
  CHECK(std::abs(f[0] - (-lap(0) + gradp[0])) < 1e-4);
  CHECK(std::abs(f[1] - (-lap(1) + gradp[1])) < 1e-4);
}

TEST_CASE("zero forcing yields the zero macro solution") {
  auto t = identity_tensor(1.0, Vec2d(0, 0));
  auto sol = solve_macro(t, kUnit, 0.125);
  CHECK(sol.u.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sol.p.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("indefinite tensor is refused") {
  EffectiveTensor bad = identity_tensor(0.0);
  bad.q[0][0][0][0] = -2.0;
  CHECK_THROWS_AS(solve_macro(bad, kUnit, 0.25), SolverError);
}

TEST_CASE("manufactured convergence at taylor-hood rates") {
  for (double theta : {0.0, 1.0}) {
    auto tensor = identity_tensor(theta);
    auto mms = mms_forcing(tensor);
    double l2[2], h1[2];
    int idx = 0;
    for (double h : {1.0 / 32, 1.0 / 64}) {
      auto sol = solve_macro_forced(tensor, kUnit, h, mms.forcing);
      auto n = field_norms(*sol.space, sol.u, &mms.velocity, &mms.velocity_grad);
      l2[idx] = n.l2_err;
      h1[idx] = n.h1_err;
      ++idx;
    }
    const double l2_rate = std::log2(l2[0] / l2[1]);
    const double h1_rate = std::log2(h1[0] / h1[1]);
    CHECK(l2_rate >= 2.7);
    CHECK(h1_rate >= 1.8);
  }
}

TEST_CASE("absorption-dominated bound") {
  auto t = identity_tensor(1e6, Vec2d(0.75, 0.0));
  auto sol = solve_macro(t, kUnit, 1.0 / 16);
  const double l2 = field_norms(*sol.space, sol.u).l2;
  CHECK(l2 <= 2.0 * 0.75 / 1e6);
  CHECK(l2 > 0.0);
}

TEST_CASE("scaling the data leaves the velocity unchanged and scales the pressure") {
  auto t1 = identity_tensor(1.0, Vec2d(0.75, 0.0));
  EffectiveTensor t2 = t1;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h) t2.q[i][j][k][h] *= 3.0;
  t2.theta_tilde *= 3.0;
  t2.f_tilde *= 3.0;
  auto s1 = solve_macro(t1, kUnit, 0.125);
  auto s2 = solve_macro(t2, kUnit, 0.125);
  CHECK((s1.u - s2.u).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((3.0 * s1.p - s2.p).cwiseAbs().maxCoeff() < 1e-9);
}
