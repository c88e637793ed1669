#include <cmath>
#include <sstream>

#include "doctest.h"
#include "stokeshom/twoscale.hpp"

using namespace shom;

namespace {
const MacroDomain kUnit{1.0, 1.0};
const CellGeometry kSquare = CellGeometry::square(0.25);
}

TEST_CASE("volume pairing of oscillation against matched and constant tests") {
  auto field = [](const Vec2d& x) { return std::cos(2 * M_PI * x.x() / 0.03125); };
  const double matched =
      volume_pairing(kUnit, field, TwoScaleTest::separable("1", "cos(2*pi*y1)"), 0.03125);
  CHECK(std::abs(matched - 0.5) < 0.01);
  const double plain = volume_pairing(kUnit, field, TwoScaleTest::one(), 0.03125);
  CHECK(std::abs(plain) < 0.02);
}

TEST_CASE("volume pairing of pure x tests is eps independent and exact") {
  auto one = [](const Vec2d&) { return 1.0; };
  const TwoScaleTest g = TwoScaleTest::separable("x1*x2", "1");
  for (double eps : {0.25, 0.125, 0.0625}) {
    CHECK(std::abs(volume_pairing(kUnit, one, g, eps) - 0.25) < 1e-12);
  }
}

TEST_CASE("oscillatory volume pairings vanish toward zero across the sweep") {
  // exact values are 0 at every eps = 2^-m; computed values sit at quadrature
  // noise, so assert a decreasing-or-floor pattern
  double prev = 1e300;
  for (double eps : {0.25, 0.125, 0.0625}) {
    auto field = [eps](const Vec2d& x) { return std::cos(2 * M_PI * x.x() / eps); };
    const double v = std::abs(volume_pairing(kUnit, field, TwoScaleTest::one(), eps));
    CHECK(v < 1e-4);
    CHECK((v <= prev || v < 1e-9));
    prev = std::max(v, 1e-9);
  }
}

TEST_CASE("two-scale limit pairing reproduces the analytic double integral") {
  auto u0 = [](const Vec2d&, const Vec2d& y) { return std::cos(2 * M_PI * y.x()); };
  const double lim =
      limit_volume_pairing(kUnit, u0, TwoScaleTest::separable("1", "cos(2*pi*y1)"));
  CHECK(std::abs(lim - 0.5) < 1e-6);
}

TEST_CASE("surface pairing counts the lattice boundary exactly") {
  for (double eps : {0.25, 0.125}) {
    auto mesh = mesh_perforated(kUnit, kSquare, eps, eps / 4);
    auto one = [](const Vec2d&) { return 1.0; };
    const double v = surface_pairing(mesh, one, TwoScaleTest::one(), eps);
    const double exact = 2.0 * (1 - eps) * (1 - eps);
    CHECK(std::abs(v - exact) < 1e-10);
  }
}

TEST_CASE("surface limit matches closed forms") {
  auto one2 = [](const Vec2d&, const Vec2d&) { return 1.0; };
  CHECK(std::abs(surface_limit(kUnit, kSquare, one2, TwoScaleTest::one()) - 2.0) < 1e-9);
  const double lim =
      surface_limit(kUnit, kSquare, one2, TwoScaleTest::separable("1", "2+cos(2*pi*y1)"));
  CHECK(std::abs(lim - (4.0 + 2.0 / M_PI)) < 1e-8);
  auto zero = [](const Vec2d&, const Vec2d&) { return 0.0; };
  CHECK(surface_limit(kUnit, kSquare, zero, TwoScaleTest::one()) == 0.0);
}

TEST_CASE("lemma 2.3 style bound holds across the sweep") {
  const TwoScaleTest psi = TwoScaleTest::separable("sin(pi*x1)", "2+cos(2*pi*y1)");
  const double psi_sup = 3.0;  // sup |psi|
  const double c0 = (2.0 + 4.0) * 1.0;  // (|dT| + 4) |Omega|
  for (double eps : {0.25, 0.125, 0.0625}) {
    auto mesh = mesh_perforated(kUnit, kSquare, eps, eps / 4);
    auto sq = [&psi, eps](const Vec2d& x) {
      const double v = psi.eval(x, x / eps);
      return v * v;
    };
    // p = 2 and additionally p = 1 through |psi|
    const double v2 = surface_pairing(mesh, sq, TwoScaleTest::one(), eps);
    CHECK(v2 <= c0 * psi_sup * psi_sup);
    auto av = [&psi, eps](const Vec2d& x) { return std::abs(psi.eval(x, x / eps)); };
    const double v1 = surface_pairing(mesh, av, TwoScaleTest::one(), eps);
    CHECK(v1 <= c0 * psi_sup);
  }
}

TEST_CASE("corrector field is the identity when the cell has no obstacle") {
  auto coeffs = CoefficientSet::identity();
  auto cell = solve_cell_problems(CellGeometry::none(), coeffs, 0.125);
  auto tensor = effective_tensor(cell, coeffs);
  auto mms = mms_forcing(tensor);
  auto macro = solve_macro_forced(tensor, kUnit, 1.0 / 16, mms.forcing);
  CorrectorField corr(macro, cell, 0.125);
  for (double x : {0.21, 0.53, 0.84}) {
    for (double y : {0.11, 0.62, 0.93}) {
      const Vec2d p(x, y);
      Vec2d val;
      Eigen::Matrix2d grad;
      corr.value_grad(p, val, grad);
      CHECK((val - corr.u0(p)).norm() < 1e-9);
      CHECK((grad - corr.grad_u0(p)).norm() < 1e-7);
    }
  }
}

TEST_CASE("two-scale residual vanishes for zero data") {
  auto coeffs = CoefficientSet::identity();
  auto cell = solve_cell_problems(kSquare, coeffs, 0.1);
  auto macro = solve_macro(identity_tensor(1.0, Vec2d(0, 0)), kUnit, 0.125);
  std::mt19937_64 rng(5);
  auto pair = seeded_test_pair(rng);
  const double r =
      two_scale_residual(macro, cell, coeffs, pair, [](const Vec2d&) { return Vec2d(0, 0); });
  CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("pipeline two-scale residual sits within the discretization budget") {
  auto coeffs = CoefficientSet::identity();
  auto cell = solve_cell_problems(kSquare, coeffs, 0.08);
  auto tensor = effective_tensor(cell, coeffs);
  auto f = [](const Vec2d& x) { return Vec2d(1.5 * std::sin(M_PI * x.y()), 0.0); };
  auto macro = solve_macro_forced(tensor, kUnit, 1.0 / 16, f);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 5; ++i) {
    auto pair = seeded_test_pair(rng);
    CHECK(std::abs(two_scale_residual(macro, cell, coeffs, pair, f)) <
          10.0 * (1.0 / 256 + 0.08 * 0.08));
  }
}

TEST_CASE("coupled form is symmetric") {
  auto coeffs = CoefficientSet::laminate();
  auto cell = solve_cell_problems(kSquare, coeffs, 0.1);
  auto tensor = effective_tensor(cell, coeffs);
  auto fa = [](const Vec2d& x) { return Vec2d(std::sin(M_PI * x.y()), 0.0); };
  auto fb = [](const Vec2d& x) { return Vec2d(0.0, std::cos(M_PI * x.x())); };
  auto ma = solve_macro_forced(tensor, kUnit, 1.0 / 16, fa);
  auto mb = solve_macro_forced(tensor, kUnit, 1.0 / 16, fb);
  const double ab = two_scale_form(ma, mb, cell, coeffs);
  const double ba = two_scale_form(mb, ma, cell, coeffs);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
}

TEST_CASE("sweep smoke test with csv round trip") {
  SweepConfig cfg;
  cfg.cell = kSquare;
  cfg.coeffs = CoefficientSet::parse("1", "0", "1", "1", "2+sin(2*pi*y2)", "0", 1.0, 1.0);
  cfg.h_cell = 0.1;
  cfg.h_macro = 1.0 / 8;
  cfg.h_micro_factor = 0.25;
  cfg.eps_values = {0.25, 0.125};
  cfg.threads = 1;
  auto rep = convergence_sweep(cfg);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].holes == 9);
  CHECK(rep.rows[1].holes == 49);
  CHECK(rep.rows[0].fluid_area ==
        doctest::Approx(1.0 - (1 - 0.25) * (1 - 0.25) / 4).epsilon(1e-14));
  CHECK(rep.rows[1].l2_vel_err < rep.rows[0].l2_vel_err);
  for (const auto& r : rep.rows) {
    CHECK(std::isfinite(r.grad_norm));
    CHECK(std::isfinite(r.pair_phi1));
  }
  std::ostringstream os;
  write_report_csv(rep, os, "check");
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "epsilon,holes,fluid_area,l2_vel_err,h1_corrector_err,grad_norm,surf_norm,"
        "pressure_norm,pair_phi1,pair_phi2");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.rfind("#", 0) == 0) continue;
    ++rows;
  }
  CHECK(rows == 2);
}
