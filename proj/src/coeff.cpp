#include "stokeshom/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace shom {

CoefficientSet CoefficientSet::parse(const std::string& a11, const std::string& a12,
                                     const std::string& a22, const std::string& theta,
                                     const std::string& f1, const std::string& f2, double alpha,
                                     double alpha0) {
  CoefficientSet c;
  c.a11 = parse_expr(a11);
  c.a12 = parse_expr(a12);
  c.a22 = parse_expr(a22);
  c.theta = parse_expr(theta);
  c.f = {parse_expr(f1), parse_expr(f2)};
  c.alpha = alpha;
  c.alpha0 = alpha0;
  return c;
}

CoefficientSet CoefficientSet::identity() {
  return parse("1", "0", "1", "1", "1", "0", 1.0, 1.0);
}

CoefficientSet CoefficientSet::laminate() {
  return parse("2+sin(2*pi*y1)", "0", "2", "1", "1", "0", 1.0, 1.0);
}

CoefficientSet CoefficientSet::checkerboard_smooth() {
  return parse("2+cos(2*pi*y1)*cos(2*pi*y2)", "0", "2", "1", "1", "0", 1.0, 1.0);
}

namespace {

double min_eig_2x2(const Eigen::Matrix2d& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

// uniform double in [0,1) from raw mt19937_64 bits; avoids the
// implementation-defined std::uniform_real_distribution
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

HypothesesReport check_hypotheses(const CoefficientSet& c, int grid, int random_points,
                                  unsigned long seed) {
  HypothesesReport r;
  r.min_eigenvalue = 1e300;
  r.min_theta = 1e300;
  r.max_periodicity_defect = 0.0;

  auto visit = [&](double y1, double y2) {
    r.min_eigenvalue = std::min(r.min_eigenvalue, min_eig_2x2(c.a_at(y1, y2)));
    r.min_theta = std::min(r.min_theta, c.theta_at(y1, y2));
  };

  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      visit(-0.5 + static_cast<double>(i) / grid, -0.5 + static_cast<double>(j) / grid);
    }
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < random_points; ++i) {
    visit(unit_uniform(rng) - 0.5, unit_uniform(rng) - 0.5);
  }

  // periodicity defect over boundary samples, for every stored expression
  const ExprPtr exprs[] = {c.a11, c.a12, c.a22, c.theta, c.f[0], c.f[1]};
  for (const auto& g : exprs) {
    for (int i = 0; i <= grid; ++i) {
      const double t = -0.5 + static_cast<double>(i) / grid;
      const double dx = std::abs(g->eval_y(0.5, t) - g->eval_y(-0.5, t));
      const double dy = std::abs(g->eval_y(t, 0.5) - g->eval_y(t, -0.5));
      r.max_periodicity_defect = std::max({r.max_periodicity_defect, dx, dy});
    }
  }

  const double tol = 1e-12 * std::max(1.0, std::abs(c.alpha));
  r.ellipticity_ok = r.min_eigenvalue >= c.alpha - tol;
  r.theta_ok = r.min_theta >= c.alpha0 - tol;
  r.periodicity_ok = r.max_periodicity_defect <= 1e-9;
  return r;
}

}  // namespace shom
