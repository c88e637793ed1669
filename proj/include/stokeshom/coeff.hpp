#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

#include "stokeshom/expr.hpp"

namespace shom {

// Y-periodic data of the oscillating operator: symmetric viscosity matrix
// a_ij(y), boundary coefficient theta(y) >= alpha0, and forcing f(y).
// Only the upper triangle of a is stored; a21 mirrors a12 structurally.
struct CoefficientSet {
  ExprPtr a11, a12, a22;
  ExprPtr theta;
  std::array<ExprPtr, 2> f;
  double alpha = 1.0;    // asserted ellipticity constant
  double alpha0 = 1.0;   // asserted lower bound of theta

  Eigen::Matrix2d a_at(double y1, double y2) const {
    Eigen::Matrix2d m;
    const double off = a12->eval_y(y1, y2);
    m << a11->eval_y(y1, y2), off, off, a22->eval_y(y1, y2);
    return m;
  }
  double theta_at(double y1, double y2) const { return theta->eval_y(y1, y2); }
  Eigen::Vector2d f_at(double y1, double y2) const {
    return {f[0]->eval_y(y1, y2), f[1]->eval_y(y1, y2)};
  }

  static CoefficientSet identity();
  static CoefficientSet laminate();             // a11 = 2+sin(2*pi*y1)
  static CoefficientSet checkerboard_smooth();  // a11 = 2+cos(2*pi*y1)*cos(2*pi*y2)
  static CoefficientSet parse(const std::string& a11, const std::string& a12,
                              const std::string& a22, const std::string& theta,
                              const std::string& f1, const std::string& f2, double alpha,
                              double alpha0);
};

struct HypothesesReport {
  double min_eigenvalue = 0.0;    // over the sample set
  double min_theta = 0.0;
  double max_periodicity_defect = 0.0;
  bool ellipticity_ok = false;
  bool theta_ok = false;
  bool periodicity_ok = false;
  bool pass() const { return ellipticity_ok && theta_ok && periodicity_ok; }
};

// Samples a uniform grid on Y plus random points; the periodicity defect is
// max |g(y+e_i) - g(y)| over boundary samples for every stored expression.
HypothesesReport check_hypotheses(const CoefficientSet& c, int grid = 64,
                                  int random_points = 1000, unsigned long seed = 1234);

}  // namespace shom
