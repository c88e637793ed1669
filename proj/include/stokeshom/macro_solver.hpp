#pragma once

#include "stokeshom/cell_problem.hpp"

namespace shom {

// Homogenized problem on the unperforated domain: the constant tensor
// contraction plus the absorption mass, divergence-constrained.
struct MacroSolution {
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const DofSpace> space;
  Eigen::VectorXd u, p;
  EffectiveTensor tensor;
  double residual = 0.0;
};

MacroSolution solve_macro(const EffectiveTensor& tensor, const MacroDomain& domain, double h);

// verification mode with a general forcing field
MacroSolution solve_macro_forced(const EffectiveTensor& tensor, const MacroDomain& domain,
                                 double h, const std::function<Vec2d(const Vec2d&)>& f);

// Manufactured solution u = curl(sin^2(pi x1) sin^2(pi x2)),
// p = sin(2 pi x1) sin(2 pi x2); the forcing applies the homogenized operator
// to the exact fields with hand-coded derivatives.
struct ManufacturedSolution {
  std::function<Vec2d(const Vec2d&)> velocity;
  std::function<Eigen::Matrix2d(const Vec2d&)> velocity_grad;  // (c,j) = du_c/dx_j
  std::function<double(const Vec2d&)> pressure;
  std::function<Vec2d(const Vec2d&)> forcing;
};

ManufacturedSolution mms_forcing(const EffectiveTensor& tensor);

// convenience: identity tensor with a chosen absorption coefficient
EffectiveTensor identity_tensor(double theta_tilde = 0.0, const Vec2d& f_tilde = Vec2d(0, 0));

}  // namespace shom
