#pragma once

#include "stokeshom/coeff.hpp"
#include "stokeshom/fem.hpp"

namespace shom {

// Discrete solution of the oscillating problem on the perforated domain:
// Dirichlet-zero on the outer boundary, nodewise slip on the holes, the
// divergence constraint through the pressure multiplier.
struct MicroSolution {
  double eps = 0.0;
  MacroDomain domain;
  CellGeometry cell;
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const DofSpace> space;
  Eigen::VectorXd u, p;
  double residual = 0.0;
  std::vector<std::vector<int>> hole_loops;  // node loops per hole id, in order
};

MicroSolution solve_micro(const MacroDomain& domain, const CellGeometry& cell,
                          const CoefficientSet& coeffs, double eps, double h);

// verification mode: x-dependent forcing replaces f(x/eps); robin_holes
// swaps the strong slip constraint for the natural vector Robin condition
// (the boundary mass term alone), under which the homogenized limit is the
// effective macro system
MicroSolution solve_micro_forced(const MacroDomain& domain, const CellGeometry& cell,
                                 const CoefficientSet& coeffs, double eps, double h,
                                 const std::function<Vec2d(const Vec2d&)>& f,
                                 bool robin_holes = false);

// the Prop. 3.1 quantities: gradient L2, eps * boundary trace square, pressure L2
struct AprioriNorms {
  double grad_l2 = 0.0;
  double surf = 0.0;
  double pressure_l2 = 0.0;
};
AprioriNorms apriori_norms(const MicroSolution& sol);

// extension-by-zero of the pressure: p on the fluid, 0 inside holes
double pressure_tilde_at(const MicroSolution& sol, const TriLocator& loc, const Vec2d& x);

// Divergence-free extension of the velocity into each hole: a Stokes-type
// Dirichlet solve on the hole interior with the fluid trace as data. The
// restriction to the fluid is untouched by construction.
struct ExtendedVelocity {
  struct HolePatch {
    int hole_id = -1;
    std::shared_ptr<const TriMesh> mesh;
    std::shared_ptr<const DofSpace> space;
    Eigen::VectorXd u;
    std::vector<int> loop_nodes;  // fluid-mesh node ids of the boundary loop
    double grad_l2 = 0.0;
    double div_norm = 0.0;
  };
  const MicroSolution* base = nullptr;
  std::vector<HolePatch> patches;

  // gradient of the extended field over all of Omega
  double grad_l2_omega(double fluid_grad_l2) const {
    double s = fluid_grad_l2 * fluid_grad_l2;
    for (const auto& p : patches) s += p.grad_l2 * p.grad_l2;
    return std::sqrt(s);
  }
};

ExtendedVelocity extend_into_holes(const MicroSolution& sol);

// extension applied to an arbitrary coefficient vector on the fluid space
// (linearity checks); reuses the patch meshes of a previous extension
Eigen::VectorXd extend_patch(const ExtendedVelocity::HolePatch& patch,
                             const MicroSolution& sol, const Eigen::VectorXd& fluid_u);

}  // namespace shom
