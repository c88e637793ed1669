#pragma once

#include <memory>

#include "stokeshom/fem.hpp"

namespace shom {

// The four periodic corrector problems on the fluid cell Y*, index (i,k)
// stored at 2*i + k. Velocity components are pinned to zero mean over Y* and
// the pressure multiplier to zero mean, which fixes the additive null
// functions without touching the effective tensor.
struct CellSolution {
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const DofSpace> space;
  CellGeometry cell;
  double h = 0.0;
  std::array<Eigen::VectorXd, 4> chi_u;
  std::array<Eigen::VectorXd, 4> chi_p;
  std::array<double, 4> residuals{};

  const Eigen::VectorXd& chi(int i, int k) const { return chi_u[2 * i + k]; }
};

struct EffectiveTensor {
  double q[2][2][2][2] = {};
  double theta_tilde = 0.0;
  Vec2d f_tilde{0.0, 0.0};
  double cell_h = 0.0;

  // M[(i,k),(j,h)] with row 2*i+k, column 2*j+h
  Eigen::Matrix4d as_matrix() const {
    Eigen::Matrix4d m;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
          for (int h = 0; h < 2; ++h) m(2 * i + k, 2 * j + h) = q[i][j][k][h];
    return m;
  }
};

CellSolution solve_cell_problems(const CellGeometry& cell, const CoefficientSet& coeffs,
                                 double h);

// q_ijkh from the corrector gradients (the defining formula).
void effective_q(const CellSolution& sol, const CoefficientSet& coeffs,
                 double q_out[2][2][2][2]);

// Independent recomputation through the cell energy: q_ijkh as the bilinear
// form of the corrected linear profiles. Agrees with effective_q up to solver
// tolerance and is symmetric under (i,k) <-> (j,h) by construction.
void effective_q_energy(const CellSolution& sol, const CoefficientSet& coeffs,
                        double q_out[2][2][2][2]);

// theta_tilde by edge quadrature on the obstacle polygon, f_tilde by volume
// quadrature over the cell mesh.
double effective_theta(const CoefficientSet& coeffs, const CellGeometry& cell);
Vec2d effective_f(const CoefficientSet& coeffs, const CellSolution& sol);

EffectiveTensor effective_tensor(const CellSolution& sol, const CoefficientSet& coeffs);

// Cell energy of a discrete corrector field (diagnostics and tests).
double cell_energy(const CellSolution& sol, const CoefficientSet& coeffs,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace shom
