#include "stokeshom/cell_problem.hpp"

#include <cmath>

namespace shom {

CellSolution solve_cell_problems(const CellGeometry& cell, const CoefficientSet& coeffs,
                                 double h) {
  CellSolution sol;
  sol.cell = cell;
  sol.h = h;
  sol.mesh = std::make_shared<TriMesh>(mesh_unit_cell(cell, h));
  sol.space = std::make_shared<DofSpace>(build_space(
      *sol.mesh, BcSpec::from_pairs({{"hole", BcType::Natural}, {"periodic", BcType::Periodic}})));

  const DofSpace& sp = *sol.space;
  auto sys = assemble_saddle(sp, coeffs, {CoefficientScaling::Cell});
  SolveOptions opts;
  opts.fix_velocity_constants = true;
  // a natural hole boundary already determines the pressure multiplier; only
  // the obstacle-free periodic cell keeps a constant-pressure nullspace
  opts.fix_pressure_constant = !cell.has_obstacle();
  SaddleFactorization fact(sys, opts);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      auto s = fact.solve(assemble_cell_load(sp, coeffs, i, k));
      sol.chi_u[2 * i + k] = std::move(s.velocity);
      sol.chi_p[2 * i + k] = std::move(s.pressure);
      sol.residuals[2 * i + k] = s.residual;
    }
  }
  return sol;
}

namespace {

struct QuadPoint {
  int tri;
  std::array<double, 3> bary;
  double w;
  Vec2d x;
};

template <class F>
void for_each_quad_point(const TriMesh& mesh, F&& f) {
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[t];
    const Vec2d v0 = mesh.nodes[tr[0]], v1 = mesh.nodes[tr[1]], v2 = mesh.nodes[tr[2]];
    const double area = mesh.triangle_area(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      QuadPoint qp;
      qp.tri = t;
      qp.bary = b;
      qp.w = TriQuadrature::weight[q] * area;
      qp.x = b[0] * v0 + b[1] * v1 + b[2] * v2;
      f(qp);
    }
  }
}

}  // namespace

void effective_q(const CellSolution& sol, const CoefficientSet& coeffs,
                 double q_out[2][2][2][2]) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h) q_out[i][j][k][h] = 0.0;

  const DofSpace& sp = *sol.space;
  for_each_quad_point(*sol.mesh, [&](const QuadPoint& qp) {
    const Eigen::Matrix2d am = coeffs.a_at(qp.x.x(), qp.x.y());
    Eigen::Matrix2d grad[4];
    for (int s = 0; s < 4; ++s) grad[s] = velocity_grad_at(sp, sol.chi_u[s], qp.tri, qp.bary);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          for (int h = 0; h < 2; ++h) {
            double v = (k == h) ? am(i, j) : 0.0;
            const Eigen::Matrix2d& g = grad[2 * j + h];  // chi_{jh}
            for (int l = 0; l < 2; ++l) v -= am(i, l) * g(k, l);
            q_out[i][j][k][h] += qp.w * v;
          }
        }
      }
    }
  });
}

void effective_q_energy(const CellSolution& sol, const CoefficientSet& coeffs,
                        double q_out[2][2][2][2]) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h) q_out[i][j][k][h] = 0.0;

  const DofSpace& sp = *sol.space;
  for_each_quad_point(*sol.mesh, [&](const QuadPoint& qp) {
    const Eigen::Matrix2d am = coeffs.a_at(qp.x.x(), qp.x.y());
    // D^{(ik)}(c,m) = d/dy_m of (y_i e_k - chi_ik)^c
    Eigen::Matrix2d D[4];
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) {
        Eigen::Matrix2d g = velocity_grad_at(sp, sol.chi_u[2 * i + k], qp.tri, qp.bary);
        Eigen::Matrix2d d = -g;
        d(k, i) += 1.0;
        D[2 * i + k] = d;
      }
    }
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
          for (int h = 0; h < 2; ++h) {
            double v = 0.0;
            for (int m = 0; m < 2; ++m)
              for (int l = 0; l < 2; ++l)
                for (int c = 0; c < 2; ++c)
                  v += am(m, l) * D[2 * j + h](c, l) * D[2 * i + k](c, m);
            q_out[i][j][k][h] += qp.w * v;
          }
  });
}

double effective_theta(const CoefficientSet& coeffs, const CellGeometry& cell) {
  if (!cell.has_obstacle()) return 0.0;
  const auto& poly = cell.obstacle;
  const int nv = static_cast<int>(poly.size());
  double total = 0.0;
  for (int e = 0; e < nv; ++e) {
    const Vec2d a = poly[e], b = poly[(e + 1) % nv];
    const double len = (b - a).norm();
    const int nseg = std::max(64, static_cast<int>(std::ceil(len / 0.01)));
    for (int s = 0; s < nseg; ++s) {
      const Vec2d pa = a + (static_cast<double>(s) / nseg) * (b - a);
      const Vec2d pb = a + (static_cast<double>(s + 1) / nseg) * (b - a);
      const double dl = len / nseg;
      for (int q = 0; q < EdgeQuadrature::n; ++q) {
        const double t = EdgeQuadrature::point[q];
        const Vec2d x = pa + t * (pb - pa);
        total += EdgeQuadrature::weight[q] * dl * coeffs.theta_at(x.x(), x.y());
      }
    }
  }
  return total;
}

Vec2d effective_f(const CoefficientSet& coeffs, const CellSolution& sol) {
  Vec2d total(0, 0);
  for_each_quad_point(*sol.mesh, [&](const QuadPoint& qp) {
    total += qp.w * coeffs.f_at(qp.x.x(), qp.x.y());
  });
  return total;
}

EffectiveTensor effective_tensor(const CellSolution& sol, const CoefficientSet& coeffs) {
  EffectiveTensor t;
  effective_q(sol, coeffs, t.q);
  t.theta_tilde = effective_theta(coeffs, sol.cell);
  t.f_tilde = effective_f(coeffs, sol);
  t.cell_h = sol.h;
  return t;
}

double cell_energy(const CellSolution& sol, const CoefficientSet& coeffs,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const DofSpace& sp = *sol.space;
  double total = 0.0;
  for_each_quad_point(*sol.mesh, [&](const QuadPoint& qp) {
    const Eigen::Matrix2d am = coeffs.a_at(qp.x.x(), qp.x.y());
    const Eigen::Matrix2d gu = velocity_grad_at(sp, u, qp.tri, qp.bary);
    const Eigen::Matrix2d gv = velocity_grad_at(sp, v, qp.tri, qp.bary);
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) s += am(i, j) * gu(k, j) * gv(k, i);
    total += qp.w * s;
  });
  return total;
}

}  // namespace shom
