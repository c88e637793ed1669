#include "stokeshom/macro_solver.hpp"

#include <cmath>

namespace shom {

MacroSolution solve_macro_forced(const EffectiveTensor& tensor, const MacroDomain& domain,
                                 double h, const std::function<Vec2d(const Vec2d&)>& f) {
  {
    Eigen::Matrix4d M = tensor.as_matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (M + M.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw SolverError("effective tensor is not positive definite (min eigenvalue " +
                        std::to_string(es.eigenvalues().minCoeff()) + "); refusing the solve");
  }
  MacroSolution sol;
  sol.tensor = tensor;
  sol.mesh = std::make_shared<TriMesh>(mesh_rectangle(domain, h));
  sol.space = std::make_shared<DofSpace>(
      build_space(*sol.mesh, BcSpec::from_pairs({{"outer", BcType::DirichletZero}})));

  AssembleOptions opts;
  opts.scaling = CoefficientScaling::Macro;
  // the weak form is symmetric through q_ijkh = q_jihk; symmetrize away the
  // solver-level asymmetry of the computed tensor
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int hh = 0; hh < 2; ++hh)
          opts.macro.q[i][j][k][hh] =
              0.5 * (tensor.q[i][j][k][hh] + tensor.q[j][i][hh][k]);
  opts.macro.theta_tilde = tensor.theta_tilde;

  auto sys = assemble_saddle(*sol.space, CoefficientSet::identity(), opts);
  auto load = assemble_load_function(*sol.space, f);
  auto s = solve_saddle(sys, load, {});
  sol.u = std::move(s.velocity);
  sol.p = std::move(s.pressure);
  sol.residual = s.residual;
  return sol;
}

MacroSolution solve_macro(const EffectiveTensor& tensor, const MacroDomain& domain, double h) {
  const Vec2d f = tensor.f_tilde;
  return solve_macro_forced(tensor, domain, h, [f](const Vec2d&) { return f; });
}

namespace {
double g_val(double t) {
  const double s = std::sin(M_PI * t);
  return s * s;
}
double g_d1(double t) { return M_PI * std::sin(2 * M_PI * t); }
double g_d2(double t) { return 2 * M_PI * M_PI * std::cos(2 * M_PI * t); }
double g_d3(double t) { return -4 * M_PI * M_PI * M_PI * std::sin(2 * M_PI * t); }
}  // namespace

ManufacturedSolution mms_forcing(const EffectiveTensor& tensor) {
  ManufacturedSolution m;
  m.velocity = [](const Vec2d& x) {
    return Vec2d(g_val(x.x()) * g_d1(x.y()), -g_d1(x.x()) * g_val(x.y()));
  };
  m.velocity_grad = [](const Vec2d& x) {
    Eigen::Matrix2d g;
    g(0, 0) = g_d1(x.x()) * g_d1(x.y());
    g(0, 1) = g_val(x.x()) * g_d2(x.y());
    g(1, 0) = -g_d2(x.x()) * g_val(x.y());
    g(1, 1) = -g_d1(x.x()) * g_d1(x.y());
    return g;
  };
  m.pressure = [](const Vec2d& x) {
    return std::sin(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y());
  };
  EffectiveTensor t = tensor;
  m.forcing = [t](const Vec2d& x) {
    // second derivatives of the stream-function velocity
    double hess[2][2][2];  // hess[h][i][j] = d2 u^h / dx_i dx_j
    hess[0][0][0] = g_d2(x.x()) * g_d1(x.y());
    hess[0][0][1] = g_d1(x.x()) * g_d2(x.y());
    hess[0][1][0] = hess[0][0][1];
    hess[0][1][1] = g_val(x.x()) * g_d3(x.y());
    hess[1][0][0] = -g_d3(x.x()) * g_val(x.y());
    hess[1][0][1] = -g_d2(x.x()) * g_d1(x.y());
    hess[1][1][0] = hess[1][0][1];
    hess[1][1][1] = -g_d1(x.x()) * g_d2(x.y());
    const Vec2d u(g_val(x.x()) * g_d1(x.y()), -g_d1(x.x()) * g_val(x.y()));
    const Vec2d gradp(2 * M_PI * std::cos(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y()),
                      2 * M_PI * std::sin(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y()));
    Vec2d f(0, 0);
    for (int k = 0; k < 2; ++k) {
      double qk = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int h = 0; h < 2; ++h) qk -= t.q[i][j][k][h] * hess[h][i][j];
      f[k] = qk + t.theta_tilde * u[k] + gradp[k];
    }
    return f;
  };
  return m;
}

EffectiveTensor identity_tensor(double theta_tilde, const Vec2d& f_tilde) {
  EffectiveTensor t;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) t.q[i][i][k][k] = 1.0;
  t.theta_tilde = theta_tilde;
  t.f_tilde = f_tilde;
  return t;
}

}  // namespace shom
