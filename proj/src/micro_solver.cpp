#include "stokeshom/micro_solver.hpp"

#include <cmath>
#include <map>

namespace shom {

MicroSolution solve_micro(const MacroDomain& domain, const CellGeometry& cell,
                          const CoefficientSet& coeffs, double eps, double h) {
  return solve_micro_forced(domain, cell, coeffs, eps, h, nullptr);
}

MicroSolution solve_micro_forced(const MacroDomain& domain, const CellGeometry& cell,
                                 const CoefficientSet& coeffs, double eps, double h,
                                 const std::function<Vec2d(const Vec2d&)>& f,
                                 bool robin_holes) {
  MicroSolution sol;
  sol.eps = eps;
  sol.domain = domain;
  sol.cell = cell;
  sol.mesh = std::make_shared<TriMesh>(mesh_perforated(domain, cell, eps, h));
  sol.space = std::make_shared<DofSpace>(build_space(
      *sol.mesh,
      BcSpec::from_pairs({{"outer", BcType::DirichletZero},
                          {"hole", robin_holes ? BcType::Natural : BcType::Slip}})));

  AssembleOptions opts;
  opts.scaling = CoefficientScaling::Micro;
  opts.eps = eps;
  auto sys = assemble_saddle(*sol.space, coeffs, opts);
  auto load = f ? assemble_load_function(*sol.space, f)
                : assemble_load_micro(*sol.space, coeffs, eps);
  SolveOptions sopts;
  // free hole traces let the pressure escape through int p v.n: the
  // multiplier is already unique, a pin would perturb the solution
  sopts.fix_pressure_constant = !robin_holes;
  auto s = solve_saddle(sys, load, sopts);
  sol.u = std::move(s.velocity);
  sol.p = std::move(s.pressure);
  sol.residual = s.residual;

  // hole boundary loops in edge order
  std::map<int, std::map<int, int>> next;  // hole id -> a -> b
  for (const auto& be : sol.mesh->boundary_edges)
    if (be.tag == EdgeTag::Hole) next[be.hole_id][be.a] = be.b;
  int max_id = -1;
  for (const auto& [id, _] : next) max_id = std::max(max_id, id);
  sol.hole_loops.resize(max_id + 1);
  for (const auto& [id, chain] : next) {
    const int start = chain.begin()->first;
    for (int v = start;;) {
      sol.hole_loops[id].push_back(v);
      v = chain.at(v);
      if (v == start) break;
    }
  }
  return sol;
}

AprioriNorms apriori_norms(const MicroSolution& sol) {
  auto n = field_norms(*sol.space, sol.u);
  AprioriNorms out;
  out.grad_l2 = n.h1_semi;
  out.surf = sol.eps * n.hole_l2 * n.hole_l2;
  out.pressure_l2 = pressure_l2(*sol.space, sol.p);
  return out;
}

double pressure_tilde_at(const MicroSolution& sol, const TriLocator& loc, const Vec2d& x) {
  std::array<double, 3> bary{};
  const int t = loc.locate(x, bary);
  if (t < 0) return 0.0;  // inside a hole (or outside the domain)
  return pressure_at(*sol.space, sol.p, t, bary);
}

namespace {

// lifting solve on one hole patch: Dirichlet trace taken from the fluid field
Eigen::VectorXd patch_solve(const DofSpace& psp, const SaddleSystem& psys,
                            const SaddleFactorization& fact, const MicroSolution& sol,
                            const std::vector<int>& loop, const Eigen::VectorXd& fluid_u) {
  const DofSpace& fsp = *sol.space;
  const int nl = static_cast<int>(loop.size());
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(psp.n_total());
  // patch nodes 0..nl-1 coincide with the fluid loop nodes, in order; the
  // boundary edge midpoints coincide as well
  for (int i = 0; i < nl; ++i) {
    for (int c = 0; c < 2; ++c) lift[psp.vdof(i, c)] = fluid_u[fsp.vdof(loop[i], c)];
    const int j = (i + 1) % nl;
    const int pe = psp.edge_id_of(i, j);
    const int fe = fsp.edge_id_of(loop[i], loop[j]);
    if (pe >= 0 && fe >= 0) {
      for (int c = 0; c < 2; ++c)
        lift[psp.vdof(psp.p2.edge_dof(pe), c)] = fluid_u[fsp.vdof(fsp.p2.edge_dof(fe), c)];
    }
  }
  Eigen::VectorXd load = -(psys.K * lift);
  auto s = fact.solve(load);
  Eigen::VectorXd u = s.velocity;
  for (int d = 0; d < psp.n_velocity(); ++d) u[d] += lift[d];
  return u;
}

}  // namespace

ExtendedVelocity extend_into_holes(const MicroSolution& sol) {
  ExtendedVelocity ext;
  ext.base = &sol;
  for (int id = 0; id < static_cast<int>(sol.hole_loops.size()); ++id) {
    const auto& loop = sol.hole_loops[id];
    if (loop.empty()) continue;
    std::vector<Vec2d> pts;
    pts.reserve(loop.size());
    for (int v : loop) pts.push_back(sol.mesh->nodes[v]);
    ExtendedVelocity::HolePatch patch;
    patch.hole_id = id;
    patch.loop_nodes = loop;  // counterclockwise, as traced by the mesher
    double spacing = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      spacing = std::max(spacing, (pts[(i + 1) % pts.size()] - pts[i]).norm());
    TriMesh pm = mesh_polygon_interior(pts, spacing);
    patch.mesh = std::make_shared<TriMesh>(std::move(pm));
    patch.space = std::make_shared<DofSpace>(build_space(
        *patch.mesh, BcSpec::from_pairs({{"outer", BcType::DirichletZero}})));
    auto psys = assemble_saddle(*patch.space, CoefficientSet::identity(),
                                {CoefficientScaling::Cell});
    SaddleFactorization fact(psys, {});
    patch.u = patch_solve(*patch.space, psys, fact, sol, loop, sol.u);
    auto n = field_norms(*patch.space, patch.u);
    patch.grad_l2 = n.h1_semi;
    patch.div_norm = (psys.B * patch.u).norm();
    ext.patches.push_back(std::move(patch));
  }
  return ext;
}

Eigen::VectorXd extend_patch(const ExtendedVelocity::HolePatch& patch, const MicroSolution& sol,
                             const Eigen::VectorXd& fluid_u) {
  auto psys = assemble_saddle(*patch.space, CoefficientSet::identity(),
                              {CoefficientScaling::Cell});
  SaddleFactorization fact(psys, {});
  return patch_solve(*patch.space, psys, fact, sol, patch.loop_nodes, fluid_u);
}

}  // namespace shom
