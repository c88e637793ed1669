#include "stokeshom/fem.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>

namespace shom {

const std::array<std::array<double, 3>, 6> TriQuadrature::bary = {{
    {0.816847572980459, 0.091576213509771, 0.091576213509771},
    {0.091576213509771, 0.816847572980459, 0.091576213509771},
    {0.091576213509771, 0.091576213509771, 0.816847572980459},
    {0.108103018168070, 0.445948490915965, 0.445948490915965},
    {0.445948490915965, 0.108103018168070, 0.445948490915965},
    {0.445948490915965, 0.445948490915965, 0.108103018168070},
}};
const std::array<double, 6> TriQuadrature::weight = {
    0.109951743655322, 0.109951743655322, 0.109951743655322,
    0.223381589678011, 0.223381589678011, 0.223381589678011,
};

const std::array<double, 3> EdgeQuadrature::point = {0.112701665379258311, 0.5,
                                                     0.887298334620741689};
const std::array<double, 3> EdgeQuadrature::weight = {5.0 / 18, 8.0 / 18, 5.0 / 18};

BcSpec BcSpec::from_pairs(const std::vector<std::pair<std::string, BcType>>& pairs) {
  BcSpec bc;
  auto set = [](std::optional<BcType>& slot, BcType v, const std::string& tag) {
    if (slot && *slot != v)
      throw BcSpecError("conflicting boundary conditions on tag class " + tag);
    slot = v;
  };
  for (const auto& [tag, cond] : pairs) {
    if (tag == "outer")
      set(bc.outer, cond, tag);
    else if (tag == "hole")
      set(bc.hole, cond, tag);
    else if (tag == "periodic")
      set(bc.periodic, cond, tag);
    else
      throw BcSpecError("unknown boundary tag class " + tag);
  }
  return bc;
}

Vec2d DofSpace::scalar_node_pos(int s) const {
  if (s < p2.n_vertices) return mesh->nodes[s];
  const auto& e = p2.edges[s - p2.n_vertices];
  return 0.5 * (mesh->nodes[e[0]] + mesh->nodes[e[1]]);
}

int DofSpace::edge_id_of(int a, int b) const {
  const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(p2.edges.begin(), p2.edges.end(), key);
  if (it == p2.edges.end() || *it != key) return -1;
  return static_cast<int>(it - p2.edges.begin());
}

namespace {

P2Layout build_layout(const TriMesh& mesh) {
  P2Layout layout;
  layout.n_vertices = static_cast<int>(mesh.nodes.size());
  std::vector<std::array<int, 2>> all;
  all.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      all.push_back({std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])});
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  layout.edges = std::move(all);
  layout.tri_edges.resize(mesh.triangles.size());
  auto find_edge = [&](int a, int b) {
    const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    return static_cast<int>(
        std::lower_bound(layout.edges.begin(), layout.edges.end(), key) - layout.edges.begin());
  };
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tr = mesh.triangles[t];
    layout.tri_edges[t] = {find_edge(tr[0], tr[1]), find_edge(tr[1], tr[2]),
                           find_edge(tr[2], tr[0])};
  }
  return layout;
}

// local scalar dof order: vertices 0,1,2 then edge midpoints (01),(12),(20)
void local_scalar_dofs(const DofSpace& sp, int t, int out[6]) {
  const auto& tr = sp.mesh->triangles[t];
  out[0] = tr[0];
  out[1] = tr[1];
  out[2] = tr[2];
  for (int e = 0; e < 3; ++e) out[3 + e] = sp.p2.edge_dof(sp.p2.tri_edges[t][e]);
}

struct TriGeom {
  Vec2d v0, v1, v2;
  double area;
  Vec2d grad_l[3];
};

TriGeom tri_geom(const TriMesh& mesh, int t) {
  const auto& tr = mesh.triangles[t];
  TriGeom g;
  g.v0 = mesh.nodes[tr[0]];
  g.v1 = mesh.nodes[tr[1]];
  g.v2 = mesh.nodes[tr[2]];
  const Vec2d e1 = g.v1 - g.v0, e2 = g.v2 - g.v0;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  g.area = 0.5 * det;
  g.grad_l[1] = Vec2d(e2.y(), -e2.x()) / det;
  g.grad_l[2] = Vec2d(-e1.y(), e1.x()) / det;
  g.grad_l[0] = -g.grad_l[1] - g.grad_l[2];
  return g;
}

void p2_grads_from_geom(const TriGeom& g, const std::array<double, 3>& b, Vec2d out[6]) {
  for (int i = 0; i < 3; ++i) out[i] = (4 * b[i] - 1) * g.grad_l[i];
  out[3] = 4 * (b[1] * g.grad_l[0] + b[0] * g.grad_l[1]);
  out[4] = 4 * (b[2] * g.grad_l[1] + b[1] * g.grad_l[2]);
  out[5] = 4 * (b[0] * g.grad_l[2] + b[2] * g.grad_l[0]);
}

}  // namespace

void p2_shape_values(const std::array<double, 3>& b, double out[6]) {
  out[0] = b[0] * (2 * b[0] - 1);
  out[1] = b[1] * (2 * b[1] - 1);
  out[2] = b[2] * (2 * b[2] - 1);
  out[3] = 4 * b[0] * b[1];
  out[4] = 4 * b[1] * b[2];
  out[5] = 4 * b[2] * b[0];
}

DofSpace build_space(const TriMesh& mesh, const BcSpec& bc) {
  DofSpace sp;
  sp.mesh = &mesh;
  sp.p2 = build_layout(mesh);
  sp.bc = bc;
  sp.constraints.assign(sp.n_total(), DofConstraint{});

  auto set_zero = [&](int dof) { sp.constraints[dof] = {DofConstraint::Zero, -1, 0.0}; };
  auto set_link = [&](int dof, int master, double c) {
    sp.constraints[dof] = {DofConstraint::Link, master, c};
  };

  std::map<int, std::vector<Vec2d>> slip_normals;
  auto add_normal = [&](int snode, const Vec2d& n) {
    auto& list = slip_normals[snode];
    for (const auto& m : list)
      if (std::abs(m.x() * n.y() - m.y() * n.x()) < 1e-12 && m.dot(n) > 0) return;
    list.push_back(n);
  };

  for (const auto& be : mesh.boundary_edges) {
    if (be.tag == EdgeTag::PeriodicX || be.tag == EdgeTag::PeriodicY) {
      const BcType cond = bc.periodic.value_or(BcType::Periodic);
      if (cond != BcType::Periodic && cond != BcType::Natural)
        throw BcSpecError("periodic faces support only periodic or natural conditions");
      continue;
    }
    const BcType cond = be.tag == EdgeTag::Outer ? bc.outer.value_or(BcType::Natural)
                                                 : bc.hole.value_or(BcType::Natural);
    const int eid = sp.edge_id_of(be.a, be.b);
    const int mid = eid >= 0 ? sp.p2.edge_dof(eid) : -1;
    switch (cond) {
      case BcType::DirichletZero:
        for (int snode : {be.a, be.b, mid}) {
          if (snode < 0) continue;
          set_zero(sp.vdof(snode, 0));
          set_zero(sp.vdof(snode, 1));
        }
        break;
      case BcType::Slip:
        for (int snode : {be.a, be.b, mid}) {
          if (snode < 0) continue;
          add_normal(snode, be.normal);
        }
        break;
      case BcType::Natural:
        break;
      case BcType::Periodic:
        throw BcSpecError("periodic condition is only valid on periodic faces");
    }
  }

  // slip: u.n = 0 nodewise; two distinct normals at a corner pin the node
  for (const auto& [snode, normals] : slip_normals) {
    if (normals.size() >= 2) {
      set_zero(sp.vdof(snode, 0));
      set_zero(sp.vdof(snode, 1));
      continue;
    }
    const Vec2d n = normals[0];
    if (std::abs(n.x()) >= std::abs(n.y())) {
      if (std::abs(n.y()) < 1e-14)
        set_zero(sp.vdof(snode, 0));
      else
        set_link(sp.vdof(snode, 0), sp.vdof(snode, 1), -n.y() / n.x());
    } else {
      if (std::abs(n.x()) < 1e-14)
        set_zero(sp.vdof(snode, 1));
      else
        set_link(sp.vdof(snode, 1), sp.vdof(snode, 0), -n.x() / n.y());
    }
  }

  // periodic identifications: slave node follows its master for velocity and
  // pressure; face edge midpoints pair through the endpoint map
  if (!mesh.periodic_pairs.empty() &&
      bc.periodic.value_or(BcType::Periodic) == BcType::Periodic) {
    // per-axis slave->master maps; a corner node can be a slave in both
    std::map<int, int> xmap, ymap;
    for (const auto& pr : mesh.periodic_pairs) {
      const Vec2d d = mesh.nodes[pr[1]] - mesh.nodes[pr[0]];
      (d.x() == 1.0 ? xmap : ymap)[pr[1]] = pr[0];
    }
    for (const auto& pr : mesh.periodic_pairs) {
      set_link(sp.vdof(pr[1], 0), sp.vdof(pr[0], 0), 1.0);
      set_link(sp.vdof(pr[1], 1), sp.vdof(pr[0], 1), 1.0);
      set_link(sp.pdof(pr[1]), sp.pdof(pr[0]), 1.0);
    }
    auto link_edges = [&](const std::map<int, int>& pmap) {
      for (std::size_t e = 0; e < sp.p2.edges.size(); ++e) {
        const auto& ed = sp.p2.edges[e];
        auto ia = pmap.find(ed[0]);
        auto ib = pmap.find(ed[1]);
        if (ia == pmap.end() || ib == pmap.end()) continue;
        const int med = sp.edge_id_of(ia->second, ib->second);
        if (med < 0) continue;
        const int sdof = sp.p2.edge_dof(static_cast<int>(e));
        const int mdof = sp.p2.edge_dof(med);
        set_link(sp.vdof(sdof, 0), sp.vdof(mdof, 0), 1.0);
        set_link(sp.vdof(sdof, 1), sp.vdof(mdof, 1), 1.0);
      }
    };
    link_edges(xmap);
    link_edges(ymap);
  }

  // flatten link chains (periodic corners chain twice)
  for (int pass = 0; pass < 4; ++pass) {
    bool changed = false;
    for (auto& c : sp.constraints) {
      if (c.kind != DofConstraint::Link) continue;
      const auto& m = sp.constraints[c.master];
      if (m.kind == DofConstraint::Zero) {
        c = {DofConstraint::Zero, -1, 0.0};
        changed = true;
      } else if (m.kind == DofConstraint::Link) {
        c.coeff *= m.coeff;
        c.master = m.master;
        changed = true;
      }
    }
    if (!changed) break;
  }

  sp.free_index.assign(sp.n_total(), -1);
  int next = 0;
  for (int d = 0; d < sp.n_total(); ++d)
    if (sp.constraints[d].kind == DofConstraint::Free) sp.free_index[d] = next++;
  sp.n_free = next;
  sp.n_free_velocity = 0;
  for (int d = 0; d < sp.n_velocity(); ++d)
    if (sp.constraints[d].kind == DofConstraint::Free) sp.n_free_velocity++;
  return sp;
}

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

namespace {

using Trip = Eigen::Triplet<double>;

void add_edge_mass(const DofSpace& sp, const CoefficientSet& coeffs, double eps,
                   std::vector<Trip>& atrips) {
  // eps * integral over hole edges of theta(x/eps) u.v, quadratic traces
  for (const auto& be : sp.mesh->boundary_edges) {
    if (be.tag != EdgeTag::Hole) continue;
    const int eid = sp.edge_id_of(be.a, be.b);
    const Vec2d pa = sp.mesh->nodes[be.a], pb = sp.mesh->nodes[be.b];
    const double len = (pb - pa).norm();
    const int dofs[3] = {be.a, sp.p2.edge_dof(eid), be.b};
    double M[3][3] = {};
    for (int q = 0; q < EdgeQuadrature::n; ++q) {
      const double t = EdgeQuadrature::point[q];
      const Vec2d x = pa + t * (pb - pa);
      const double th = coeffs.theta_at(x.x() / eps, x.y() / eps);
      const double sh[3] = {(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)};
      const double w = EdgeQuadrature::weight[q] * len * th;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M[i][j] += w * sh[i] * sh[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c)
          atrips.emplace_back(sp.vdof(dofs[i], c), sp.vdof(dofs[j], c), eps * M[i][j]);
  }
}

}  // namespace

SaddleSystem assemble_saddle(const DofSpace& sp, const CoefficientSet& coeffs,
                             const AssembleOptions& opts) {
  std::vector<Trip> atrips, btrips;
  const int nt = static_cast<int>(sp.mesh->triangles.size());
  for (int t = 0; t < nt; ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    int sd[6];
    local_scalar_dofs(sp, t, sd);
    double Aloc[12][12] = {};
    double Bloc[3][12] = {};
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * g.area;
      const Vec2d x = b[0] * g.v0 + b[1] * g.v1 + b[2] * g.v2;
      Vec2d gr[6];
      p2_grads_from_geom(g, b, gr);

      if (opts.scaling == CoefficientScaling::Macro) {
        for (int a = 0; a < 6; ++a)
          for (int bb = 0; bb < 6; ++bb)
            for (int k = 0; k < 2; ++k)
              for (int hh = 0; hh < 2; ++hh) {
                double s = 0;
                for (int i = 0; i < 2; ++i)
                  for (int j = 0; j < 2; ++j)
                    s += opts.macro.q[i][j][k][hh] * gr[bb][j] * gr[a][i];
                Aloc[2 * a + k][2 * bb + hh] += w * s;
              }
        double sh[6];
        p2_shape_values(b, sh);
        for (int a = 0; a < 6; ++a)
          for (int bb = 0; bb < 6; ++bb)
            for (int c = 0; c < 2; ++c)
              Aloc[2 * a + c][2 * bb + c] += w * opts.macro.theta_tilde * sh[a] * sh[bb];
      } else {
        const double s = opts.scaling == CoefficientScaling::Micro ? 1.0 / opts.eps : 1.0;
        const Eigen::Matrix2d am = coeffs.a_at(x.x() * s, x.y() * s);
        for (int a = 0; a < 6; ++a)
          for (int bb = 0; bb < 6; ++bb) {
            double v = 0;
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) v += am(i, j) * gr[bb][j] * gr[a][i];
            for (int c = 0; c < 2; ++c) Aloc[2 * a + c][2 * bb + c] += w * v;
          }
      }
      for (int p = 0; p < 3; ++p)
        for (int bb = 0; bb < 6; ++bb)
          for (int c = 0; c < 2; ++c) Bloc[p][2 * bb + c] -= w * b[p] * gr[bb][c];
    }
    for (int a = 0; a < 6; ++a)
      for (int bb = 0; bb < 6; ++bb)
        for (int c1 = 0; c1 < 2; ++c1)
          for (int c2 = 0; c2 < 2; ++c2) {
            const double v = Aloc[2 * a + c1][2 * bb + c2];
            if (v != 0.0) atrips.emplace_back(sp.vdof(sd[a], c1), sp.vdof(sd[bb], c2), v);
          }
    const auto& tr = sp.mesh->triangles[t];
    for (int p = 0; p < 3; ++p)
      for (int bb = 0; bb < 6; ++bb)
        for (int c = 0; c < 2; ++c) {
          const double v = Bloc[p][2 * bb + c];
          if (v != 0.0) btrips.emplace_back(tr[p], sp.vdof(sd[bb], c), v);
        }
  }

  if (opts.scaling == CoefficientScaling::Micro) add_edge_mass(sp, coeffs, opts.eps, atrips);

  SaddleSystem sys;
  sys.space = &sp;
  sys.A.resize(sp.n_velocity(), sp.n_velocity());
  sys.A.setFromTriplets(atrips.begin(), atrips.end());
  sys.B.resize(sp.n_pressure(), sp.n_velocity());
  sys.B.setFromTriplets(btrips.begin(), btrips.end());

  std::vector<Trip> ktrips;
  ktrips.reserve(atrips.size() + 2 * btrips.size());
  for (const auto& t : atrips) ktrips.emplace_back(t.row(), t.col(), t.value());
  const int off = sp.n_velocity();
  for (const auto& t : btrips) {
    ktrips.emplace_back(off + t.row(), t.col(), t.value());
    ktrips.emplace_back(t.col(), off + t.row(), t.value());
  }
  sys.K.resize(sp.n_total(), sp.n_total());
  sys.K.setFromTriplets(ktrips.begin(), ktrips.end());
  return sys;
}

Eigen::VectorXd assemble_load_micro(const DofSpace& sp, const CoefficientSet& coeffs,
                                    double eps) {
  return assemble_load_function(
      sp, [&](const Vec2d& x) { return coeffs.f_at(x.x() / eps, x.y() / eps); });
}

Eigen::VectorXd assemble_load_function(const DofSpace& sp,
                                       const std::function<Vec2d(const Vec2d&)>& f) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(sp.n_total());
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    int sd[6];
    local_scalar_dofs(sp, t, sd);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * g.area;
      const Vec2d x = b[0] * g.v0 + b[1] * g.v1 + b[2] * g.v2;
      const Vec2d fv = f(x);
      double sh[6];
      p2_shape_values(b, sh);
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c) F[sp.vdof(sd[a], c)] += w * sh[a] * fv[c];
    }
  }
  return F;
}

Eigen::VectorXd assemble_cell_load(const DofSpace& sp, const CoefficientSet& coeffs, int i,
                                   int k) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(sp.n_total());
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    int sd[6];
    local_scalar_dofs(sp, t, sd);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * g.area;
      const Vec2d y = b[0] * g.v0 + b[1] * g.v1 + b[2] * g.v2;
      const Eigen::Matrix2d am = coeffs.a_at(y.x(), y.y());
      Vec2d gr[6];
      p2_grads_from_geom(g, b, gr);
      for (int a = 0; a < 6; ++a) {
        double v = 0;
        for (int l = 0; l < 2; ++l) v += am(l, i) * gr[a][l];
        F[sp.vdof(sd[a], k)] += w * v;
      }
    }
  }
  return F;
}

Eigen::VectorXd pressure_mean_vector(const DofSpace& sp) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(sp.n_total());
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    const auto& tr = sp.mesh->triangles[t];
    for (int p = 0; p < 3; ++p) w[sp.pdof(tr[p])] += g.area / 3.0;
  }
  return w;
}

std::array<Eigen::VectorXd, 2> velocity_mean_vectors(const DofSpace& sp) {
  std::array<Eigen::VectorXd, 2> out{Eigen::VectorXd::Zero(sp.n_total()),
                                     Eigen::VectorXd::Zero(sp.n_total())};
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    int sd[6];
    local_scalar_dofs(sp, t, sd);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * g.area;
      double sh[6];
      p2_shape_values(b, sh);
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c) out[c][sp.vdof(sd[a], c)] += w * sh[a];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// constraint reduction and solve
// ---------------------------------------------------------------------------

namespace {

struct Reducer {
  const DofSpace* sp;
  bool expand(int dof, int& fidx, double& coeff) const {
    const auto& c = sp->constraints[dof];
    switch (c.kind) {
      case DofConstraint::Free:
        fidx = sp->free_index[dof];
        coeff = 1.0;
        return true;
      case DofConstraint::Link:
        fidx = sp->free_index[c.master];
        coeff = c.coeff;
        return fidx >= 0;
      default:
        return false;
    }
  }
};

}  // namespace

SparseMat reduced_matrix(const DofSpace& sp, const SparseMat& M) {
  Reducer r{&sp};
  std::vector<Trip> trips;
  trips.reserve(M.nonZeros());
  const int off_row = M.rows() == sp.n_pressure() ? sp.n_velocity() : 0;
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(M, k); it; ++it) {
      int fi, fj;
      double ci, cj;
      if (!r.expand(static_cast<int>(it.row()) + off_row, fi, ci)) continue;
      if (!r.expand(static_cast<int>(it.col()), fj, cj)) continue;
      trips.emplace_back(fi, fj, ci * cj * it.value());
    }
  }
  SparseMat out(sp.n_free, sp.n_free);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd reduced_vector(const DofSpace& sp, const Eigen::VectorXd& v) {
  Reducer r{&sp};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.n_free);
  for (int d = 0; d < sp.n_total(); ++d) {
    int f;
    double c;
    if (r.expand(d, f, c)) out[f] += c * v[d];
  }
  return out;
}

SaddleFactorization::SaddleFactorization(const SaddleSystem& sys, const SolveOptions& opts)
    : sp_(sys.space), sys_(&sys), opts_(opts) {
  const DofSpace& sp = *sp_;
  const int nf = sp.n_free;
  n_ = nf;

  perm_.resize(nf);
  for (int i = 0; i < nf; ++i) perm_[i] = opts_.reverse_order ? nf - 1 - i : i;

  // pinned representatives of the constant nullspaces
  std::vector<int> pinned;
  if (opts_.fix_pressure_constant) {
    for (int v = 0; v < sp.n_pressure(); ++v) {
      const int f = sp.free_index[sp.pdof(v)];
      if (f >= 0) {
        pinned.push_back(perm_[f]);
        break;
      }
    }
  }
  if (opts_.fix_velocity_constants) {
    for (int s = 0; s < sp.n_scalar(); ++s) {
      const int f0 = sp.free_index[sp.vdof(s, 0)];
      const int f1 = sp.free_index[sp.vdof(s, 1)];
      if (f0 >= 0 && f1 >= 0) {
        pinned.push_back(perm_[f0]);
        pinned.push_back(perm_[f1]);
        break;
      }
    }
  }
  std::vector<char> is_pinned(nf, 0);
  for (int p : pinned) is_pinned[p] = 1;

  Reducer red{&sp};
  std::vector<Trip> trips;
  trips.reserve(sys.K.nonZeros());
  for (int k = 0; k < sys.K.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(sys.K, k); it; ++it) {
      int fi, fj;
      double ci, cj;
      if (!red.expand(static_cast<int>(it.row()), fi, ci)) continue;
      if (!red.expand(static_cast<int>(it.col()), fj, cj)) continue;
      if (is_pinned[perm_[fi]] || is_pinned[perm_[fj]]) continue;
      trips.emplace_back(perm_[fi], perm_[fj], ci * cj * it.value());
    }
  }
  for (int p : pinned) trips.emplace_back(p, p, 1.0);
  pinned_ = std::move(pinned);

  K_.resize(n_, n_);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();

  lu_.analyzePattern(K_);
  lu_.factorize(K_);
  if (lu_.info() != Eigen::Success)
    throw SolverError(
        "saddle factorization failed: singular reduced system (missing pressure mean "
        "constraint or disconnected fluid region)");
  // a singular-but-consistent system slips through LU; probe with a rhs that
  // no nullspace-bearing operator can reproduce
  Eigen::VectorXd probe(n_);
  for (int i = 0; i < n_; ++i) probe[i] = (i % 2 == 0) ? 1.0 : -0.5;
  Eigen::VectorXd z = lu_.solve(probe);
  const double pres = (K_ * z - probe).norm() / probe.norm();
  if (!std::isfinite(pres) || pres > 1e-6)
    throw SolverError(
        "singular reduced system (missing pressure mean constraint or disconnected fluid "
        "region)");
}

SaddleSolution SaddleFactorization::solve(const Eigen::VectorXd& load) const {
  const DofSpace& sp = *sp_;
  const int nf = sp.n_free;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_);
  {
    Eigen::VectorXd lr = reduced_vector(sp, load);
    for (int i = 0; i < nf; ++i) rhs[perm_[i]] = lr[i];
  }
  for (int p : pinned_) rhs[p] = 0.0;
  Eigen::VectorXd x = lu_.solve(rhs);
  x += lu_.solve(rhs - K_ * x);  // one refinement step
  const double res = (K_ * x - rhs).norm() / std::max(1.0, rhs.norm());
  if (!std::isfinite(res) || res > opts_.residual_tol)
    throw SolverError("saddle solve residual " + std::to_string(res) +
                      " above tolerance (missing pressure mean constraint or disconnected "
                      "fluid region)");

  Reducer red{&sp};
  Eigen::VectorXd full = Eigen::VectorXd::Zero(sp.n_total());
  for (int d = 0; d < sp.n_total(); ++d) {
    int f;
    double c;
    if (red.expand(d, f, c)) full[d] = c * x[perm_[f]];
  }
  SaddleSolution sol;
  sol.velocity = full.head(sp.n_velocity());
  sol.pressure = full.tail(sp.n_pressure());
  sol.residual = res;
  // zero-mean pressure representative
  Eigen::VectorXd w = pressure_mean_vector(sp);
  double area = 0.0, mean = 0.0;
  for (int v = 0; v < sp.n_pressure(); ++v) {
    area += w[sp.pdof(v)];
    mean += w[sp.pdof(v)] * sol.pressure[v];
  }
  if (area > 0 && opts_.fix_pressure_constant) sol.pressure.array() -= mean / area;
  // zero-mean velocity representative when the constants were pinned
  if (opts_.fix_velocity_constants) {
    auto vm = velocity_mean_vectors(sp);
    for (int c = 0; c < 2; ++c) {
      double va = 0.0, vmean = 0.0;
      for (int s = 0; s < sp.n_scalar(); ++s) {
        va += vm[c][sp.vdof(s, c)];
        vmean += vm[c][sp.vdof(s, c)] * sol.velocity[sp.vdof(s, c)];
      }
      const double shift = vmean / va;
      for (int s = 0; s < sp.n_scalar(); ++s) sol.velocity[sp.vdof(s, c)] -= shift;
    }
  }
  return sol;
}

SaddleSolution solve_saddle(const SaddleSystem& sys, const Eigen::VectorXd& load,
                            const SolveOptions& opts) {
  return SaddleFactorization(sys, opts).solve(load);
}

// ---------------------------------------------------------------------------
// evaluation and norms
// ---------------------------------------------------------------------------

Vec2d velocity_at(const DofSpace& sp, const Eigen::VectorXd& U, int t,
                  const std::array<double, 3>& bary) {
  int sd[6];
  local_scalar_dofs(sp, t, sd);
  double sh[6];
  p2_shape_values(bary, sh);
  Vec2d v(0, 0);
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 2; ++c) v[c] += sh[a] * U[sp.vdof(sd[a], c)];
  return v;
}

Eigen::Matrix2d velocity_grad_at(const DofSpace& sp, const Eigen::VectorXd& U, int t,
                                 const std::array<double, 3>& bary) {
  const TriGeom g = tri_geom(*sp.mesh, t);
  int sd[6];
  local_scalar_dofs(sp, t, sd);
  Vec2d gr[6];
  p2_grads_from_geom(g, bary, gr);
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < 2; ++j) m(c, j) += gr[a][j] * U[sp.vdof(sd[a], c)];
  return m;
}

double pressure_at(const DofSpace& sp, const Eigen::VectorXd& P, int t,
                   const std::array<double, 3>& bary) {
  const auto& tr = sp.mesh->triangles[t];
  return bary[0] * P[tr[0]] + bary[1] * P[tr[1]] + bary[2] * P[tr[2]];
}

void velocity_hessian_at(const DofSpace& sp, const Eigen::VectorXd& U, int t,
                         double H[2][2][2]) {
  const TriGeom g = tri_geom(*sp.mesh, t);
  int sd[6];
  local_scalar_dofs(sp, t, sd);
  // second derivatives of the P2 shapes are constant per element
  Eigen::Matrix2d hess[6];
  for (int v = 0; v < 3; ++v) hess[v] = 2.0 * g.grad_l[v] * g.grad_l[v].transpose();
  hess[3] = 4.0 * (g.grad_l[0] * g.grad_l[1].transpose() + g.grad_l[1] * g.grad_l[0].transpose());
  hess[4] = 4.0 * (g.grad_l[1] * g.grad_l[2].transpose() + g.grad_l[2] * g.grad_l[1].transpose());
  hess[5] = 4.0 * (g.grad_l[2] * g.grad_l[0].transpose() + g.grad_l[0] * g.grad_l[2].transpose());
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double v = 0;
        for (int a = 0; a < 6; ++a) v += hess[a](i, j) * U[sp.vdof(sd[a], k)];
        H[k][i][j] = v;
      }
}

FieldNorms field_norms(const DofSpace& sp, const Eigen::VectorXd& U,
                       const std::function<Vec2d(const Vec2d&)>* exact,
                       const std::function<Eigen::Matrix2d(const Vec2d&)>* exact_grad) {
  FieldNorms out;
  double l2 = 0, h1 = 0, l2e = 0, h1e = 0;
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * g.area;
      const Vec2d x = b[0] * g.v0 + b[1] * g.v1 + b[2] * g.v2;
      const Vec2d v = velocity_at(sp, U, t, b);
      const Eigen::Matrix2d gv = velocity_grad_at(sp, U, t, b);
      l2 += w * v.squaredNorm();
      h1 += w * gv.squaredNorm();
      if (exact) l2e += w * (v - (*exact)(x)).squaredNorm();
      if (exact_grad) h1e += w * (gv - (*exact_grad)(x)).squaredNorm();
    }
  }
  double holel2 = 0;
  for (const auto& be : sp.mesh->boundary_edges) {
    if (be.tag != EdgeTag::Hole) continue;
    const int eid = sp.edge_id_of(be.a, be.b);
    const int dofs[3] = {be.a, sp.p2.edge_dof(eid), be.b};
    const double len = (sp.mesh->nodes[be.b] - sp.mesh->nodes[be.a]).norm();
    for (int q = 0; q < EdgeQuadrature::n; ++q) {
      const double t = EdgeQuadrature::point[q];
      const double sh[3] = {(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)};
      Vec2d v(0, 0);
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c) v[c] += sh[i] * U[sp.vdof(dofs[i], c)];
      holel2 += EdgeQuadrature::weight[q] * len * v.squaredNorm();
    }
  }
  out.l2 = std::sqrt(l2);
  out.h1_semi = std::sqrt(h1);
  out.hole_l2 = std::sqrt(holel2);
  out.l2_err = std::sqrt(l2e);
  out.h1_err = std::sqrt(h1e);
  return out;
}

double pressure_l2(const DofSpace& sp, const Eigen::VectorXd& P) {
  double s = 0;
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double v = pressure_at(sp, P, t, b);
      s += TriQuadrature::weight[q] * g.area * v * v;
    }
  }
  return std::sqrt(s);
}

double pressure_integral(const DofSpace& sp, const Eigen::VectorXd& P) {
  double s = 0;
  for (int t = 0; t < static_cast<int>(sp.mesh->triangles.size()); ++t) {
    const TriGeom g = tri_geom(*sp.mesh, t);
    const auto& tr = sp.mesh->triangles[t];
    s += g.area * (P[tr[0]] + P[tr[1]] + P[tr[2]]) / 3.0;
  }
  return s;
}

Eigen::Matrix3d local_stiffness_p1(const Vec2d& a, const Vec2d& b, const Vec2d& c,
                                   const Eigen::Matrix2d& coeff) {
  const Vec2d e1 = b - a, e2 = c - a;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  const double area = 0.5 * det;
  Vec2d gl[3];
  gl[1] = Vec2d(e2.y(), -e2.x()) / det;
  gl[2] = Vec2d(-e1.y(), e1.x()) / det;
  gl[0] = -gl[1] - gl[2];
  Eigen::Matrix3d K;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K(i, j) = area * gl[j].dot(coeff * gl[i]);
  return K;
}

Eigen::Matrix2d local_edge_mass_p1(double length) {
  Eigen::Matrix2d M;
  M << 2, 1, 1, 2;
  return (length / 6.0) * M;
}

}  // namespace shom
