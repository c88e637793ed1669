#include "stokeshom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace shom {

namespace {

double cross2(const Vec2d& a, const Vec2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Mirror-symmetric subdivision of [-1/2, 1/2]: locals[i] == -locals[n-i]
// bit-exactly, so opposite cell faces carry identical traces.
std::vector<double> symmetric_locals(int n) {
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n / 2; ++i) {
    v[i] = -0.5 + static_cast<double>(i) / n;
    v[n - i] = -v[i];
  }
  return v;
}

struct MeshBuilder {
  std::vector<Vec2d> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::array<int, 2>> periodic_pairs;

  int add(const Vec2d& p) {
    nodes.push_back(p);
    return static_cast<int>(nodes.size()) - 1;
  }
  void tri(int a, int b, int c) { triangles.push_back({a, b, c}); }
  // counterclockwise quad, split along whichever diagonal gives the better
  // worst angle (a pure function of side lengths, so symmetric inputs split
  // symmetrically)
  void quad(int a, int b, int c, int d);

  TriMesh finish(double target_area) {
    TriMesh m;
    m.nodes = std::move(nodes);
    m.triangles = std::move(triangles);
    m.boundary_edges = std::move(boundary_edges);
    m.periodic_pairs = std::move(periodic_pairs);
    m.target_area = target_area;
    return m;
  }
};

double tri_min_angle(const Vec2d& a, const Vec2d& b, const Vec2d& c);

void MeshBuilder::quad(int a, int b, int c, int d) {
  const Vec2d &A = nodes[a], &B = nodes[b], &C = nodes[c], &D = nodes[d];
  const double q1 = std::min(tri_min_angle(A, B, C), tri_min_angle(A, C, D));
  const double q2 = std::min(tri_min_angle(B, C, D), tri_min_angle(B, D, A));
  if (q1 >= q2) {
    tri(a, b, c);
    tri(a, c, d);
  } else {
    tri(b, c, d);
    tri(b, d, a);
  }
}

double tri_min_angle(const Vec2d& a, const Vec2d& b, const Vec2d& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  auto ang = [](double opp, double s1, double s2) {
    const double v = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2), -1.0, 1.0);
    return std::acos(v);
  };
  return std::min({ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)}) * 180.0 / M_PI;
}

// Damped Jacobi smoothing: all moves are proposed from the pass-start
// positions and applied together, which keeps symmetric meshes symmetric. A
// pass that flips any triangle or lowers the global minimum angle is undone.
void smooth(std::vector<Vec2d>& nodes, const std::vector<std::array<int, 3>>& tris,
            const std::vector<char>& movable, int passes) {
  const int nn = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> nbr(nn);
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      nbr[a].push_back(b);
      nbr[b].push_back(a);
    }
  }
  for (auto& v : nbr) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  auto global_min = [&]() {
    double worst_angle = 1e300, worst_area = 1e300;
    for (const auto& t : tris) {
      worst_angle =
          std::min(worst_angle, tri_min_angle(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
      const Vec2d e1 = nodes[t[1]] - nodes[t[0]];
      const Vec2d e2 = nodes[t[2]] - nodes[t[0]];
      worst_area = std::min(worst_area, 0.5 * cross2(e1, e2));
    }
    return std::make_pair(worst_angle, worst_area);
  };
  for (int p = 0; p < passes; ++p) {
    const auto before = global_min();
    std::vector<Vec2d> prev = nodes;
    for (int v = 0; v < nn; ++v) {
      if (!movable[v] || nbr[v].empty()) continue;
      Vec2d avg(0, 0);
      for (int w : nbr[v]) avg += prev[w];
      avg /= static_cast<double>(nbr[v].size());
      nodes[v] = 0.5 * (prev[v] + avg);
    }
    const auto after = global_min();
    if (after.second <= 0.0 || after.first < before.first) {
      nodes = prev;
      break;
    }
  }
}

double mesh_min_angle(const std::vector<Vec2d>& nodes,
                      const std::vector<std::array<int, 3>>& tris) {
  double m = 1e300;
  for (const auto& t : tris) m = std::min(m, tri_min_angle(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
  return m;
}

void build_grid(MeshBuilder& mb, const std::vector<double>& xs, const std::vector<double>& ys,
                std::vector<std::vector<int>>* node_grid_out) {
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  std::vector<std::vector<int>> id(nx + 1, std::vector<int>(ny + 1));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) id[i][j] = mb.add(Vec2d(xs[i], ys[j]));
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      mb.tri(id[i][j], id[i + 1][j], id[i + 1][j + 1]);
      mb.tri(id[i][j], id[i + 1][j + 1], id[i][j + 1]);
    }
  }
  if (node_grid_out) *node_grid_out = std::move(id);
}

// ---------------------------------------------------------------------------
// unit-cell mesh with an obstacle: ring layers around the polygon, a zipper
// band onto a uniform concentric square, then uniform square rings out to the
// cell boundary. All constructions commute bit-exactly with 90-degree
// rotations of the obstacle, so symmetric obstacles get symmetric meshes.
// ---------------------------------------------------------------------------

struct LoopNode {
  Vec2d p;
  int slot = -1;     // aligned outer slot index, -1 for inserted vertices
  int edge_id = 0;   // polygon edge owning the following segment
};

struct UnitCellBuild {
  TriMesh mesh;
  int face_segments = 0;  // uniform segments per cell face
};

// Obstacle boundary nodes driven by the uniform outer slot directions: each
// slot's ray from the origin hits the star-shaped polygon once; polygon
// vertices are inserted where no slot ray passes through them. Slot-aligned
// nodes remember their slot so the outer rings stay exactly uniform.
std::vector<LoopNode> trace_obstacle(const std::vector<Vec2d>& poly,
                                     const std::vector<Vec2d>& slot_dirs) {
  const int nv = static_cast<int>(poly.size());
  const int ns = static_cast<int>(slot_dirs.size());
  std::vector<LoopNode> loop;
  loop.reserve(ns + nv);
  std::vector<char> vertex_used(nv, 0);
  for (int sidx = 0; sidx < ns; ++sidx) {
    const Vec2d d = slot_dirs[sidx];
    bool found = false;
    for (int e = 0; e < nv && !found; ++e) {
      const Vec2d a = poly[e], b = poly[(e + 1) % nv];
      if (cross2(a, d) == 0.0 && a.dot(d) > 0.0) {
        LoopNode n;
        n.p = a;
        n.edge_id = e;
        n.slot = sidx;
        loop.push_back(n);
        vertex_used[e] = 1;
        found = true;
      } else if (cross2(a, d) > 0.0 && cross2(b, d) < 0.0) {
        const double ca = cross2(a, d), cb = cross2(b, d);
        const double t = ca / (ca - cb);
        LoopNode n;
        n.p = a + t * (b - a);
        n.edge_id = e;
        n.slot = sidx;
        loop.push_back(n);
        found = true;
      }
    }
    if (!found) throw MeshingError("obstacle not star-shaped about the cell center");
  }
  // insert unused polygon vertices in angular order between their slot hits
  for (int v = 0; v < nv; ++v) {
    if (vertex_used[v]) continue;
    const int ln = static_cast<int>(loop.size());
    for (int i = 0; i < ln; ++i) {
      const Vec2d a = loop[i].p, b = loop[(i + 1) % ln].p;
      if (cross2(a, poly[v]) > 0.0 && cross2(poly[v], b) > 0.0) {
        LoopNode n;
        n.p = poly[v];
        n.edge_id = v;
        loop.insert(loop.begin() + i + 1, n);
        break;
      }
    }
  }
  return loop;
}

// zipper band between two node sequences along one side, both ordered by
// increasing parameter; near-equal parameters merge into aligned quads
void zipper_side(MeshBuilder& mb, const std::vector<int>& in_ids,
                 const std::vector<double>& in_par, const std::vector<int>& out_ids,
                 const std::vector<double>& out_par) {
  const double tie = 1e-9;
  std::size_t i = 0, j = 0;
  while (i + 1 < in_ids.size() || j + 1 < out_ids.size()) {
    const bool can_i = i + 1 < in_ids.size();
    const bool can_j = j + 1 < out_ids.size();
    if (can_i && can_j && std::abs(in_par[i + 1] - out_par[j + 1]) <= tie) {
      mb.quad(in_ids[i], out_ids[j], out_ids[j + 1], in_ids[i + 1]);
      ++i;
      ++j;
    } else if (can_i && (!can_j || in_par[i + 1] < out_par[j + 1])) {
      mb.tri(in_ids[i], out_ids[j], in_ids[i + 1]);
      ++i;
    } else {
      mb.tri(in_ids[i], out_ids[j], out_ids[j + 1]);
      ++j;
    }
  }
}

// concentric square loop of half-width w assembled from exact 90-degree
// rotations of its right side; counterclockwise starting at (w, -w), m nodes
// per side, side s occupying [s*m, (s+1)*m)
std::vector<int> square_loop(MeshBuilder& mb, double w, int m,
                             const std::vector<double>& locals_pm1) {
  std::vector<Vec2d> right(m);
  for (int i = 0; i < m; ++i) right[i] = Vec2d(w, locals_pm1[i] * w);
  std::vector<int> ids;
  ids.reserve(4 * m);
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(right[i]));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(-right[i].y(), right[i].x())));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(-right[i].x(), -right[i].y())));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(right[i].y(), -right[i].x())));
  return ids;
}

// cell boundary loop with coordinates +-1/2 verbatim
std::vector<int> cell_boundary_loop(MeshBuilder& mb, int m, const std::vector<double>& face) {
  std::vector<int> ids;
  ids.reserve(4 * m);
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(0.5, face[i])));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(-face[i], 0.5)));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(-0.5, -face[i])));
  for (int i = 0; i < m; ++i) ids.push_back(mb.add(Vec2d(face[i], -0.5)));
  return ids;
}

void ring_between_loops(MeshBuilder& mb, const std::vector<int>& inner,
                        const std::vector<int>& outer) {
  const int n = static_cast<int>(inner.size());
  for (int i = 0; i < n; ++i) {
    const int i1 = (i + 1) % n;
    mb.quad(inner[i1], inner[i], outer[i], outer[i1]);
  }
}

void add_periodic_structure(MeshBuilder& mb, const std::vector<int>& bnd, int m) {
  auto right = [&](int i) { return bnd[i]; };
  auto top = [&](int i) { return bnd[m + i]; };
  auto left = [&](int i) { return bnd[2 * m + i]; };
  auto bottom = [&](int i) { return bnd[3 * m + i]; };
  const int BL = bottom(0), BR = right(0), TL = left(0), TR = top(0);
  // x-pairs carry all four corners; the top-right corner reaches bottom-left
  // through the top-left chain
  mb.periodic_pairs.push_back({BL, BR});
  mb.periodic_pairs.push_back({TL, TR});
  for (int i = 1; i < m; ++i) mb.periodic_pairs.push_back({left(m - i), right(i)});
  mb.periodic_pairs.push_back({BL, TL});
  mb.periodic_pairs.push_back({BR, TR});
  for (int i = 1; i < m; ++i) mb.periodic_pairs.push_back({bottom(m - i), top(i)});

  auto edge = [&](int a, int b, EdgeTag tag, const Vec2d& nrm) {
    BoundaryEdge e;
    e.a = a;
    e.b = b;
    e.tag = tag;
    e.normal = nrm;
    mb.boundary_edges.push_back(e);
  };
  for (int i = 0; i < m; ++i) {
    edge(right(i), i + 1 < m ? right(i + 1) : TR, EdgeTag::PeriodicX, Vec2d(1, 0));
    edge(top(i), i + 1 < m ? top(i + 1) : TL, EdgeTag::PeriodicY, Vec2d(0, 1));
    edge(left(i), i + 1 < m ? left(i + 1) : BL, EdgeTag::PeriodicX, Vec2d(-1, 0));
    edge(bottom(i), i + 1 < m ? bottom(i + 1) : BR, EdgeTag::PeriodicY, Vec2d(0, -1));
  }
}

UnitCellBuild build_unit_cell(const CellGeometry& cell, double h) {
  if (!(h > 0.0) || h > 0.25 + 1e-12)
    throw MeshingError("cell mesh size must satisfy 0 < h <= 1/4, got " + std::to_string(h));
  h = std::min(h, 0.25);

  UnitCellBuild out;
  if (!cell.has_obstacle()) {
    const int n = std::max(2, static_cast<int>(std::lround(1.0 / h)));
    MeshBuilder mb;
    const auto locals = symmetric_locals(n);
    std::vector<std::vector<int>> id;
    build_grid(mb, locals, locals, &id);
    std::vector<int> bnd;
    for (int j = 0; j < n; ++j) bnd.push_back(id[n][j]);
    for (int i = 0; i < n; ++i) bnd.push_back(id[n - i][n]);
    for (int j = 0; j < n; ++j) bnd.push_back(id[0][n - j]);
    for (int i = 0; i < n; ++i) bnd.push_back(id[i][0]);
    add_periodic_structure(mb, bnd, n);
    out.mesh = mb.finish(1.0);
    out.face_segments = n;
    return out;
  }

  cell.validate();
  const auto& poly = cell.obstacle;
  const int nv = static_cast<int>(poly.size());
  for (int i = 0; i < nv; ++i) {
    if (cross2(poly[i], poly[(i + 1) % nv]) <= 0.0)
      throw MeshingError("obstacle not star-shaped about the cell center");
  }
  double maxc = 0.0;
  for (const auto& p : poly) maxc = std::max({maxc, std::abs(p.x()), std::abs(p.y())});
  const double margin = 0.5 - maxc;
  if (margin < h)
    throw MeshingError("obstacle too close to the cell boundary: margin " +
                       std::to_string(margin) + " requires h <= " + std::to_string(margin));

  MeshBuilder mb;
  // even face count so the obstacle trace can ride every second slot ray
  const int m_out = 2 * std::max(1, static_cast<int>(std::lround(0.5 / h)));
  const auto face = symmetric_locals(m_out);
  std::vector<double> locals_pm1(m_out);
  for (int i = 0; i < m_out; ++i) locals_pm1[i] = 2.0 * face[i];

  // ray directions for the obstacle trace: every second outer slot, so the
  // trace spacing tracks h while the outer faces stay twice as fine
  std::vector<Vec2d> slot_dirs;
  slot_dirs.reserve(2 * m_out);
  auto push_side = [&](auto&& f) {
    for (int i = 0; i < m_out; i += 2) slot_dirs.push_back(f(locals_pm1[i]));
  };
  push_side([](double t) { return Vec2d(1.0, t); });
  push_side([](double t) { return Vec2d(-t, 1.0); });
  push_side([](double t) { return Vec2d(-1.0, -t); });
  push_side([](double t) { return Vec2d(t, -1.0); });

  auto loop = trace_obstacle(poly, slot_dirs);
  for (auto& n : loop)
    if (n.slot >= 0) n.slot *= 2;  // back to full slot indexing
  const int nl = static_cast<int>(loop.size());
  const double wp = (maxc + 0.5) / 2.0;  // intermediate square half-width

  // intermediate uniform loop positions (only slot-aligned ones become nodes)
  std::vector<Vec2d> sprime_pos;
  sprime_pos.reserve(4 * m_out);
  {
    std::vector<Vec2d> right(m_out);
    for (int i = 0; i < m_out; ++i) right[i] = Vec2d(wp, locals_pm1[i] * wp);
    for (int i = 0; i < m_out; ++i) sprime_pos.push_back(right[i]);
    for (int i = 0; i < m_out; ++i) sprime_pos.emplace_back(-right[i].y(), right[i].x());
    for (int i = 0; i < m_out; ++i) sprime_pos.emplace_back(-right[i].x(), -right[i].y());
    for (int i = 0; i < m_out; ++i) sprime_pos.emplace_back(right[i].y(), -right[i].x());
  }

  std::vector<Vec2d> proj(nl);
  for (int i = 0; i < nl; ++i) {
    if (loop[i].slot >= 0) {
      proj[i] = sprime_pos[loop[i].slot];
    } else {
      const double sc = wp / std::max(std::abs(loop[i].p.x()), std::abs(loop[i].p.y()));
      proj[i] = sc * loop[i].p;
    }
  }

  // ring A: graded levels from the obstacle out to the intermediate square
  double maxgap = 0.0;
  for (int i = 0; i < nl; ++i) maxgap = std::max(maxgap, (proj[i] - loop[i].p).norm());
  const int nA = std::max(1, static_cast<int>(std::ceil(maxgap / h)));
  std::vector<double> tlev(nA + 1);
  for (int l = 0; l <= nA; ++l) tlev[l] = static_cast<double>(l) / nA;

  std::vector<std::vector<int>> ring(nA + 1, std::vector<int>(nl));
  for (int l = 0; l <= nA; ++l) {
    for (int i = 0; i < nl; ++i) {
      if (l == 0)
        ring[l][i] = mb.add(loop[i].p);
      else if (l == nA)
        ring[l][i] = mb.add(proj[i]);
      else
        ring[l][i] = mb.add(Vec2d(loop[i].p + tlev[l] * (proj[i] - loop[i].p)));
    }
  }
  for (int l = 0; l < nA; ++l) ring_between_loops(mb, ring[l], ring[l + 1]);

  // obstacle boundary edges; normals point out of the fluid into the hole
  for (int i = 0; i < nl; ++i) {
    const int e = loop[i].edge_id;
    const Vec2d dir = (poly[(e + 1) % nv] - poly[e]).normalized();
    BoundaryEdge be;
    be.a = ring[0][i];
    be.b = ring[0][(i + 1) % nl];
    be.tag = EdgeTag::Hole;
    be.hole_id = 0;
    be.normal = Vec2d(-dir.y(), dir.x());
    mb.boundary_edges.push_back(be);
  }

  const int L = std::max(1, static_cast<int>(std::lround((0.5 - wp) / h)));
  std::vector<std::vector<int>> loops(L);
  for (int l = 0; l < L - 1; ++l) {
    const double w = wp + (l + 1) * (0.5 - wp) / L;
    loops[l] = square_loop(mb, w, m_out, locals_pm1);
  }
  loops[L - 1] = cell_boundary_loop(mb, m_out, face);
  for (int l = 0; l + 1 < L; ++l) ring_between_loops(mb, loops[l], loops[l + 1]);

  // zipper between the obstacle-driven intermediate trace and the first
  // uniform loop; fully aligned slots merge into plain quads
  int corner_at[4] = {-1, -1, -1, -1};
  for (int i = 0; i < nl; ++i) {
    if (loop[i].slot == 0) corner_at[3] = i;
    if (loop[i].slot == m_out) corner_at[0] = i;
    if (loop[i].slot == 2 * m_out) corner_at[1] = i;
    if (loop[i].slot == 3 * m_out) corner_at[2] = i;
  }
  auto side_param = [&](int side, const Vec2d& p, double w) {
    switch (side) {
      case 0: return (p.y() + w) / (2 * w);   // right
      case 1: return (w - p.x()) / (2 * w);   // top
      case 2: return (w - p.y()) / (2 * w);   // left
      default: return (p.x() + w) / (2 * w);  // bottom
    }
  };
  const double w1 = L > 1 ? wp + (0.5 - wp) / L : 0.5;
  const auto& first = loops[0];
  for (int side = 0; side < 4; ++side) {
    const int cfrom = corner_at[(side + 3) % 4];
    const int cto = corner_at[side % 4];
    std::vector<int> in_ids;
    std::vector<double> in_par;
    for (int i = cfrom;; i = (i + 1) % nl) {
      in_ids.push_back(ring[nA][i]);
      in_par.push_back(side_param(side, mb.nodes[ring[nA][i]], wp));
      if (i == cto) break;
    }
    std::vector<int> out_ids;
    std::vector<double> out_par;
    for (int i = 0; i <= m_out; ++i) {
      const int id = first[(side * m_out + i) % (4 * m_out)];
      out_ids.push_back(id);
      out_par.push_back(side_param(side, mb.nodes[id], w1));
    }
    zipper_side(mb, in_ids, in_par, out_ids, out_par);
  }

  add_periodic_structure(mb, loops[L - 1], m_out);

  std::vector<char> movable(mb.nodes.size(), 1);
  for (int i = 0; i < nl; ++i) movable[ring[0][i]] = 0;
  for (int id : loops[L - 1]) movable[id] = 0;
  smooth(mb.nodes, mb.triangles, movable, 4);
  for (int extra = 0; extra < 12 && mesh_min_angle(mb.nodes, mb.triangles) < 20.0; ++extra)
    smooth(mb.nodes, mb.triangles, movable, 1);
  if (mesh_min_angle(mb.nodes, mb.triangles) < 15.0) {
    if (std::getenv("SHOM_MESH_DEBUG")) {
      for (const auto& t : mb.triangles) {
        const double a = tri_min_angle(mb.nodes[t[0]], mb.nodes[t[1]], mb.nodes[t[2]]);
        if (a < 15.0)
          std::fprintf(stderr, "bad tri angle %.3f at (%.4f,%.4f) (%.4f,%.4f) (%.4f,%.4f)\n", a,
                       mb.nodes[t[0]].x(), mb.nodes[t[0]].y(), mb.nodes[t[1]].x(),
                       mb.nodes[t[1]].y(), mb.nodes[t[2]].x(), mb.nodes[t[2]].y());
      }
    }
    throw MeshingError("cell mesh quality below the 15 degree floor");
  }

  out.mesh = mb.finish(1.0 - indicator_means(cell).area_obstacle);
  out.face_segments = m_out;
  return out;
}

}  // namespace

TriMesh mesh_unit_cell(const CellGeometry& cell, double h) {
  return build_unit_cell(cell, h).mesh;
}

// ---------------------------------------------------------------------------
// perforated macro mesh by tiling the scaled unit-cell mesh; shared faces
// merge by bit-identical coordinates
// ---------------------------------------------------------------------------

namespace {

struct NodeKey {
  std::uint64_t x, y;
  bool operator==(const NodeKey& o) const { return x == o.x && y == o.y; }
};
struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const {
    std::uint64_t h = k.x * 0x9e3779b97f4a7c15ull;
    h ^= k.y + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

NodeKey key_of(const Vec2d& p) {
  const double x = p.x() == 0.0 ? 0.0 : p.x();  // collapse -0.0
  const double y = p.y() == 0.0 ? 0.0 : p.y();
  NodeKey k;
  std::memcpy(&k.x, &x, 8);
  std::memcpy(&k.y, &y, 8);
  return k;
}

}  // namespace

TriMesh mesh_perforated(const MacroDomain& domain, const CellGeometry& cell, double eps,
                        double h) {
  if (!(h > 0.0) || h > eps / 4.0 + 1e-12)
    throw MeshingError("perforated mesh requires h <= eps/4 = " + std::to_string(eps / 4.0) +
                       ", got " + std::to_string(h));
  auto lat = hole_lattice(domain, cell, eps);
  std::sort(lat.members.begin(), lat.members.end());

  UnitCellBuild tile = build_unit_cell(cell, std::min(0.25, h / eps));
  const int n = tile.face_segments;
  const auto face = symmetric_locals(n);

  std::unordered_map<NodeKey, int, NodeKeyHash> node_ids;
  TriMesh m;
  auto global_node = [&](long kx, long ky, const Vec2d& local) {
    double gx = eps * (static_cast<double>(kx) + local.x());
    double gy = eps * (static_cast<double>(ky) + local.y());
    if (gx == 0.0) gx = 0.0;
    if (gy == 0.0) gy = 0.0;
    const Vec2d p(gx, gy);
    const auto key = key_of(p);
    auto it = node_ids.find(key);
    if (it != node_ids.end()) return it->second;
    const int id = static_cast<int>(m.nodes.size());
    m.nodes.push_back(p);
    node_ids.emplace(key, id);
    return id;
  };

  std::map<std::array<long, 2>, int> member_index;
  for (int i = 0; i < static_cast<int>(lat.members.size()); ++i)
    member_index[lat.members[i]] = i;

  const long kx_hi = static_cast<long>(std::ceil(domain.L1 / eps)) + 1;
  const long ky_hi = static_cast<long>(std::ceil(domain.L2 / eps)) + 1;
  const double snap = 1e-12;

  for (long kx = -1; kx <= kx_hi; ++kx) {
    for (long ky = -1; ky <= ky_hi; ++ky) {
      double lox = std::max(-0.5, 0.0 - static_cast<double>(kx));
      double hix = std::min(0.5, domain.L1 / eps - static_cast<double>(kx));
      double loy = std::max(-0.5, 0.0 - static_cast<double>(ky));
      double hiy = std::min(0.5, domain.L2 / eps - static_cast<double>(ky));
      if (std::abs(lox + 0.5) < snap) lox = -0.5;
      if (std::abs(hix - 0.5) < snap) hix = 0.5;
      if (std::abs(loy + 0.5) < snap) loy = -0.5;
      if (std::abs(hiy - 0.5) < snap) hiy = 0.5;
      if (hix - lox < 1e-9 || hiy - loy < 1e-9) continue;

      auto it = member_index.find({kx, ky});
      if (it != member_index.end()) {
        if (lox != -0.5 || hix != 0.5 || loy != -0.5 || hiy != 0.5)
          throw MeshingError("contained hole in a cell cut by the domain boundary: unsupported");
        std::vector<int> map(tile.mesh.nodes.size());
        for (std::size_t i = 0; i < tile.mesh.nodes.size(); ++i)
          map[i] = global_node(kx, ky, tile.mesh.nodes[i]);
        for (const auto& t : tile.mesh.triangles)
          m.triangles.push_back({map[t[0]], map[t[1]], map[t[2]]});
        for (const auto& be : tile.mesh.boundary_edges) {
          if (be.tag != EdgeTag::Hole) continue;
          BoundaryEdge g = be;
          g.a = map[be.a];
          g.b = map[be.b];
          g.hole_id = it->second;
          m.boundary_edges.push_back(g);
        }
      } else {
        auto locals_1d = [&](double lo, double hi) {
          if (lo == -0.5 && hi == 0.5) return face;
          const int mseg = std::max(1, static_cast<int>(std::lround((hi - lo) * n)));
          std::vector<double> v(mseg + 1);
          for (int i = 0; i <= mseg; ++i)
            v[i] = lo + (hi - lo) * static_cast<double>(i) / mseg;
          v.front() = lo;
          v.back() = hi;
          return v;
        };
        const auto xs = locals_1d(lox, hix);
        const auto ys = locals_1d(loy, hiy);
        std::vector<int> ids(xs.size() * ys.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
          for (std::size_t j = 0; j < ys.size(); ++j)
            ids[i * ys.size() + j] = global_node(kx, ky, Vec2d(xs[i], ys[j]));
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
          for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const int a = ids[i * ys.size() + j], b = ids[(i + 1) * ys.size() + j];
            const int c = ids[(i + 1) * ys.size() + j + 1], d = ids[i * ys.size() + j + 1];
            m.triangles.push_back({a, b, c});
            m.triangles.push_back({a, c, d});
          }
        }
      }
    }
  }

  // remaining boundary edges lie on the domain rectangle
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  std::map<std::pair<int, int>, bool> is_hole;
  for (const auto& be : m.boundary_edges)
    is_hole[{std::min(be.a, be.b), std::max(be.a, be.b)}] = true;
  for (const auto& [e, cnt] : edge_count) {
    if (cnt != 1 || is_hole.count(e)) continue;
    BoundaryEdge be;
    be.a = e.first;
    be.b = e.second;
    be.tag = EdgeTag::Outer;
    const Vec2d pa = m.nodes[be.a], pb = m.nodes[be.b];
    const double tol = 1e-9 * std::max(domain.L1, domain.L2);
    if (std::abs(pa.x()) < tol && std::abs(pb.x()) < tol)
      be.normal = Vec2d(-1, 0);
    else if (std::abs(pa.x() - domain.L1) < tol && std::abs(pb.x() - domain.L1) < tol)
      be.normal = Vec2d(1, 0);
    else if (std::abs(pa.y()) < tol && std::abs(pb.y()) < tol)
      be.normal = Vec2d(0, -1);
    else
      be.normal = Vec2d(0, 1);
    m.boundary_edges.push_back(be);
  }

  const auto cm = indicator_means(cell);
  m.target_area =
      domain.area() - static_cast<double>(lat.members.size()) * eps * eps * cm.area_obstacle;
  return m;
}

TriMesh mesh_rectangle(const MacroDomain& domain, double h) {
  if (!(h > 0.0)) throw MeshingError("mesh size must be positive");
  const int nx = std::max(1, static_cast<int>(std::lround(domain.L1 / h)));
  const int ny = std::max(1, static_cast<int>(std::lround(domain.L2 / h)));
  MeshBuilder mb;
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = domain.L1 * static_cast<double>(i) / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = domain.L2 * static_cast<double>(j) / ny;
  std::vector<std::vector<int>> id;
  build_grid(mb, xs, ys, &id);
  auto edge = [&](int a, int b, const Vec2d& nrm) {
    BoundaryEdge e;
    e.a = a;
    e.b = b;
    e.tag = EdgeTag::Outer;
    e.normal = nrm;
    mb.boundary_edges.push_back(e);
  };
  for (int i = 0; i < nx; ++i) {
    edge(id[i][0], id[i + 1][0], Vec2d(0, -1));
    edge(id[i][ny], id[i + 1][ny], Vec2d(0, 1));
  }
  for (int j = 0; j < ny; ++j) {
    edge(id[0][j], id[0][j + 1], Vec2d(-1, 0));
    edge(id[nx][j], id[nx][j + 1], Vec2d(1, 0));
  }
  return mb.finish(domain.area());
}

// ---------------------------------------------------------------------------
// polygon interior (hole) mesh: shrinking rings plus a central fan; boundary
// nodes appear verbatim as nodes 0..loop.size()-1
// ---------------------------------------------------------------------------

TriMesh mesh_polygon_interior(const std::vector<Vec2d>& loop, double h) {
  const int nl = static_cast<int>(loop.size());
  if (nl < 3) throw MeshingError("hole loop needs at least 3 nodes");
  Vec2d c(0, 0);
  for (const auto& p : loop) c += p;
  c /= static_cast<double>(nl);
  double rmax = 0.0;
  for (const auto& p : loop) rmax = std::max(rmax, (p - c).norm());
  const int nR = std::max(1, static_cast<int>(std::ceil(rmax / h)));

  MeshBuilder mb;
  std::vector<std::vector<int>> rings(nR, std::vector<int>(nl));
  for (int l = 0; l < nR; ++l) {
    const double t = 1.0 - static_cast<double>(l) / nR;
    for (int i = 0; i < nl; ++i)
      rings[l][i] = mb.add(l == 0 ? loop[i] : Vec2d(c + t * (loop[i] - c)));
  }
  const int center = mb.add(c);
  for (int l = 0; l + 1 < nR; ++l) {
    const auto& outer = rings[l];
    const auto& inner = rings[l + 1];
    for (int i = 0; i < nl; ++i) {
      const int i1 = (i + 1) % nl;
      mb.quad(inner[i1], inner[i], outer[i], outer[i1]);
    }
  }
  for (int i = 0; i < nl; ++i) mb.tri(rings[nR - 1][i], rings[nR - 1][(i + 1) % nl], center);

  for (int i = 0; i < nl; ++i) {
    const int i1 = (i + 1) % nl;
    BoundaryEdge e;
    e.a = rings[0][i];
    e.b = rings[0][i1];
    e.tag = EdgeTag::Outer;
    const Vec2d d = (loop[i1] - loop[i]).normalized();
    e.normal = Vec2d(d.y(), -d.x());  // outward of a counterclockwise loop
    mb.boundary_edges.push_back(e);
  }

  std::vector<char> movable(mb.nodes.size(), 1);
  for (int i = 0; i < nl; ++i) movable[rings[0][i]] = 0;
  smooth(mb.nodes, mb.triangles, movable, 2);

  return mb.finish(std::abs(polygon_area<double>(loop)));
}

// ---------------------------------------------------------------------------
// validation, io, locator
// ---------------------------------------------------------------------------

MeshDiagnostics validate_mesh(const TriMesh& m) {
  MeshDiagnostics d;
  d.target_area = m.target_area;
  d.min_angle_deg = 1e300;
  double area = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const double a = m.triangle_area(static_cast<int>(t));
    area += a;
    if (a <= 0.0) d.negative_triangles++;
    const auto& tr = m.triangles[t];
    d.min_angle_deg =
        std::min(d.min_angle_deg, tri_min_angle(m.nodes[tr[0]], m.nodes[tr[1]], m.nodes[tr[2]]));
  }
  d.area_sum = area;

  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [e, cnt] : edge_count)
    if (cnt > 2) d.conformity_violations++;
  std::map<std::pair<int, int>, bool> tagged;
  for (const auto& be : m.boundary_edges) {
    const auto key = std::make_pair(std::min(be.a, be.b), std::max(be.a, be.b));
    tagged[key] = true;
    auto it = edge_count.find(key);
    if (it == edge_count.end())
      d.conformity_violations++;  // dangling tagged edge
    else if (it->second != 1)
      d.orphan_tags++;  // tag on an interior edge
  }
  for (const auto& [e, cnt] : edge_count)
    if (cnt == 1 && !tagged.count(e)) d.conformity_violations++;

  for (const auto& pr : m.periodic_pairs) {
    const Vec2d delta = m.nodes[pr[1]] - m.nodes[pr[0]];
    const bool okx = delta.x() == 1.0 && delta.y() == 0.0;
    const bool oky = delta.x() == 0.0 && delta.y() == 1.0;
    if (!okx && !oky) d.periodic_mismatches++;
  }

  const bool area_ok = m.target_area == 0.0 ||
                       std::abs(area - m.target_area) <= 1e-10 * std::max(1.0, m.target_area);
  d.pass = d.negative_triangles == 0 && d.conformity_violations == 0 && d.orphan_tags == 0 &&
           d.periodic_mismatches == 0 && area_ok && d.min_angle_deg >= 15.0 - 1e-9;
  if (!d.pass) {
    std::ostringstream os;
    os << "mesh validation failed:";
    if (d.negative_triangles) os << " negative-area triangles " << d.negative_triangles;
    if (d.conformity_violations) os << " conformity violations " << d.conformity_violations;
    if (d.orphan_tags) os << " orphan tags " << d.orphan_tags;
    if (d.periodic_mismatches) os << " periodic mismatches " << d.periodic_mismatches;
    if (!area_ok) os << " area " << area << " vs target " << m.target_area;
    if (d.min_angle_deg < 15.0) os << " min angle " << d.min_angle_deg;
    d.message = os.str();
  } else {
    d.message = "ok";
  }
  return d;
}

void write_mesh(const TriMesh& m, std::ostream& os) {
  char buf[96];
  os << "NODES " << m.nodes.size() << "\n";
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  os << "TRIANGLES " << m.triangles.size() << "\n";
  for (const auto& t : m.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "EDGES " << m.boundary_edges.size() << "\n";
  for (const auto& e : m.boundary_edges) {
    os << e.a << " " << e.b << " ";
    switch (e.tag) {
      case EdgeTag::Outer: os << "OUTER"; break;
      case EdgeTag::Hole: os << "HOLE(" << e.hole_id << ")"; break;
      case EdgeTag::PeriodicX: os << "PERIODIC_X"; break;
      case EdgeTag::PeriodicY: os << "PERIODIC_Y"; break;
    }
    os << "\n";
  }
  os << "PERIODIC " << m.periodic_pairs.size() << "\n";
  for (const auto& p : m.periodic_pairs) os << p[0] << " " << p[1] << "\n";
}

TriMesh read_mesh(std::istream& is) {
  TriMesh m;
  std::string kw;
  std::size_t n = 0;
  is >> kw >> n;
  if (kw != "NODES") throw Error("mesh format: expected NODES");
  m.nodes.resize(n);
  for (auto& p : m.nodes) is >> p.x() >> p.y();
  is >> kw >> n;
  if (kw != "TRIANGLES") throw Error("mesh format: expected TRIANGLES");
  m.triangles.resize(n);
  for (auto& t : m.triangles) is >> t[0] >> t[1] >> t[2];
  is >> kw >> n;
  if (kw != "EDGES") throw Error("mesh format: expected EDGES");
  m.boundary_edges.resize(n);
  for (auto& e : m.boundary_edges) {
    std::string tag;
    is >> e.a >> e.b >> tag;
    if (tag == "OUTER") {
      e.tag = EdgeTag::Outer;
    } else if (tag == "PERIODIC_X") {
      e.tag = EdgeTag::PeriodicX;
    } else if (tag == "PERIODIC_Y") {
      e.tag = EdgeTag::PeriodicY;
    } else if (tag.rfind("HOLE(", 0) == 0) {
      e.tag = EdgeTag::Hole;
      e.hole_id = std::stoi(tag.substr(5));
    } else {
      throw Error("mesh format: unknown tag " + tag);
    }
  }
  is >> kw >> n;
  if (kw != "PERIODIC") throw Error("mesh format: expected PERIODIC");
  m.periodic_pairs.resize(n);
  for (auto& p : m.periodic_pairs) is >> p[0] >> p[1];
  return m;
}

TriLocator::TriLocator(const TriMesh& mesh, int bins_per_axis) : mesh_(&mesh) {
  double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
  for (const auto& p : mesh.nodes) {
    x1 = std::min(x1, p.x());
    y1 = std::min(y1, p.y());
    x2 = std::max(x2, p.x());
    y2 = std::max(y2, p.y());
  }
  const int nb = bins_per_axis > 0
                     ? bins_per_axis
                     : std::max(4, static_cast<int>(std::sqrt(mesh.triangles.size() / 2.0)));
  nx_ = ny_ = nb;
  x0_ = x1;
  y0_ = y1;
  dx_ = (x2 - x1) / nb;
  dy_ = (y2 - y1) / nb;
  if (dx_ <= 0) dx_ = 1;
  if (dy_ <= 0) dy_ = 1;
  bins_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[t];
    double tx1 = 1e300, ty1 = 1e300, tx2 = -1e300, ty2 = -1e300;
    for (int v : tr) {
      tx1 = std::min(tx1, mesh.nodes[v].x());
      ty1 = std::min(ty1, mesh.nodes[v].y());
      tx2 = std::max(tx2, mesh.nodes[v].x());
      ty2 = std::max(ty2, mesh.nodes[v].y());
    }
    const int i1 = std::clamp(static_cast<int>((tx1 - x0_) / dx_), 0, nx_ - 1);
    const int i2 = std::clamp(static_cast<int>((tx2 - x0_) / dx_), 0, nx_ - 1);
    const int j1 = std::clamp(static_cast<int>((ty1 - y0_) / dy_), 0, ny_ - 1);
    const int j2 = std::clamp(static_cast<int>((ty2 - y0_) / dy_), 0, ny_ - 1);
    for (int i = i1; i <= i2; ++i)
      for (int j = j1; j <= j2; ++j) bins_[static_cast<std::size_t>(i) * ny_ + j].push_back(t);
  }
}

int TriLocator::locate(const Vec2d& p, std::array<double, 3>& bary, double tol) const {
  const int i = std::clamp(static_cast<int>((p.x() - x0_) / dx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((p.y() - y0_) / dy_), 0, ny_ - 1);
  int best = -1;
  double best_min = -1e300;
  std::array<double, 3> best_bary{};
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_) continue;
      for (int t : bins_[static_cast<std::size_t>(ii) * ny_ + jj]) {
        const auto& tr = mesh_->triangles[t];
        const Vec2d a = mesh_->nodes[tr[0]], b = mesh_->nodes[tr[1]], c = mesh_->nodes[tr[2]];
        const double det = cross2(b - a, c - a);
        if (det <= 0) continue;
        const double l1 = cross2(Vec2d(b - p), Vec2d(c - p)) / det;
        const double l2 = cross2(Vec2d(c - p), Vec2d(a - p)) / det;
        const double l3 = 1.0 - l1 - l2;
        const double mn = std::min({l1, l2, l3});
        if (mn >= 0) {
          bary = {l1, l2, l3};
          return t;
        }
        if (mn > best_min) {
          best_min = mn;
          best = t;
          best_bary = {l1, l2, l3};
        }
      }
    }
  }
  if (best >= 0 && best_min >= -tol) {
    bary = best_bary;
    return best;
  }
  return -1;
}

}  // namespace shom
