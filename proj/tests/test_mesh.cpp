#include <cmath>
#include <set>
#include <map>
#include <sstream>

#include "doctest.h"
#include "stokeshom/mesh.hpp"

using namespace shom;

namespace {
const MacroDomain kUnit{1.0, 1.0};
const CellGeometry kSquare = CellGeometry::square(0.25);

double hole_edge_length(const TriMesh& m) {
  double s = 0;
  for (const auto& e : m.boundary_edges)
    if (e.tag == EdgeTag::Hole) s += (m.nodes[e.b] - m.nodes[e.a]).norm();
  return s;
}
}  // namespace

TEST_CASE("unit cell mesh: area, tags, quality") {
  auto m = mesh_unit_cell(kSquare, 0.1);
  CHECK(std::abs(m.area() - 0.75) < 1e-10);
  auto d = validate_mesh(m);
  CHECK(d.pass);
  CHECK(d.min_angle_deg >= 20.0);
  std::set<EdgeTag> tags;
  for (const auto& e : m.boundary_edges) tags.insert(e.tag);
  CHECK(tags.count(EdgeTag::Hole));
  CHECK(tags.count(EdgeTag::PeriodicX));
  CHECK(tags.count(EdgeTag::PeriodicY));
  CHECK(!m.periodic_pairs.empty());
}

TEST_CASE("unit cell mesh refinement grows triangle count by about four") {
  const auto coarse = mesh_unit_cell(kSquare, 0.05);
  const auto fine = mesh_unit_cell(kSquare, 0.025);
  const double factor =
      static_cast<double>(fine.triangles.size()) / static_cast<double>(coarse.triangles.size());
  CHECK(factor >= 3.5);
  CHECK(factor <= 4.5);
}

TEST_CASE("unit cell refinement keeps tagged boundary polylines identical") {
  for (double h : {0.1, 0.05}) {
    auto m = mesh_unit_cell(kSquare, h);
    CHECK(hole_edge_length(m) == doctest::Approx(2.0).epsilon(1e-12));
    for (const auto& e : m.boundary_edges) {
      if (e.tag != EdgeTag::Hole) continue;
      for (int v : {e.a, e.b}) {
        const Vec2d p = m.nodes[v];
        const bool on = (std::abs(std::abs(p.x()) - 0.25) < 1e-14 && std::abs(p.y()) <= 0.25) ||
                        (std::abs(std::abs(p.y()) - 0.25) < 1e-14 && std::abs(p.x()) <= 0.25);
        CHECK(on);
      }
    }
  }
}

TEST_CASE("obstacle too close to the cell boundary fails meshing") {
  CHECK_THROWS_AS(mesh_unit_cell(CellGeometry::square(0.49), 0.1), MeshingError);
}

TEST_CASE("periodic pairing is a bijection and matches coordinates exactly") {
  auto m = mesh_unit_cell(kSquare, 0.1);
  std::set<int> x_slaves, y_slaves;
  for (const auto& pr : m.periodic_pairs) {
    const Vec2d d = m.nodes[pr[1]] - m.nodes[pr[0]];
    const bool okx = d.x() == 1.0 && d.y() == 0.0;
    const bool oky = d.x() == 0.0 && d.y() == 1.0;
    CHECK((okx || oky));
    auto& slaves = okx ? x_slaves : y_slaves;
    CHECK(!slaves.count(pr[1]));  // per-axis bijection
    slaves.insert(pr[1]);
  }
  // every face node is either a master or a slave
  int face_nodes = 0;
  for (const auto& p : m.nodes)
    if (std::abs(p.x()) == 0.5 || std::abs(p.y()) == 0.5) ++face_nodes;
  std::set<int> in_pairs;
  for (const auto& pr : m.periodic_pairs) {
    in_pairs.insert(pr[0]);
    in_pairs.insert(pr[1]);
  }
  CHECK(static_cast<int>(in_pairs.size()) == face_nodes);
}

TEST_CASE("unit cell mesh is fourfold rotation symmetric for the square obstacle") {
  auto m = mesh_unit_cell(kSquare, 0.08);
  auto key = [](double v) { return std::llround(v * 1e12); };
  std::set<std::pair<long long, long long>> pts;
  for (const auto& p : m.nodes) pts.insert({key(p.x()), key(p.y())});
  for (const auto& p : m.nodes) {
    CHECK(pts.count({key(-p.y()), key(p.x())}));
  }
}

TEST_CASE("no-obstacle unit cell") {
  auto m = mesh_unit_cell(CellGeometry::none(), 0.125);
  CHECK(std::abs(m.area() - 1.0) < 1e-12);
  CHECK(validate_mesh(m).pass);
  for (const auto& e : m.boundary_edges) CHECK(e.tag != EdgeTag::Hole);
}

TEST_CASE("perforated mesh at eps 1/4") {
  auto m = mesh_perforated(kUnit, kSquare, 0.25, 1.0 / 32);
  CHECK(std::abs(m.area() - (1.0 - 9.0 / 64)) < 1e-10);
  auto d = validate_mesh(m);
  CHECK(d.pass);
  CHECK(m.periodic_pairs.empty());
  std::set<int> hole_ids;
  for (const auto& e : m.boundary_edges)
    if (e.tag == EdgeTag::Hole) hole_ids.insert(e.hole_id);
  CHECK(hole_ids.size() == 9);
  CHECK(hole_edge_length(m) == doctest::Approx(9 * 0.25 * 2.0).epsilon(1e-12));
}

TEST_CASE("perforated mesh at eps 1/2 has one tagged hole loop") {
  auto m = mesh_perforated(kUnit, kSquare, 0.5, 0.125);
  std::set<int> hole_ids;
  for (const auto& e : m.boundary_edges)
    if (e.tag == EdgeTag::Hole) hole_ids.insert(e.hole_id);
  CHECK(hole_ids.size() == 1);
  CHECK(validate_mesh(m).pass);
}

TEST_CASE("perforated mesh without members meshes the full domain") {
  // eps = 0.9 leaves no contained holes for the canonical obstacle
  auto m = mesh_perforated(kUnit, kSquare, 0.9, 0.2);
  for (const auto& e : m.boundary_edges) CHECK(e.tag != EdgeTag::Hole);
  CHECK(std::abs(m.area() - 1.0) < 1e-10);
  CHECK(validate_mesh(m).pass);
}

TEST_CASE("perforated mesh rejects h above eps/4") {
  CHECK_THROWS_AS(mesh_perforated(kUnit, kSquare, 0.25, 0.1), MeshingError);
}

TEST_CASE("hole normals point out of the fluid") {
  auto m = mesh_perforated(kUnit, kSquare, 0.5, 0.125);
  for (const auto& e : m.boundary_edges) {
    if (e.tag != EdgeTag::Hole) continue;
    // hole center is at eps*(1,1) = (0.5, 0.5); normal must point toward it
    const Vec2d mid = 0.5 * (m.nodes[e.a] + m.nodes[e.b]);
    CHECK(e.normal.dot(Vec2d(0.5, 0.5) - mid) > 0.0);
    CHECK(e.normal.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("validate_mesh flags a flipped triangle") {
  TriMesh m;
  m.nodes = {Vec2d(0, 0), Vec2d(1, 0), Vec2d(0, 1)};
  m.triangles = {{0, 2, 1}};  // clockwise
  auto d = validate_mesh(m);
  CHECK(!d.pass);
  CHECK(d.negative_triangles == 1);
}

TEST_CASE("validate_mesh flags a dangling tagged edge") {
  TriMesh m;
  m.nodes = {Vec2d(0, 0), Vec2d(1, 0), Vec2d(0, 1), Vec2d(2, 2)};
  m.triangles = {{0, 1, 2}};
  BoundaryEdge e;
  e.a = 1;
  e.b = 3;  // not an edge of any triangle
  e.tag = EdgeTag::Outer;
  m.boundary_edges = {e};
  auto d = validate_mesh(m);
  CHECK(!d.pass);
  CHECK(d.conformity_violations > 0);
}

TEST_CASE("mesh text format round trip") {
  auto m = mesh_unit_cell(kSquare, 0.125);
  std::stringstream ss;
  write_mesh(m, ss);
  auto r = read_mesh(ss);
  REQUIRE(r.nodes.size() == m.nodes.size());
  REQUIRE(r.triangles.size() == m.triangles.size());
  REQUIRE(r.boundary_edges.size() == m.boundary_edges.size());
  REQUIRE(r.periodic_pairs.size() == m.periodic_pairs.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    CHECK(r.nodes[i].x() == m.nodes[i].x());
    CHECK(r.nodes[i].y() == m.nodes[i].y());
  }
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i) {
    CHECK(r.boundary_edges[i].tag == m.boundary_edges[i].tag);
    CHECK(r.boundary_edges[i].hole_id == m.boundary_edges[i].hole_id);
  }
}

TEST_CASE("point locator finds containing triangles") {
  auto m = mesh_unit_cell(kSquare, 0.1);
  TriLocator loc(m);
  std::array<double, 3> bary{};
  const int t = loc.locate(Vec2d(0.4, 0.4), bary);
  REQUIRE(t >= 0);
  const auto& tr = m.triangles[t];
  const Vec2d p = bary[0] * m.nodes[tr[0]] + bary[1] * m.nodes[tr[1]] + bary[2] * m.nodes[tr[2]];
  CHECK((p - Vec2d(0.4, 0.4)).norm() < 1e-12);
  // center of the obstacle is outside the fluid mesh
  CHECK(loc.locate(Vec2d(0.0, 0.0), bary) == -1);
}

TEST_CASE("hole interior mesh honors its boundary loop") {
  std::vector<Vec2d> loop;
  auto cellm = mesh_perforated(kUnit, kSquare, 0.5, 0.125);
  // gather one hole loop in order by walking tagged edges
  std::map<int, int> next;
  for (const auto& e : cellm.boundary_edges)
    if (e.tag == EdgeTag::Hole) next[e.a] = e.b;
  REQUIRE(!next.empty());
  int start = next.begin()->first;
  for (int v = start;;) {
    loop.push_back(cellm.nodes[v]);
    v = next[v];
    if (v == start) break;
  }
  auto hm = mesh_polygon_interior(loop, 0.05);
  CHECK(std::abs(hm.area() - 0.25 * 0.25) < 1e-12);
  for (std::size_t i = 0; i < loop.size(); ++i) {
    CHECK(hm.nodes[i].x() == loop[i].x());
    CHECK(hm.nodes[i].y() == loop[i].y());
  }
}
