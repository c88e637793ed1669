#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "stokeshom/geometry.hpp"

namespace shom {

enum class EdgeTag { Outer, Hole, PeriodicX, PeriodicY };

struct BoundaryEdge {
  int a = -1, b = -1;   // node indices, oriented along the boundary loop
  EdgeTag tag = EdgeTag::Outer;
  int hole_id = -1;     // valid when tag == Hole
  Vec2d normal{0, 0};   // unit normal pointing out of the fluid
};

// Conforming triangulation with boundary tags and periodic identifications.
// Immutable after construction.
struct TriMesh {
  std::vector<Vec2d> nodes;
  std::vector<std::array<int, 3>> triangles;          // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::array<int, 2>> periodic_pairs;     // (master, slave)
  double target_area = 0.0;

  double triangle_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2d e1 = nodes[tri[1]] - nodes[tri[0]];
    const Vec2d e2 = nodes[tri[2]] - nodes[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }
  double area() const {
    double s = 0;
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t) s += triangle_area(t);
    return s;
  }
};

struct MeshDiagnostics {
  bool pass = false;
  double min_angle_deg = 0.0;
  double area_sum = 0.0;
  double target_area = 0.0;
  int negative_triangles = 0;
  int conformity_violations = 0;
  int orphan_tags = 0;
  int periodic_mismatches = 0;
  std::string message;
};

// Triangulates Y \ T with mirrored discretizations on opposite cell faces.
// The construction is structured (rings around the obstacle, a zipper band
// to the uniform outer trace), which keeps fourfold-symmetric obstacles
// fourfold-symmetric meshes.
TriMesh mesh_unit_cell(const CellGeometry& cell, double h);

// Triangulates Omega^eps by tiling the eps-scaled unit-cell mesh over the
// hole lattice; cells without contained holes get a matching structured
// grid, cut cells are clipped at the domain boundary.
TriMesh mesh_perforated(const MacroDomain& domain, const CellGeometry& cell, double eps,
                        double h);

// Structured triangulation of the unperforated rectangle with OUTER tags.
TriMesh mesh_rectangle(const MacroDomain& domain, double h);

// Interior mesh of a single hole with a prescribed boundary loop (used by the
// velocity extension); boundary nodes appear verbatim, in order, as nodes
// 0..loop.size()-1.
TriMesh mesh_polygon_interior(const std::vector<Vec2d>& loop, double h);

MeshDiagnostics validate_mesh(const TriMesh& m);

void write_mesh(const TriMesh& m, std::ostream& os);
TriMesh read_mesh(std::istream& is);

// Uniform-bin point locator. Returns triangle index and barycentric
// coordinates; -1 when the point is outside every triangle (beyond tol).
class TriLocator {
 public:
  explicit TriLocator(const TriMesh& mesh, int bins_per_axis = 0);
  int locate(const Vec2d& p, std::array<double, 3>& bary, double tol = 1e-9) const;
  const TriMesh& mesh() const { return *mesh_; }

 private:
  const TriMesh* mesh_;
  int nx_ = 0, ny_ = 0;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  std::vector<std::vector<int>> bins_;
};

}  // namespace shom
