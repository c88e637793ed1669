#include "stokeshom/vtk.hpp"

#include <cstdio>
#include <ostream>

namespace shom {

void write_vtk(const TriMesh& mesh, const Eigen::VectorXd* velocity,
               const Eigen::VectorXd* pressure, std::ostream& os, const std::string& title) {
  char buf[128];
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.nodes.size() << " double\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x(), p.y());
    os << buf;
  }
  os << "CELLS " << mesh.triangles.size() << " " << 4 * mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "CELL_TYPES " << mesh.triangles.size() << "\n";
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) os << "5\n";
  if (!velocity && !pressure) return;
  os << "POINT_DATA " << mesh.nodes.size() << "\n";
  if (velocity) {
    os << "VECTORS velocity double\n";
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", (*velocity)[2 * v], (*velocity)[2 * v + 1]);
      os << buf;
    }
  }
  if (pressure) {
    os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
      std::snprintf(buf, sizeof buf, "%.17g\n", (*pressure)[v]);
      os << buf;
    }
  }
}

}  // namespace shom
