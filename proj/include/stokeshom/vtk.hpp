#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "stokeshom/mesh.hpp"

namespace shom {

// Legacy ASCII unstructured-grid VTK with vertex-sampled point data. The
// velocity vector uses the dof layout of fem (2*scalar + component); only the
// vertex entries are written.
void write_vtk(const TriMesh& mesh, const Eigen::VectorXd* velocity,
               const Eigen::VectorXd* pressure, std::ostream& os, const std::string& title);

}  // namespace shom
