#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stokeshom/coeff.hpp"
#include "stokeshom/mesh.hpp"

namespace shom {

using SparseMat = Eigen::SparseMatrix<double>;

// 6-point degree-4 triangle rule (weights sum to 1, scale by area) and
// 3-point Gauss on [0,1]
struct TriQuadrature {
  static constexpr int n = 6;
  static const std::array<std::array<double, 3>, 6> bary;
  static const std::array<double, 6> weight;
};
struct EdgeQuadrature {
  static constexpr int n = 3;
  static const std::array<double, 3> point;
  static const std::array<double, 3> weight;
};

enum class BcType { DirichletZero, Slip, Natural, Periodic };

// Boundary-condition assignment per tag class. Built from (tag, condition)
// pairs; assigning two different conditions to one tag class is an error.
struct BcSpec {
  std::optional<BcType> outer, hole, periodic;
  static BcSpec from_pairs(const std::vector<std::pair<std::string, BcType>>& pairs);
};

// Scalar P2 layout: vertex dofs first, one dof per mesh edge after.
struct P2Layout {
  std::vector<std::array<int, 2>> edges;        // sorted vertex pairs
  std::vector<std::array<int, 3>> tri_edges;    // per triangle: edge ids for
                                                // local edges (0,1),(1,2),(2,0)
  int n_vertices = 0;
  int n_scalar() const { return n_vertices + static_cast<int>(edges.size()); }
  int edge_dof(int edge_id) const { return n_vertices + edge_id; }
};

struct DofConstraint {
  enum Kind { Free, Zero, Link } kind = Free;
  int master = -1;
  double coeff = 0.0;
};

// Velocity dof = 2*scalar + component; pressure dof = 2*n_scalar + vertex.
struct DofSpace {
  const TriMesh* mesh = nullptr;
  P2Layout p2;
  BcSpec bc;
  std::vector<DofConstraint> constraints;  // per total dof, flattened
  std::vector<int> free_index;             // -1 for constrained dofs
  int n_free = 0;
  int n_free_velocity = 0;

  int n_scalar() const { return p2.n_scalar(); }
  int n_velocity() const { return 2 * n_scalar(); }
  int n_pressure() const { return p2.n_vertices; }
  int n_total() const { return n_velocity() + n_pressure(); }
  int vdof(int scalar, int comp) const { return 2 * scalar + comp; }
  int pdof(int vertex) const { return n_velocity() + vertex; }

  Vec2d scalar_node_pos(int s) const;
  int edge_id_of(int a, int b) const;  // -1 when absent
};

DofSpace build_space(const TriMesh& mesh, const BcSpec& bc);

enum class CoefficientScaling { Micro, Cell, Macro };

struct MacroTensor {
  // q[i][j][k][h] multiplying du^h/dx_j dv^k/dx_i, plus the absorption mass
  double q[2][2][2][2] = {};
  double theta_tilde = 0.0;
};

struct AssembleOptions {
  CoefficientScaling scaling = CoefficientScaling::Cell;
  double eps = 1.0;           // micro: coefficients at x/eps, boundary mass
  MacroTensor macro;          // macro: constant tensor contraction
};

// [A B^T; B 0] on unreduced dofs plus the velocity block alone (for energy
// identities) and the divergence block (for discrete-divergence checks).
struct SaddleSystem {
  const DofSpace* space = nullptr;
  SparseMat K;
  SparseMat A;
  SparseMat B;
};

SaddleSystem assemble_saddle(const DofSpace& space, const CoefficientSet& coeffs,
                             const AssembleOptions& opts);

// Load vectors (unreduced dof indexing).
Eigen::VectorXd assemble_load_micro(const DofSpace& space, const CoefficientSet& coeffs,
                                    double eps);
Eigen::VectorXd assemble_load_function(const DofSpace& space,
                                       const std::function<Vec2d(const Vec2d&)>& f);
// Right-hand side of the periodic cell problem with indices (i, k).
Eigen::VectorXd assemble_cell_load(const DofSpace& space, const CoefficientSet& coeffs, int i,
                                   int k);

Eigen::VectorXd pressure_mean_vector(const DofSpace& space);
std::array<Eigen::VectorXd, 2> velocity_mean_vectors(const DofSpace& space);

struct SolveOptions {
  // The constant-velocity and (where present) constant-pressure nullspaces
  // are fixed by pinning one representative dof; the expanded solution is
  // projected back to the zero-mean representative afterwards, which matches
  // the Lagrange-multiplier solution exactly while keeping the factor sparse.
  bool fix_pressure_constant = true;
  bool fix_velocity_constants = false;  // periodic problems without Dirichlet
  bool reverse_order = false;           // permute free dofs (diagnostic)
  double residual_tol = 1e-10;
};

struct SaddleSolution {
  Eigen::VectorXd velocity;  // 2*n_scalar, constraints applied
  Eigen::VectorXd pressure;  // n_vertices, mean-zero after projection
  double residual = 0.0;
};

SaddleSolution solve_saddle(const SaddleSystem& sys, const Eigen::VectorXd& load,
                            const SolveOptions& opts = {});

// Factorizes once, solves for many right-hand sides (the cell problems share
// one matrix across their four loads).
class SaddleFactorization {
 public:
  SaddleFactorization(const SaddleSystem& sys, const SolveOptions& opts);
  SaddleSolution solve(const Eigen::VectorXd& load) const;

 private:
  const DofSpace* sp_;
  const SaddleSystem* sys_;
  SolveOptions opts_;
  std::vector<int> perm_;
  std::vector<int> pinned_;
  int n_ = 0;
  SparseMat K_;
  Eigen::SparseLU<SparseMat> lu_;
};

// Reduce a matrix/vector through the constraint map (test and diagnostic use).
SparseMat reduced_matrix(const DofSpace& space, const SparseMat& M);
Eigen::VectorXd reduced_vector(const DofSpace& space, const Eigen::VectorXd& v);

// P2 evaluation helpers.
void p2_shape_values(const std::array<double, 3>& bary, double out[6]);

Vec2d velocity_at(const DofSpace& space, const Eigen::VectorXd& U, int tri,
                  const std::array<double, 3>& bary);
Eigen::Matrix2d velocity_grad_at(const DofSpace& space, const Eigen::VectorXd& U, int tri,
                                 const std::array<double, 3>& bary);  // (i,j) = du_i/dx_j
double pressure_at(const DofSpace& space, const Eigen::VectorXd& P, int tri,
                   const std::array<double, 3>& bary);
// elementwise-constant second derivatives: H[k][i][j] = d2 u_k / dx_i dx_j
void velocity_hessian_at(const DofSpace& space, const Eigen::VectorXd& U, int tri,
                         double H[2][2][2]);

struct FieldNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double hole_l2 = 0.0;   // L2 of the trace on hole boundaries
  double l2_err = 0.0;    // against the reference when given
  double h1_err = 0.0;
};

FieldNorms field_norms(const DofSpace& space, const Eigen::VectorXd& U,
                       const std::function<Vec2d(const Vec2d&)>* exact = nullptr,
                       const std::function<Eigen::Matrix2d(const Vec2d&)>* exact_grad = nullptr);

double pressure_l2(const DofSpace& space, const Eigen::VectorXd& P);
double pressure_integral(const DofSpace& space, const Eigen::VectorXd& P);

// hand-checkable local matrices
Eigen::Matrix3d local_stiffness_p1(const Vec2d& a, const Vec2d& b, const Vec2d& c,
                                   const Eigen::Matrix2d& coeff);
Eigen::Matrix2d local_edge_mass_p1(double length);

}  // namespace shom
