#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "eosc/load.hpp"
#include "eosc/mesh.hpp"

namespace eosc {

/// Continuous piecewise affine function given by nodal values.
struct P1Function {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

/// Galerkin system over the interior vertices.
struct LinearSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<Index> vertices;  // interior vertex of each row
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Stiffness matrix over all vertices.
Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh);
/// ⟨f, φ_z⟩ for every vertex z.
Eigen::VectorXd load_vector(const Load& f, const MeshPtr& mesh);

LinearSystem assemble(const MeshPtr& mesh, const Load& f);
P1Function solve_galerkin(const MeshPtr& mesh, const Load& f);

/// J(U)|_F = -(∇U|K1·n1 + ∇U|K2·n2) with outward normals; 0 on boundary faces.
/// With this sign ⟨ΔU, v⟩ = Σ_F ∫_F J(U) v ds.
std::vector<double> normal_jumps(const P1Function& u);

/// ΔV as a load (face densities J(V)).
Load laplacian_load(const P1Function& v);

double energy_norm(const P1Function& u);
/// ‖∇(a - b)‖ where one mesh refines the other; the coarse function is prolongated.
double energy_norm_difference(const P1Function& a, const P1Function& b);
/// Exact interpolation of a coarse P1 function on a refinement.
P1Function prolongate(const P1Function& coarse, const MeshPtr& fine);

/// Hat function φ_z as a piecewise polynomial.
PiecewisePoly hat_function(const MeshPtr& mesh, Index z);
/// P1 nodal basis as a test family indexed by vertex.
TestBasis p1_test_basis(const Mesh& mesh);

P1Function interpolate_p1(const MeshPtr& mesh, const ScalarFunction& g, bool zero_boundary = true);

void write_solution_csv(std::ostream& os, const P1Function& u);

}  // namespace eosc
