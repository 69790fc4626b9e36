#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "eosc/load.hpp"
#include "eosc/mesh.hpp"

namespace eosc {

/// Continuous Lagrange space of degree 1 or 2.
/// P2 numbering: vertices first, then one dof per face (nv + face index).
struct LagrangeSpace {
  MeshPtr mesh;
  int degree = 1;
  std::size_t ndofs = 0;
  std::vector<std::array<Index, 6>> dofs;

  int local_count() const { return degree == 1 ? 3 : 6; }
  /// Local basis in barycentric form; P2 edge function i lives on the edge opposite vertex i.
  static const std::vector<BaryPoly>& reference_basis(int degree);

  TestBasis test_basis() const;
  /// Dofs lying on the faces flagged in `faces` (closed faces, endpoints included).
  std::vector<char> dofs_on_faces(const std::vector<char>& faces) const;
  /// ∫ φ_i dx for every dof.
  Eigen::VectorXd integrals() const;
  Eigen::SparseMatrix<double> stiffness() const;
  /// Value at barycentric point l of element k.
  double evaluate(const Eigen::VectorXd& u, Index k, const Bary& l) const;
};

LagrangeSpace make_space(const MeshPtr& mesh, int degree);

}  // namespace eosc
