#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <vector>

#include "eosc/load.hpp"
#include "eosc/mesh.hpp"

namespace eosc {

enum class IndexKind { Element, Face };

/// Index set ℐ = elements ∪ interior faces. Elements come first
/// (slot = element index), interior faces follow in face order.
class IndexSet {
 public:
  explicit IndexSet(const Mesh& mesh);
  std::size_t size() const { return kind_.size(); }
  std::size_t num_elements() const { return ne_; }
  IndexKind kind(std::size_t i) const { return kind_[i]; }
  /// Element or face number of slot i.
  Index entity(std::size_t i) const { return entity_[i]; }
  /// Slot of interior face f, -1 for boundary faces.
  Index face_slot(Index f) const { return face_slot_[static_cast<std::size_t>(f)]; }

 private:
  std::size_t ne_ = 0;
  std::vector<IndexKind> kind_;
  std::vector<Index> entity_;
  std::vector<Index> face_slot_;
};

/// Test functions ψ_i, bubbles λ_i and the dual basis χ_i of D(M).
class BiorthSystem {
 public:
  explicit BiorthSystem(MeshPtr mesh);

  const MeshPtr& mesh() const { return mesh_; }
  const IndexSet& indices() const { return idx_; }
  std::size_t size() const { return idx_.size(); }

  /// ψ_K = (60/|K|) λ1λ2λ3 ; ψ_F = (6/|F|) λaλb (1 - 5 λc) on each side.
  const PiecewisePoly& psi(std::size_t i) const { return psi_[i]; }
  /// λ_K = λ1λ2λ3 ; λ_F = λaλb.
  const PiecewisePoly& bubble(std::size_t i) const { return bubble_[i]; }
  double psi_grad_norm(std::size_t i) const { return psi_norm_[i]; }
  double bubble_grad_norm(std::size_t i) const { return bubble_norm_[i]; }

  TestBasis psi_basis() const { return basis_of(psi_); }
  TestBasis bubble_basis() const { return basis_of(bubble_); }

  /// ℐ_z: elements and interior faces containing z.
  std::vector<std::size_t> star_indices(Index z) const;

  /// χ_i as a load.
  Load chi(std::size_t i) const;

  /// ⟨χ_i, ψ_j⟩ for all pairs with overlapping support; others are never formed.
  Eigen::SparseMatrix<double> pairing_matrix() const;
  Eigen::MatrixXd dense_pairing_matrix() const { return Eigen::MatrixXd(pairing_matrix()); }

 private:
  TestBasis basis_of(const std::vector<PiecewisePoly>& fns) const;
  double pairing(std::size_t i, std::size_t j) const;

  MeshPtr mesh_;
  IndexSet idx_;
  std::vector<PiecewisePoly> psi_, bubble_;
  std::vector<double> psi_norm_, bubble_norm_;
};

/// ‖∇v‖ for a piecewise polynomial (continuous across faces).
double grad_norm(const PiecewisePoly& v);

/// Row, column and value of every stored pairing entry.
void write_pairing_csv(std::ostream& os, const BiorthSystem& b);

}  // namespace eosc
