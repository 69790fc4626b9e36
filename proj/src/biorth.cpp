#include "eosc/biorth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace eosc {

IndexSet::IndexSet(const Mesh& mesh) : ne_(mesh.num_elements()) {
  for (std::size_t k = 0; k < ne_; ++k) {
    kind_.push_back(IndexKind::Element);
    entity_.push_back(static_cast<Index>(k));
  }
  face_slot_.assign(mesh.num_faces(), -1);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.faces()[f].interior) continue;
    face_slot_[f] = static_cast<Index>(kind_.size());
    kind_.push_back(IndexKind::Face);
    entity_.push_back(static_cast<Index>(f));
  }
}

double grad_norm(const PiecewisePoly& v) {
  double s = 0.0;
  for (const auto& [k, p] : v.pieces) {
    const auto& g = v.mesh->bary_gradients(k);
    std::array<BaryPoly, 3> d{p.derivative(0), p.derivative(1), p.derivative(2)};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double gij = g[i][0] * g[j][0] + g[i][1] * g[j][1];
        s += gij * integrate_product(d[i], d[j], v.mesh->area(k));
      }
  }
  return std::sqrt(std::max(0.0, s));
}

BiorthSystem::BiorthSystem(MeshPtr mesh) : mesh_(std::move(mesh)), idx_(*mesh_) {
  const Mesh& m = *mesh_;
  const BaryPoly cube = BaryPoly::monomial({1, 1, 1});
  psi_.resize(idx_.size());
  bubble_.resize(idx_.size());
  for (std::size_t i = 0; i < idx_.size(); ++i) {
    const Index e = idx_.entity(i);
    psi_[i].mesh = bubble_[i].mesh = mesh_;
    if (idx_.kind(i) == IndexKind::Element) {
      psi_[i].pieces.emplace_back(e, (60.0 / m.area(e)) * cube);
      bubble_[i].pieces.emplace_back(e, cube);
    } else {
      const Face& F = m.face(e);
      const double len = m.face_length(e);
      for (std::size_t s = 0; s < 2; ++s) {
        const int c = F.local[s];
        const BaryPoly lab = BaryPoly::coordinate((c + 1) % 3) * BaryPoly::coordinate((c + 2) % 3);
        const BaryPoly w = BaryPoly::constant(1.0) - 5.0 * BaryPoly::coordinate(c);
        psi_[i].pieces.emplace_back(F.elements[s], (6.0 / len) * (lab * w));
        bubble_[i].pieces.emplace_back(F.elements[s], lab);
      }
    }
  }
  psi_norm_.resize(idx_.size());
  bubble_norm_.resize(idx_.size());
  for (std::size_t i = 0; i < idx_.size(); ++i) {
    psi_norm_[i] = grad_norm(psi_[i]);
    bubble_norm_[i] = grad_norm(bubble_[i]);
  }
}

TestBasis BiorthSystem::basis_of(const std::vector<PiecewisePoly>& fns) const {
  TestBasis tb(mesh_->num_elements());
  for (std::size_t i = 0; i < fns.size(); ++i)
    for (const auto& [k, p] : fns[i].pieces) tb[static_cast<std::size_t>(k)].push_back({static_cast<Index>(i), p});
  return tb;
}

std::vector<std::size_t> BiorthSystem::star_indices(Index z) const {
  std::vector<std::size_t> out;
  for (Index k : mesh_->star_elements(z)) out.push_back(static_cast<std::size_t>(k));
  for (Index f : mesh_->star_faces(z)) out.push_back(static_cast<std::size_t>(idx_.face_slot(f)));
  return out;
}

Load BiorthSystem::chi(std::size_t i) const {
  const Index e = idx_.entity(i);
  if (idx_.kind(i) == IndexKind::Element) {
    ElementDensity d{mesh_, std::vector<BaryPoly>(mesh_->num_elements())};
    d.density[static_cast<std::size_t>(e)] = BaryPoly::constant(1.0);
    return Load(d);
  }
  return face_constants(mesh_, {{e, 1.0}});
}

double BiorthSystem::pairing(std::size_t i, std::size_t j) const {
  const Mesh& m = *mesh_;
  const Index e = idx_.entity(i);
  double s = 0.0;
  if (idx_.kind(i) == IndexKind::Element) {
    for (const auto& [k, p] : psi_[j].pieces)
      if (k == e) s += integrate(p, m.area(k));
    return s;
  }
  // ∫_F ψ_j ds from the piece on the first adjacent element. Every ψ_j is
  // continuous, and one supported only on the other side vanishes on F.
  const Face& F = m.face(e);
  for (const auto& [k, p] : psi_[j].pieces) {
    if (k != F.elements[0]) continue;
    const int c = F.local[0];
    std::array<Bary, 3> cols{};
    cols[0][static_cast<std::size_t>((c + 1) % 3)] = 1.0;
    cols[1][static_cast<std::size_t>((c + 2) % 3)] = 1.0;
    s += integrate_segment_product(p.compose(cols), BaryPoly::constant(1.0), m.face_length(e));
  }
  return s;
}

Eigen::SparseMatrix<double> BiorthSystem::pairing_matrix() const {
  // Candidates j for row i: indices whose ψ_j has a piece on an element touching χ_i.
  std::vector<std::vector<std::size_t>> on_element(mesh_->num_elements());
  for (std::size_t j = 0; j < psi_.size(); ++j)
    for (const auto& [k, p] : psi_[j].pieces) on_element[static_cast<std::size_t>(k)].push_back(j);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < idx_.size(); ++i) {
    std::vector<std::size_t> cand;
    if (idx_.kind(i) == IndexKind::Element) {
      cand = on_element[static_cast<std::size_t>(idx_.entity(i))];
    } else {
      for (Index k : mesh_->face(idx_.entity(i)).elements)
        for (std::size_t j : on_element[static_cast<std::size_t>(k)]) cand.push_back(j);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (std::size_t j : cand) trip.emplace_back(static_cast<Index>(i), static_cast<Index>(j), pairing(i, j));
  }
  const auto n = static_cast<Eigen::Index>(idx_.size());
  Eigen::SparseMatrix<double> P(n, n);
  P.setFromTriplets(trip.begin(), trip.end());
  return P;
}

void write_pairing_csv(std::ostream& os, const BiorthSystem& b) {
  const auto P = b.pairing_matrix();
  os << "row,col,value\n" << std::setprecision(17);
  for (Eigen::Index c = 0; c < P.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P, c); it; ++it)
      os << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

}  // namespace eosc
