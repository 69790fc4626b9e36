#include <sstream>

#include "support.hpp"

using namespace eosc;
using testing::random_mesh;

namespace {

double max_identity_deviation(const BiorthSystem& b) {
  const Eigen::MatrixXd P = b.dense_pairing_matrix();
  return (P - Eigen::MatrixXd::Identity(P.rows(), P.cols())).cwiseAbs().maxCoeff();
}

// ‖∇p‖² on one element from physical gradients at the independent rule's points.
double grad_sq_by_quadrature(const Mesh& m, Index k, const BaryPoly& p) {
  const auto& g = m.bary_gradients(k);
  double s = 0.0;
  for (const auto& [l, w] : testing::reference_rule()) {
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double d = p.derivative(i)(l);
      gx += d * g[static_cast<std::size_t>(i)][0];
      gy += d * g[static_cast<std::size_t>(i)][1];
    }
    s += w * m.area(k) * (gx * gx + gy * gy);
  }
  return s;
}

}  // namespace

TEST_CASE("test function normalizations") {
  const MeshPtr m = random_mesh(1, 2);
  const BiorthSystem b(m);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.indices().kind(i) == IndexKind::Element) {
      const Index k = b.indices().entity(i);
      CHECK(integrate(b.psi(i).pieces.at(0).second, m->area(k)) == doctest::Approx(1.0).epsilon(1e-13));
    } else {
      const Index f = b.indices().entity(i);
      // ∫_F ψ_F ds = 1 and ∫_K ψ_F dx = 0 on both sides.
      CHECK(evaluate(face_constants(m, {{f, 1.0}}), b.psi(i)) == doctest::Approx(1.0).epsilon(1e-13));
      for (const auto& [k, p] : b.psi(i).pieces) CHECK(std::abs(integrate(p, m->area(k))) < 1e-13);
    }
  }
}

TEST_CASE("two-triangle square pairing") {
  const BiorthSystem b(unit_square());
  REQUIRE(b.size() == 3);
  const Eigen::MatrixXd P = b.dense_pairing_matrix();
  CHECK((P - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("biorthogonality on refined meshes") {
  MeshPtr m = unit_square();
  for (int r = 0; r < 4; ++r) {
    CHECK(max_identity_deviation(BiorthSystem(m)) <= 1e-12);
    m = refine_nvb_all(m);
  }
  for (int t = 0; t < 5; ++t) CHECK(max_identity_deviation(BiorthSystem(random_mesh(1, 3))) <= 1e-12);
}

TEST_CASE("pairing only touches overlapping supports") {
  const MeshPtr m = refine_uniform(unit_square(), 2);
  const BiorthSystem b(m);
  const auto P = b.pairing_matrix();
  // Row of an element: ψ_K and the ψ_F of its interior faces.
  for (std::size_t i = 0; i < m->num_elements(); ++i) {
    int interior = 0;
    for (int l = 0; l < 3; ++l) interior += m->face(m->element_face(static_cast<Index>(i), l)).interior;
    Eigen::Index nnz = 0;
    for (Eigen::Index c = 0; c < P.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(P, c); it; ++it)
        if (it.row() == static_cast<Eigen::Index>(i)) ++nnz;
    CHECK(nnz == 1 + interior);
  }
}

TEST_CASE("gradient norms against an independent rule") {
  const MeshPtr ref = Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  const BiorthSystem b(ref);
  REQUIRE(b.size() == 1);
  const double quad = grad_sq_by_quadrature(*ref, 0, b.psi(0).pieces[0].second);
  CHECK(b.psi_grad_norm(0) * b.psi_grad_norm(0) == doctest::Approx(quad).epsilon(1e-12));
  const double lq = grad_sq_by_quadrature(*ref, 0, b.bubble(0).pieces[0].second);
  CHECK(b.bubble_grad_norm(0) * b.bubble_grad_norm(0) == doctest::Approx(lq).epsilon(1e-12));
  CHECK(grad_norm(b.bubble(0)) == doctest::Approx(b.bubble_grad_norm(0)));

  const MeshPtr m = random_mesh(1, 1);
  const BiorthSystem bm(m);
  for (std::size_t i = 0; i < bm.size(); ++i) {
    double s = 0.0;
    for (const auto& [k, p] : bm.psi(i).pieces) s += grad_sq_by_quadrature(*m, k, p);
    CHECK(bm.psi_grad_norm(i) * bm.psi_grad_norm(i) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("element test functions scale with similarity") {
  MeshPtr m = Mesh::build({{0, 0}, {2, 0}, {0.5, 1.5}}, {{0, 1, 2}});
  double first = -1.0;
  for (int r = 0; r < 3; ++r) {
    const BiorthSystem b(m);
    for (std::size_t k = 0; k < m->num_elements(); ++k) {
      const auto kk = static_cast<Index>(k);
      const double v = b.psi_grad_norm(k) * std::sqrt(m->area(kk)) * m->geometry(kk).rho;
      if (first < 0) first = v;
      CHECK(v == doctest::Approx(first).epsilon(1e-10));
    }
    m = refine_uniform(m, 1);
  }
}

TEST_CASE("psi lies in the span of the bubbles") {
  const MeshPtr m = random_mesh(1, 2);
  const BiorthSystem b(m);
  const auto& idx = b.indices();
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (const auto& [k, p] : b.psi(i).pieces) {
      const Bary l{0.2, 0.45, 0.35};
      double expect;
      if (idx.kind(i) == IndexKind::Element) {
        expect = 60.0 / m->area(k) * testing::piece_value(b.bubble(i), k, l);
      } else {
        // ψ_F = (6/|F|)(λ_F - 5 Σ_{K ⊃ F} λ_K).
        const double len = m->face_length(idx.entity(i));
        expect = 6.0 / len * (testing::piece_value(b.bubble(i), k, l) - 5.0 * testing::piece_value(b.bubble(static_cast<std::size_t>(k)), k, l));
      }
      CHECK(p(l) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("chi basis functionals") {
  const MeshPtr m = refine_uniform(unit_square(), 1);
  const BiorthSystem b(m);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      CHECK(evaluate(b.chi(i), b.psi(j)) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("local stability products and scaling bounds") {
  // ⟨χ_i, ψ_i⟩ = 1 forces ‖χ_i‖·‖∇ψ_i‖ ≥ 1; the product stays bounded.
  MeshPtr m = refine_uniform(unit_square(), 1);
  std::vector<double> cmax;
  for (int r = 0; r < 6; ++r) {
    const BiorthSystem b(m);
    double c = 0.0;
    for (std::size_t z = 0; z < m->num_vertices(); ++z) {
      const auto zi = static_cast<Index>(z);
      const double hz = m->star_diameter(zi);
      for (std::size_t i : b.star_indices(zi)) {
        const double chi = oracle_dual_norm(b.chi(i), m, zi, 3).value;
        const double prod = chi * b.psi_grad_norm(i);
        CHECK(prod >= 0.95);
        c = std::max(c, prod);
        const Index e = b.indices().entity(i);
        if (b.indices().kind(i) == IndexKind::Element)
          CHECK(chi <= std::sqrt(m->area(e)) * hz);
        else
          CHECK(chi <= 2.0 * std::sqrt(m->face_length(e) * hz));
      }
    }
    cmax.push_back(c);
    m = refine_nvb_all(m);
  }
  MESSAGE("observed stability constants: " << cmax[0] << " " << cmax[1] << " " << cmax[2] << " " << cmax[3] << " "
                                            << cmax[4] << " " << cmax[5]);
  for (std::size_t r = 1; r < cmax.size(); ++r) CHECK(cmax[r] <= 1.1 * cmax[0]);
}

TEST_CASE("pairing CSV") {
  std::ostringstream os;
  write_pairing_csv(os, BiorthSystem(unit_square()));
  const std::string s = os.str();
  CHECK(s.rfind("row,col,value\n", 0) == 0);
}
