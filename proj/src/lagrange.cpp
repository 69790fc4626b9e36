#include "eosc/lagrange.hpp"

#include <mutex>

namespace eosc {

namespace {

using Table = std::vector<std::vector<std::array<std::array<double, 3>, 3>>>;

// T[a][b][i][j] = ∫ ∂_i p_a ∂_j p_b / |K|
const Table& reference_table(int degree) {
  static std::mutex mtx;
  static Table tables[3];
  std::lock_guard<std::mutex> lock(mtx);
  Table& t = tables[degree];
  if (!t.empty()) return t;
  const auto& basis = LagrangeSpace::reference_basis(degree);
  const std::size_t n = basis.size();
  t.assign(n, std::vector<std::array<std::array<double, 3>, 3>>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          t[a][b][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              integrate_product(basis[a].derivative(i), basis[b].derivative(j), 1.0);
  return t;
}

}  // namespace

const std::vector<BaryPoly>& LagrangeSpace::reference_basis(int degree) {
  static const std::vector<BaryPoly> p1 = {BaryPoly::coordinate(0), BaryPoly::coordinate(1), BaryPoly::coordinate(2)};
  static const std::vector<BaryPoly> p2 = [] {
    std::vector<BaryPoly> b;
    for (int i = 0; i < 3; ++i) {
      const BaryPoly l = BaryPoly::coordinate(i);
      b.push_back(l * (2.0 * l - BaryPoly::constant(1.0)));
    }
    for (int i = 0; i < 3; ++i)
      b.push_back(4.0 * (BaryPoly::coordinate((i + 1) % 3) * BaryPoly::coordinate((i + 2) % 3)));
    return b;
  }();
  if (degree == 1) return p1;
  if (degree == 2) return p2;
  throw std::invalid_argument("Lagrange degree must be 1 or 2");
}

LagrangeSpace make_space(const MeshPtr& mesh, int degree) {
  LagrangeSpace s;
  s.mesh = mesh;
  s.degree = degree;
  (void)LagrangeSpace::reference_basis(degree);
  const auto nv = static_cast<Index>(mesh->num_vertices());
  s.ndofs = mesh->num_vertices() + (degree == 2 ? mesh->num_faces() : 0);
  s.dofs.resize(mesh->num_elements());
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
    auto& d = s.dofs[k];
    d.fill(-1);
    for (std::size_t i = 0; i < 3; ++i) d[i] = mesh->elements()[k].v[i];
    if (degree == 2)
      for (int i = 0; i < 3; ++i) d[static_cast<std::size_t>(3 + i)] = nv + mesh->element_face(static_cast<Index>(k), i);
  }
  return s;
}

TestBasis LagrangeSpace::test_basis() const {
  const auto& basis = reference_basis(degree);
  TestBasis tb(mesh->num_elements());
  for (std::size_t k = 0; k < tb.size(); ++k)
    for (int a = 0; a < local_count(); ++a)
      tb[k].push_back({dofs[k][static_cast<std::size_t>(a)], basis[static_cast<std::size_t>(a)]});
  return tb;
}

std::vector<char> LagrangeSpace::dofs_on_faces(const std::vector<char>& faces) const {
  std::vector<char> out(ndofs, 0);
  const auto nv = mesh->num_vertices();
  for (std::size_t f = 0; f < mesh->num_faces(); ++f) {
    if (!faces[f]) continue;
    for (Index v : mesh->faces()[f].v) out[static_cast<std::size_t>(v)] = 1;
    if (degree == 2) out[nv + f] = 1;
  }
  return out;
}

Eigen::VectorXd LagrangeSpace::integrals() const {
  const auto& basis = reference_basis(degree);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ndofs));
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
    const double area = mesh->area(static_cast<Index>(k));
    for (int a = 0; a < local_count(); ++a)
      m(dofs[k][static_cast<std::size_t>(a)]) += integrate(basis[static_cast<std::size_t>(a)], area);
  }
  return m;
}

Eigen::SparseMatrix<double> LagrangeSpace::stiffness() const {
  const auto& table = reference_table(degree);
  const int n = local_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh->num_elements() * static_cast<std::size_t>(n * n));
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
    const auto kk = static_cast<Index>(k);
    const auto& g = mesh->bary_gradients(kk);
    double G[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        G[i][j] = g[static_cast<std::size_t>(i)][0] * g[static_cast<std::size_t>(j)][0] +
                  g[static_cast<std::size_t>(i)][1] * g[static_cast<std::size_t>(j)][1];
    const double area = mesh->area(kk);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const auto& t = table[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s += G[i][j] * t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        trip.emplace_back(dofs[k][static_cast<std::size_t>(a)], dofs[k][static_cast<std::size_t>(b)], area * s);
      }
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(ndofs), static_cast<Eigen::Index>(ndofs));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

double LagrangeSpace::evaluate(const Eigen::VectorXd& u, Index k, const Bary& l) const {
  const auto& basis = reference_basis(degree);
  double s = 0.0;
  for (int a = 0; a < local_count(); ++a)
    s += u(dofs[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)]) * basis[static_cast<std::size_t>(a)](l);
  return s;
}

}  // namespace eosc
