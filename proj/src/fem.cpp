#include "eosc/fem.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "eosc/lagrange.hpp"

namespace eosc {

Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto kk = static_cast<Index>(k);
    const auto& g = mesh.bary_gradients(kk);
    const double area = mesh.area(kk);
    const auto& v = mesh.element(kk).v;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        trip.emplace_back(v[i], v[j], area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

TestBasis p1_test_basis(const Mesh& mesh) {
  TestBasis tb(mesh.num_elements());
  for (std::size_t k = 0; k < tb.size(); ++k)
    for (int i = 0; i < 3; ++i) tb[k].push_back({mesh.elements()[k].v[static_cast<std::size_t>(i)], BaryPoly::coordinate(i)});
  return tb;
}

Eigen::VectorXd load_vector(const Load& f, const MeshPtr& mesh) {
  const auto v = evaluate_many(f, *mesh, p1_test_basis(*mesh), mesh->num_vertices());
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

LinearSystem assemble(const MeshPtr& mesh, const Load& f) {
  const Eigen::SparseMatrix<double> A = stiffness_matrix(*mesh);
  const Eigen::VectorXd b = load_vector(f, mesh);
  const auto& idx = mesh->interior_index();
  LinearSystem sys;
  const auto n = static_cast<Eigen::Index>(mesh->num_interior_vertices());
  sys.vertices.resize(static_cast<std::size_t>(n));
  for (std::size_t z = 0; z < idx.size(); ++z)
    if (idx[z] >= 0) sys.vertices[static_cast<std::size_t>(idx[z])] = static_cast<Index>(z);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index c = 0; c < A.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
      const Index r = idx[static_cast<std::size_t>(it.row())];
      const Index cc = idx[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
    }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.rhs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) sys.rhs(i) = b(sys.vertices[static_cast<std::size_t>(i)]);
  return sys;
}

P1Function solve_galerkin(const MeshPtr& mesh, const Load& f) {
  P1Function u{mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->num_vertices()))};
  if (mesh->num_interior_vertices() == 0) return u;
  const LinearSystem sys = assemble(mesh, f);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys.matrix);
  if (solver.info() != Eigen::Success) throw SolverError("Galerkin factorization failed", NAN);
  const Eigen::VectorXd x = solver.solve(sys.rhs);
  const double res = (sys.matrix * x - sys.rhs).norm();
  if (solver.info() != Eigen::Success || !(res <= 1e-10 * std::max(1.0, sys.rhs.norm())))
    throw SolverError("Galerkin solve did not converge", res);
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) u.values(sys.vertices[i]) = x(static_cast<Eigen::Index>(i));
  return u;
}

std::vector<double> normal_jumps(const P1Function& u) {
  const Mesh& m = *u.mesh;
  std::vector<double> jumps(m.num_faces(), 0.0);
  auto grad = [&](Index k) {
    const auto& g = m.bary_gradients(k);
    std::array<double, 2> d{0.0, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
      const double val = u.values(m.element(k).v[i]);
      d[0] += val * g[i][0];
      d[1] += val * g[i][1];
    }
    return d;
  };
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    const Face& F = m.faces()[f];
    if (!F.interior) continue;
    double s = 0.0;
    for (std::size_t side = 0; side < 2; ++side) {
      const auto d = grad(F.elements[side]);
      const auto n = m.outward_normal(F.elements[side], F.local[side]);
      s += d[0] * n[0] + d[1] * n[1];
    }
    jumps[f] = -s;
  }
  return jumps;
}

Load laplacian_load(const P1Function& v) {
  const auto j = normal_jumps(v);
  std::map<Index, double> vals;
  for (std::size_t f = 0; f < j.size(); ++f)
    if (v.mesh->faces()[f].interior) vals[static_cast<Index>(f)] = j[f];
  return face_constants(v.mesh, vals);
}

double energy_norm(const P1Function& u) {
  const Eigen::SparseMatrix<double> A = stiffness_matrix(*u.mesh);
  return std::sqrt(std::max(0.0, u.values.dot(A * u.values)));
}

P1Function prolongate(const P1Function& coarse, const MeshPtr& fine) {
  const auto anc = ancestor_map(*fine, *coarse.mesh);
  P1Function out{fine, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fine->num_vertices()))};
  std::vector<char> done(fine->num_vertices(), 0);
  for (std::size_t k = 0; k < fine->num_elements(); ++k) {
    const Index kc = anc[k];
    for (Index v : fine->elements()[k].v) {
      if (done[static_cast<std::size_t>(v)]) continue;
      const Bary l = coarse.mesh->barycentric(kc, fine->point(v));
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += l[i] * coarse.values(coarse.mesh->element(kc).v[i]);
      out.values(v) = s;
      done[static_cast<std::size_t>(v)] = 1;
    }
  }
  return out;
}

double energy_norm_difference(const P1Function& a, const P1Function& b) {
  if (a.mesh->id() == b.mesh->id()) return energy_norm({a.mesh, a.values - b.values});
  if (descends_from(*a.mesh, *b.mesh)) return energy_norm({a.mesh, a.values - prolongate(b, a.mesh).values});
  if (descends_from(*b.mesh, *a.mesh)) return energy_norm({b.mesh, prolongate(a, b.mesh).values - b.values});
  throw MeshError("mesh", static_cast<Index>(a.mesh->id()), "mesh mismatch: neither mesh refines the other");
}

PiecewisePoly hat_function(const MeshPtr& mesh, Index z) {
  PiecewisePoly p{mesh, {}};
  for (Index k : mesh->star_elements(z)) p.pieces.emplace_back(k, BaryPoly::coordinate(mesh->local_index(k, z)));
  return p;
}

P1Function interpolate_p1(const MeshPtr& mesh, const ScalarFunction& g, bool zero_boundary) {
  P1Function u{mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->num_vertices()))};
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    const auto& v = mesh->vertices()[z];
    if (zero_boundary && v.on_boundary) continue;
    u.values(static_cast<Eigen::Index>(z)) = g(v.coords.x, v.coords.y);
  }
  return u;
}

void write_solution_csv(std::ostream& os, const P1Function& u) {
  os << "vertex_id,x,y,value\n" << std::setprecision(17);
  for (std::size_t z = 0; z < u.mesh->num_vertices(); ++z) {
    const auto& p = u.mesh->vertices()[z].coords;
    os << z << ',' << p.x << ',' << p.y << ',' << u.values(static_cast<Eigen::Index>(z)) << '\n';
  }
}

}  // namespace eosc
