#include "eosc/dualnorm.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "eosc/fem.hpp"

namespace eosc {

double Bracket::midpoint() const { return std::sqrt(lower * upper_raw); }

Bracket quantify_local(const DiscretizedResidual& r, Index z, const BiorthSystem& b) {
  Bracket br;
  br.vertex = z;
  double S = 0.0;
  for (std::size_t i : b.star_indices(z)) {
    const Index e = b.indices().entity(i);
    // ⟨r, ψ_i⟩ = c_i by biorthogonality.
    const double c = b.indices().kind(i) == IndexKind::Element ? r.element[static_cast<std::size_t>(e)]
                                                               : r.face[static_cast<std::size_t>(e)];
    const double t = c / b.psi_grad_norm(i);
    S += t * t;
  }
  br.upper_raw = S;
  br.lower = S / (kDim + 1);
  return br;
}

std::vector<Bracket> quantify_all(const DiscretizedResidual& r, const BiorthSystem& b) {
  std::vector<Bracket> out;
  for (std::size_t z = 0; z < b.mesh()->num_vertices(); ++z) out.push_back(quantify_local(r, static_cast<Index>(z), b));
  return out;
}

MeshPtr finest_mesh(const std::vector<MeshPtr>& meshes) {
  MeshPtr best;
  for (const auto& m : meshes) {
    if (!m) continue;
    if (!best || descends_from(*m, *best)) {
      best = m;
    } else if (!descends_from(*best, *m)) {
      throw MeshError("mesh", static_cast<Index>(m->id()), "incompatible mesh: meshes are not nested");
    }
  }
  return best;
}

OracleContext::OracleContext(MeshPtr mesh, MeshPtr base) : mesh_(std::move(mesh)), base_(std::move(base)) {
  if (!base_) base_ = mesh_;
  ancestor_ = ancestor_map(*base_, *mesh_);
  children_.resize(mesh_->num_elements());
  for (std::size_t k = 0; k < ancestor_.size(); ++k)
    children_[static_cast<std::size_t>(ancestor_[k])].push_back(static_cast<Index>(k));
}

namespace {
MeshPtr base_for(const MeshPtr& mesh, const std::vector<Load>& loads) {
  std::vector<MeshPtr> ms{mesh};
  for (const auto& l : loads) ms.push_back(l.background());
  return finest_mesh(ms);
}
}  // namespace

OracleContext::OracleContext(MeshPtr mesh, const std::vector<Load>& loads)
    : OracleContext(mesh, base_for(mesh, loads)) {}

struct PatchOracle::Factor {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::Index n = 0;
};

PatchOracle::~PatchOracle() = default;
PatchOracle::PatchOracle(PatchOracle&&) noexcept = default;

PatchOracle::PatchOracle(const OracleContext& ctx, Index z, int depth, int degree, OracleKind kind)
    : z_(z), depth_(depth), kind_(kind) {
  const Mesh& M = *ctx.mesh();
  if (kind == OracleKind::Hz && z < 0) throw std::invalid_argument("H_z oracle needs a vertex");
  MeshPtr region;
  if (z < 0) {
    region = ctx.base();
  } else {
    std::vector<Index> elems;
    for (Index k : M.star_elements(z))
      for (Index kb : ctx.children(k)) elems.push_back(kb);
    region = extract_submesh(ctx.base(), elems);
  }
  sub_ = depth > 0 ? refine_uniform(region, depth) : region;
  space_ = make_space(sub_, degree);
  tests_ = space_.test_basis();
  integrals_ = space_.integrals();
  for (std::size_t k = 0; k < sub_->num_elements(); ++k) region_area_ += sub_->area(static_cast<Index>(k));

  const Mesh& T = *sub_;
  std::vector<char> fixed_faces(T.num_faces(), 0);
  if (kind == OracleKind::Dirichlet) {
    for (std::size_t f = 0; f < T.num_faces(); ++f) fixed_faces[f] = !T.faces()[f].interior;
  } else {
    const auto anc = ancestor_map(T, M);
    // φ_z weighting of every local test function.
    for (std::size_t k = 0; k < T.num_elements(); ++k) {
      const Index K = anc[k];
      const int lz = M.local_index(K, z);
      const auto cols = bary_map(T, static_cast<Index>(k), M, K);
      BaryPoly phi;
      for (int j = 0; j < 3; ++j) {
        Exponent e{0, 0, 0};
        e[static_cast<std::size_t>(j)] = 1;
        phi.add_term(e, cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(lz)]);
      }
      for (auto& lt : tests_[k]) lt.poly = phi * lt.poly;
    }
    neumann_ = !M.vertex(z).on_boundary;
    if (!neumann_) {
      for (std::size_t f = 0; f < T.num_faces(); ++f) {
        const Face& F = T.faces()[f];
        if (F.interior) continue;
        const Index K = anc[static_cast<std::size_t>(F.elements[0])];
        const Bary a = M.barycentric(K, T.point(F.v[0]));
        const Bary b = M.barycentric(K, T.point(F.v[1]));
        for (int j = 0; j < 3; ++j)
          if (std::abs(a[static_cast<std::size_t>(j)]) < 1e-12 && std::abs(b[static_cast<std::size_t>(j)]) < 1e-12 &&
              !M.face(M.element_face(K, j)).interior)
            fixed_faces[f] = 1;
      }
    }
  }

  const auto fixed = space_.dofs_on_faces(fixed_faces);
  free_.assign(space_.ndofs, -1);
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < space_.ndofs; ++i)
    if (!fixed[i]) free_[i] = static_cast<Index>(n++);

  // Pure Neumann: pin one dof. With the load shifted to mean zero the
  // pinned row is implied by the others, so b·w is unaffected.
  if (neumann_) {
    pinned_ = -1;
    for (std::size_t i = 0; i < space_.ndofs && pinned_ < 0; ++i)
      if (free_[i] >= 0) pinned_ = static_cast<Index>(i);
    if (pinned_ < 0) throw SolverError("H_z oracle has no free dof", NAN);
    n = 0;
    for (std::size_t i = 0; i < space_.ndofs; ++i)
      if (free_[i] >= 0) free_[i] = static_cast<Index>(i) == pinned_ ? -1 : static_cast<Index>(n++);
  }

  const Eigen::SparseMatrix<double> A = space_.stiffness();
  factor_ = std::make_unique<Factor>();
  factor_->n = n;
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index c = 0; c < A.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
      const Index r = free_[static_cast<std::size_t>(it.row())];
      const Index cc = free_[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
    }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  factor_->ldlt.compute(K);
  if (factor_->ldlt.info() != Eigen::Success) throw SolverError("oracle factorization failed", NAN);
}

Eigen::VectorXd PatchOracle::rhs(const Load& l) const {
  const auto v = evaluate_many(l, *sub_, tests_, space_.ndofs);
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  if (neumann_) b -= (b.sum() / region_area_) * integrals_;
  return b;
}

Eigen::VectorXd PatchOracle::solve(const Eigen::VectorXd& b) const {
  const Eigen::Index n = factor_->n;
  Eigen::VectorXd rb = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < free_.size(); ++i)
    if (free_[i] >= 0) rb(free_[i]) = b(static_cast<Eigen::Index>(i));
  const Eigen::VectorXd x = factor_->ldlt.solve(rb);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(b.size());
  for (std::size_t i = 0; i < free_.size(); ++i)
    if (free_[i] >= 0) w(static_cast<Eigen::Index>(i)) = x(free_[i]);
  if (neumann_) {
    // Multiplier of the mean-value constraint: Σ_i b_i = μ |ω|.
    last_multiplier_ = b.sum() / region_area_;
    w.array() -= w.dot(integrals_) / region_area_;
  }
  return w;
}

OracleResult PatchOracle::norm(const Load& l) const {
  const Eigen::VectorXd b = rhs(l);
  const Eigen::VectorXd w = solve(b);
  if (neumann_ && std::abs(last_multiplier_) > 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()))
    throw SolverError("H_z oracle: mean-zero multiplier does not vanish", last_multiplier_);
  return {std::sqrt(std::max(0.0, b.dot(w))), depth_, space_.degree};
}

Eigen::MatrixXd PatchOracle::gram(const std::vector<Load>& loads) const {
  const auto m = static_cast<Eigen::Index>(loads.size());
  Eigen::MatrixXd B(static_cast<Eigen::Index>(space_.ndofs), m), W(static_cast<Eigen::Index>(space_.ndofs), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    B.col(j) = rhs(loads[static_cast<std::size_t>(j)]);
    W.col(j) = solve(B.col(j));
  }
  Eigen::MatrixXd G = B.transpose() * W;
  return 0.5 * (G + G.transpose());
}

OracleResult oracle_dual_norm(const Load& l, const MeshPtr& mesh, Index z, int depth, int degree) {
  const OracleContext ctx(mesh, std::vector<Load>{l});
  return PatchOracle(ctx, z, depth, degree).norm(l);
}

OracleResult oracle_hz_norm(const Load& l, const MeshPtr& mesh, Index z, int depth, int degree) {
  const OracleContext ctx(mesh, std::vector<Load>{l});
  return PatchOracle(ctx, z, depth, degree, OracleKind::Hz).norm(l);
}

std::vector<OracleResult> oracle_star_norms(const Load& l, const MeshPtr& mesh, int depth, int degree, OracleKind kind) {
  const OracleContext ctx(mesh, std::vector<Load>{l});
  std::vector<OracleResult> out;
  out.reserve(mesh->num_vertices());
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    out.push_back(PatchOracle(ctx, static_cast<Index>(z), depth, degree, kind).norm(l));
  return out;
}

double localized_norm(const DiscretizedResidual& r, const BiorthSystem& b) {
  double s = 0.0;
  for (const auto& br : quantify_all(r, b)) s += br.midpoint();
  return std::sqrt(s);
}

double localized_norm(const Load& l, const MeshPtr& mesh, int depth, int degree) {
  double s = 0.0;
  for (const auto& o : oracle_star_norms(l, mesh, depth, degree)) s += o.value * o.value;
  return std::sqrt(s);
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleResult>& values) {
  os << "vertex,value,depth,degree\n" << std::setprecision(17);
  for (std::size_t z = 0; z < values.size(); ++z)
    os << z << ',' << values[z].value << ',' << values[z].depth << ',' << values[z].degree << '\n';
}

}  // namespace eosc
