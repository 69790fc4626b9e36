#include <algorithm>
#include <sstream>

#include "support.hpp"

using namespace eosc;
using testing::random_mesh;
using testing::uniform;

namespace {

P1Function hat(const MeshPtr& m, Index z) {
  P1Function h{m, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->num_vertices()))};
  h.values(z) = 1.0;
  return h;
}

// Random element of D(M) with coefficients only on ℐ_z.
DiscretizedResidual random_star_residual(const BiorthSystem& b, Index z) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i : b.star_indices(z)) c(static_cast<Eigen::Index>(i)) = uniform();
  return DiscretizedResidual::from_coefficients(b.mesh(), b.indices(), c);
}

Load rough_load(const MeshPtr& m) {
  const MeshPtr fine = refine_uniform(m, 1);
  Load f = sine_load(fine);
  f += face_dirac_load(fine);
  f += element_constants(fine, testing::random_values(fine->num_elements()));
  return f;
}

}  // namespace

TEST_CASE("bracket of the zero residual") {
  const MeshPtr m = random_mesh(1, 1);
  const BiorthSystem b(m);
  for (const auto& br : quantify_all(DiscretizedResidual::zero(m), b)) {
    CHECK(br.lower == 0.0);
    CHECK(br.upper_raw == 0.0);
  }
  CHECK(localized_norm(DiscretizedResidual::zero(m), b) == 0.0);
}

TEST_CASE("bracket of a face functional") {
  const MeshPtr m = refine_uniform(unit_square(), 2);
  const BiorthSystem b(m);
  for (std::size_t i = m->num_elements(); i < b.size(); ++i) {
    const Face& F = m->face(b.indices().entity(i));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
    c(static_cast<Eigen::Index>(i)) = 1.0;
    const auto r = DiscretizedResidual::from_coefficients(m, b.indices(), c);
    for (Index z : F.v) {
      const Bracket br = quantify_local(r, z, b);
      const double g = b.psi_grad_norm(i);
      CHECK(br.upper_raw == doctest::Approx(1.0 / (g * g)).epsilon(1e-12));
      CHECK(br.lower == doctest::Approx(br.upper_raw / 3.0).epsilon(1e-14));
      CHECK(br.vertex == z);
      CHECK(br.midpoint() == doctest::Approx(std::sqrt(br.lower * br.upper_raw)));
    }
  }
}

TEST_CASE("oracle reproduces the norm of a hat Laplacian exactly") {
  const MeshPtr m = random_mesh(1, 2);
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    if (m->vertex(zi).on_boundary) continue;
    const P1Function h = hat(m, zi);
    const Load l = -1.0 * laplacian_load(h);
    for (int depth = 0; depth <= 3; ++depth)
      CHECK(oracle_dual_norm(l, m, zi, depth).value == doctest::Approx(energy_norm(h)).epsilon(1e-10));
    CHECK(oracle_dual_norm(l, m, zi, 1, 2).value == doctest::Approx(energy_norm(h)).epsilon(1e-10));
  }
}

TEST_CASE("oracle of element functionals obeys the scaling bound") {
  const MeshPtr m = random_mesh(1, 1);
  const BiorthSystem b(m);
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    for (Index k : m->star_elements(zi)) {
      const double v = oracle_dual_norm(b.chi(static_cast<std::size_t>(k)), m, zi, 3).value;
      CHECK(v > 0.0);
      CHECK(v <= std::sqrt(m->area(k)) * m->star_diameter(zi));
    }
  }
}

TEST_CASE("zero load") {
  const MeshPtr m = refine_uniform(unit_square(), 1);
  const Load zero = element_constants(m, std::vector<double>(m->num_elements(), 0.0));
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    CHECK(oracle_dual_norm(zero, m, static_cast<Index>(z), 2).value == 0.0);
    CHECK(oracle_hz_norm(zero, m, static_cast<Index>(z), 2).value == 0.0);
  }
  CHECK(oracle_dual_norm(zero, m, -1, 2).value == 0.0);
  CHECK(localized_norm(zero, m, 2) == 0.0);
}

TEST_CASE("oracle is monotone in depth and degree") {
  const MeshPtr m = random_mesh(1, 1);
  const Load f = rough_load(m);
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    double prev = 0.0;
    for (int depth = 0; depth <= 3; ++depth) {
      const OracleResult r = oracle_dual_norm(f, m, zi, depth);
      CHECK(r.depth == depth);
      CHECK(r.degree == 1);
      CHECK(r.value >= prev - 1e-12);
      prev = r.value;
      // P1 is a subspace of P2 on the same submesh.
      CHECK(oracle_dual_norm(f, m, zi, depth, 2).value >= r.value - 1e-12);
    }
  }
}

TEST_CASE("H_z oracle") {
  const MeshPtr m = random_mesh(2, 1);
  Load f = sine_load(m);
  f += face_dirac_load(m);
  const P1Function u = solve_galerkin(m, f);
  const Load res = f + laplacian_load(u);
  const OracleContext ctx(m, std::vector<Load>{res});
  double slack = 0.0;
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    const PatchOracle hz(ctx, zi, 2, 1, OracleKind::Hz);
    const double v = hz.norm(res).value;
    // ⟨Res, φ_z⟩ = 0: the mean constraint is compatible and its multiplier vanishes.
    if (!m->vertex(zi).on_boundary) CHECK(std::abs(hz.last_multiplier()) < 1e-10);
    const double d = PatchOracle(ctx, zi, 2).norm(res).value;
    REQUIRE(d > 0.0);
    slack = std::max(slack, v / d);
  }
  MESSAGE("max observed ‖φ_z Res‖_{H_z*} / ‖Res‖_{H⁻¹(ω_z)}: " << slack);
  CHECK(slack < 10.0);

  // The Riesz representer of an interior star has mean zero.
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    if (m->vertex(zi).on_boundary) continue;
    const PatchOracle hz(ctx, zi, 1, 1, OracleKind::Hz);
    const Eigen::VectorXd w = hz.solve(hz.rhs(res));
    double mean = 0.0;
    for (std::size_t k = 0; k < hz.submesh()->num_elements(); ++k) {
      const auto& e = hz.submesh()->element(static_cast<Index>(k));
      mean += hz.submesh()->area(static_cast<Index>(k)) * (w(e.v[0]) + w(e.v[1]) + w(e.v[2])) / 3.0;
    }
    CHECK(std::abs(mean) < 1e-12);
    break;
  }
}

TEST_CASE("localization against the global norm") {
  // Σ_z ‖ℓ‖²_{H⁻¹(ω_z)} ≤ (d+1) ‖ℓ‖²_{H⁻¹(Ω)} holds exactly for the discrete oracles.
  for (int t = 0; t < 3; ++t) {
    const MeshPtr m = random_mesh(1, 1 + t);
    const Load f = rough_load(m);
    const double loc = localized_norm(f, m, 2);
    const double glob = oracle_dual_norm(f, m, -1, 2).value;
    CHECK(loc * loc <= 3.0 * glob * glob * (1 + 1e-10));
    double s = 0.0;
    for (const auto& r : oracle_star_norms(f, m, 2)) s += r.value * r.value;
    CHECK(loc == doctest::Approx(std::sqrt(s)).epsilon(1e-14));
  }
}

TEST_CASE("localization upper bound for residuals") {
  const MeshPtr m = random_mesh(2, 1);
  Load f = sine_load(m);
  f += face_dirac_load(m);
  const P1Function u = solve_galerkin(m, f);
  const Load res = f + laplacian_load(u);
  const double loc = localized_norm(res, m, 2);
  const double glob = oracle_dual_norm(res, m, -1, 2).value;
  MESSAGE("‖Res‖² / Σ_z ‖Res‖²_z = " << glob * glob / (loc * loc));
  CHECK(glob * glob <= 3.0 * loc * loc);
}

TEST_CASE("two-sided bracket on random residuals") {
  const MeshPtr m = random_mesh(1, 2);
  const BiorthSystem b(m);
  const OracleContext ctx(m, m);
  double cmax = 0.0;
  for (std::size_t z = 0; z < m->num_vertices(); z += 3) {
    const auto zi = static_cast<Index>(z);
    const PatchOracle oracle(ctx, zi, 3);
    for (int t = 0; t < 10; ++t) {
      const auto r = random_star_residual(b, zi);
      const Bracket br = quantify_local(r, zi, b);
      const double o = oracle.norm(as_load(r)).value;
      CHECK(br.lower <= br.upper_raw);
      CHECK(o * o >= br.lower * (1 - 0.05));
      cmax = std::max(cmax, o * o / br.upper_raw);
    }
  }
  MESSAGE("max observed oracle² / S: " << cmax);
  CHECK(cmax < 10.0);
}

TEST_CASE("localized norm from brackets") {
  const MeshPtr m = random_mesh(1, 1);
  const BiorthSystem b(m);
  const auto r = testing::random_residual(m);
  double s = 0.0;
  for (const auto& br : quantify_all(r, b)) s += br.midpoint();
  CHECK(localized_norm(r, b) == doctest::Approx(std::sqrt(s)));
}

TEST_CASE("finest mesh and oracle CSV") {
  const MeshPtr a = unit_square();
  const MeshPtr b = refine_nvb_all(a);
  const MeshPtr c = refine_uniform(b, 1);
  CHECK(finest_mesh({a, c, b}) == c);
  CHECK(finest_mesh({b}) == b);
  CHECK_THROWS(finest_mesh({b, unit_square(), refine_uniform(a, 1)}));

  std::ostringstream os;
  write_oracle_csv(os, oracle_star_norms(face_dirac_load(b), b, 1));
  const std::string s = os.str();
  CHECK(s.rfind("vertex,value,depth,degree\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == 1 + b->num_vertices());
}
