#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "support.hpp"

using namespace eosc;
using testing::random_mesh;
using testing::uniform;

namespace {

const Family kFamilies[] = {Family::Hierarchical, Family::Residual, Family::LocalProblem, Family::Equilibrated};

struct Problem {
  MeshPtr mesh;
  MeshPtr background;  // red refinement of mesh carrying the load
  Load f;
  P1Function u;
};

Problem rough_problem(const MeshPtr& m) {
  const MeshPtr fine = refine_uniform(m, 1);
  Load f = sine_load(fine);
  f += face_dirac_load(fine);
  f += element_constants(fine, testing::random_values(fine->num_elements()));
  return {m, fine, f, solve_galerkin(m, f)};
}

// ‖∇(a - b)‖² restricted to the elements of `coarse` flagged in `keep`;
// a lives on a refinement of coarse, b on coarse.
double local_energy_sq(const P1Function& a, const P1Function& b, const std::vector<char>& keep) {
  const Mesh& fine = *a.mesh;
  const auto anc = ancestor_map(fine, *b.mesh);
  const P1Function d{a.mesh, a.values - prolongate(b, a.mesh).values};
  double s = 0.0;
  for (std::size_t k = 0; k < fine.num_elements(); ++k) {
    if (!keep[static_cast<std::size_t>(anc[k])]) continue;
    const auto& g = fine.bary_gradients(static_cast<Index>(k));
    double gx = 0.0, gy = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double v = d.values(fine.element(static_cast<Index>(k)).v[i]);
      gx += v * g[i][0];
      gy += v * g[i][1];
    }
    s += fine.area(static_cast<Index>(k)) * (gx * gx + gy * gy);
  }
  return s;
}

// Elements of the star of z plus one ring of neighbours.
std::vector<char> star_with_ring(const Mesh& m, Index z) {
  std::vector<char> keep(m.num_elements(), 0);
  for (Index k : m.star_elements(z))
    for (Index v : m.element(k).v)
      for (Index kk : m.star_elements(v)) keep[static_cast<std::size_t>(kk)] = 1;
  return keep;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("family names") {
  for (Family f : kFamilies) CHECK(parse_family(family_name(f)) == f);
  CHECK(parse_family("hier") == Family::Hierarchical);
  CHECK(parse_family("res") == Family::Residual);
  CHECK(parse_family("local") == Family::LocalProblem);
  CHECK(parse_family("equil") == Family::Equilibrated);
  CHECK_THROWS(parse_family("nope"));
}

TEST_CASE("exactness for discrete Laplacians") {
  const MeshPtr m = random_mesh(2, 2);
  const Load f = -1.0 * laplacian_load(testing::random_discrete(m));
  const P1Function u = solve_galerkin(m, f);
  const BiorthSystem b(m);
  for (Family fam : kFamilies) {
    const auto r = estimate(fam, f, u, b);
    for (double v : r.values) CHECK(v <= 1e-10);
  }
  for (double o : oscillation(f, b, 1)) CHECK(o < 1e-12);
}

TEST_CASE("zero residual") {
  const MeshPtr m = refine_uniform(unit_square(), 2);
  const Load f = element_constants(m, std::vector<double>(m->num_elements(), 0.0));
  const P1Function u = solve_galerkin(m, f);
  const BiorthSystem b(m);
  for (Family fam : kFamilies) {
    const auto r = estimate(fam, f, u, b);
    CHECK(r.global == 0.0);
    CHECK(r.check == 0.0);
  }
}

TEST_CASE("report invariants") {
  const auto p = rough_problem(random_mesh(1, 2));
  const BiorthSystem b(p.mesh);
  for (Family fam : kFamilies) {
    const auto r = estimate(fam, p.f, p.u, b);
    CHECK(r.family == fam);
    const bool by_vertex = fam == Family::LocalProblem || fam == Family::Equilibrated;
    CHECK(r.index_kind == (by_vertex ? "vertex" : "I"));
    CHECK(r.values.size() == (by_vertex ? p.mesh->num_vertices() : b.size()));
    for (double v : r.values) CHECK(v >= 0.0);
    CHECK(r.global * r.global == doctest::Approx(sum_sq(r.values)).epsilon(1e-12));
    // Element aggregation preserves the total.
    double agg = 0.0;
    for (double e : element_indicators(r, b)) agg += e;
    CHECK(agg == doctest::Approx(sum_sq(r.values)).epsilon(1e-12));
  }
}

TEST_CASE("hierarchical estimator: both evaluation routes agree") {
  for (int t = 0; t < 3; ++t) {
    const auto p = rough_problem(random_mesh(1, t));
    const auto r = hierarchical(p.f, p.u, BiorthSystem(p.mesh));
    CHECK(r.check <= 1e-12);
  }
}

TEST_CASE("hierarchical estimator: constant-free local bounds") {
  const auto p = rough_problem(random_mesh(1, 2));
  const BiorthSystem b(p.mesh);
  const Load res = p.f + laplacian_load(p.u);
  const auto eh = hierarchical(p.f, p.u, b);
  const auto oracle = oracle_star_norms(res, p.mesh, 2, 2);
  double worst = 0.0;
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    const double o = oracle[z].value;
    double s = 0.0;
    for (std::size_t i : b.star_indices(zi)) {
      // supp λ_i ⊂ ω_z for every i ∈ ℐ_z.
      CHECK(eh.values[i] <= o * 1.05);
      s += eh.values[i] * eh.values[i];
    }
    CHECK(s <= 3.0 * o * o * 1.05);
    if (o > 0) worst = std::max(worst, s / (o * o));
  }
  MESSAGE("max Σ_{ℐ_z} E_H² / ‖Res‖²_z: " << worst);
}

TEST_CASE("local problem estimator") {
  const auto p = rough_problem(random_mesh(1, 2));
  const BiorthSystem b(p.mesh);
  const Load res = p.f + laplacian_load(p.u);
  const auto el = local_problems(p.f, p.u, b);
  const auto oracle = oracle_star_norms(res, p.mesh, 2, 2);
  const auto br = quantify_all(discretized_residual(p.f, p.u, b), b);
  double lo = 1e300, hi = 0.0;
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
    CHECK(el.values[z] <= oracle[z].value * 1.05);
    // At least as large as every single hierarchical indicator of the star.
    for (std::size_t i : b.star_indices(static_cast<Index>(z)))
      CHECK(el.values[z] >= hierarchical(p.f, p.u, b).values[i] * (1 - 1e-12));
    const double mid = std::sqrt(br[z].midpoint());
    if (mid > 1e-14) {
      lo = std::min(lo, el.values[z] / mid);
      hi = std::max(hi, el.values[z] / mid);
    }
  }
  MESSAGE("E_L / bracket midpoint in [" << lo << ", " << hi << "]");
  CHECK(lo > 0.1);
  CHECK(hi < 10.0);
}

TEST_CASE("residual estimator against psi evaluations") {
  const auto p = rough_problem(random_mesh(1, 3));
  const BiorthSystem b(p.mesh);
  const auto er = residual(p.f, p.u, b);
  const auto r = discretized_residual(p.f, p.u, b);
  const Eigen::VectorXd c = r.coefficients(b.indices());
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double psi_eval = std::abs(c(static_cast<Eigen::Index>(i))) / b.psi_grad_norm(i);
    if (psi_eval < 1e-14) continue;
    lo = std::min(lo, er.values[i] / psi_eval);
    hi = std::max(hi, er.values[i] / psi_eval);
  }
  MESSAGE("E_R / |⟨Res_M, ψ_i/‖∇ψ_i‖⟩| in [" << lo << ", " << hi << "]");
  CHECK(lo > 0.0);
  CHECK(hi / lo < 10.0);
}

TEST_CASE("equilibrated flux estimator") {
  for (int t = 0; t < 2; ++t) {
    const auto p = rough_problem(random_mesh(1, 1 + t));
    const BiorthSystem b(p.mesh);
    const auto eq = equilibrated_flux(p.f, p.u, b);
    CHECK(eq.check <= 1e-10);
    const Load r = as_load(discretized_residual(p.f, p.u, b));
    const auto hz = oracle_star_norms(r, p.mesh, 2, 2, OracleKind::Hz);
    double c = 0.0;
    for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
      CHECK(eq.values[z] >= hz[z].value * (1 - 1e-8));
      if (hz[z].value > 1e-14) c = std::max(c, eq.values[z] / hz[z].value);
    }
    MESSAGE("max ‖Ξ_z‖ / ‖π_z(φ_z Res_M)‖_{H_z*}: " << c);
    CHECK(c < 10.0);
  }
}

TEST_CASE("oscillation") {
  const MeshPtr m = random_mesh(1, 2);
  const BiorthSystem b(m);
  // Invariance: nothing oscillates for loads in D(M).
  for (double o : oscillation(as_load(testing::random_residual(m)), b, 2)) CHECK(o < 1e-12);
  for (double o : oscillation(as_load(testing::random_residual(m)), b, 1, true)) CHECK(o < 1e-12);

  // Piecewise constants on a refinement: error-dominated oscillation versus osc₀.
  const MeshPtr fine = refine_uniform(m, 1);
  const Load f = element_constants(fine, testing::random_values(fine->num_elements()));
  const double osc = std::sqrt(sum_sq(oscillation(f, b, 2)));
  const double osc0 = classical_osc0(f, m).global;
  MESSAGE("Σ_z osc_z² / osc₀² = " << osc * osc / (osc0 * osc0));
  CHECK(osc <= osc0);
}

TEST_CASE("oscillation is dominated by the error") {
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const auto p = rough_problem(random_mesh(1, t));
    const BiorthSystem b(p.mesh);
    const double osc2 = sum_sq(oscillation(p.f, b, 2));
    const P1Function uref = solve_galerkin(refine_uniform(p.background, 2), p.f);
    const double err = energy_norm_difference(uref, p.u);
    worst = std::max(worst, osc2 / (err * err));
  }
  MESSAGE("max Σ_z osc² / ‖∇(u - U)‖²: " << worst);
  CHECK(worst < 3.0);
}

TEST_CASE("global reliability and local efficiency") {
  const auto p = rough_problem(random_mesh(1, 2));
  const BiorthSystem b(p.mesh);
  const MeshPtr ref_mesh = refine_uniform(p.background, 2);
  const P1Function uref = solve_galerkin(ref_mesh, p.f);
  const double err2 = std::pow(energy_norm_difference(uref, p.u), 2);
  const auto osc = oscillation(p.f, b, 2);
  const auto osc_hz = oscillation(p.f, b, 2, true);
  const double osc2 = sum_sq(osc);
  for (Family fam : kFamilies) {
    const auto r = estimate(fam, p.f, p.u, b);
    const double rel = err2 / (r.global * r.global + osc2);
    MESSAGE(family_name(fam) << ": ‖∇(u - U)‖² / (η² + osc²) = " << rel);
    CHECK(rel < 10.0);
    const auto elem = element_indicators(r, b);
    double eff = 0.0;
    for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
      const auto zi = static_cast<Index>(z);
      const auto keep = star_with_ring(*p.mesh, zi);
      double eta2 = 0.0;
      for (Index k : p.mesh->star_elements(zi)) eta2 += elem[static_cast<std::size_t>(k)];
      const double loc = local_energy_sq(uref, p.u, keep);
      if (loc > 0) eff = std::max(eff, (eta2 + osc[z] * osc[z]) / loc);
    }
    MESSAGE(family_name(fam) << ": max local (η² + osc²) / ‖∇(u - U)‖²_ring = " << eff);
    CHECK(eff < 50.0);
  }
  // Prager-Synge type bound without unknown constants.
  const auto eq = equilibrated_flux(p.f, p.u, b);
  double bound = 0.0;
  for (std::size_t z = 0; z < eq.values.size(); ++z) bound += std::pow(eq.values[z] + osc_hz[z], 2);
  bound *= 3.0;
  MESSAGE("sqrt(bound) / error = " << std::sqrt(bound / err2));
  CHECK(err2 <= bound);
}

TEST_CASE("classical oscillation") {
  const MeshPtr tri = Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  CHECK(classical_osc0(element_constants(tri, {3.0}), tri).global == 0.0);
  // f = x: h_K² ∫(x - 1/3)² = 2·(1/12 - 1/18) = 1/18.
  const Load fx(interpolate_elements(tri, [](double x, double) { return x; }, 1));
  const auto o = classical_osc0(fx, tri);
  CHECK(o.global * o.global == doctest::Approx(1.0 / 18.0).epsilon(1e-13));
  REQUIRE(o.per_element.size() == 1);
  CHECK(o.per_element[0] == doctest::Approx(o.global));
  // Background finer than the mesh.
  const MeshPtr fine = refine_uniform(tri, 2);
  const Load ff(interpolate_elements(fine, [](double x, double) { return x; }, 1));
  CHECK(classical_osc0(ff, tri).global == doctest::Approx(o.global).epsilon(1e-13));
  const MeshPtr sq = unit_square();
  CHECK_THROWS_AS(classical_osc0(element_constants(sq, {1.0, 2.0}) + face_dirac_load(sq), sq), LoadError);
}

TEST_CASE("report CSV and JSON") {
  const auto p = rough_problem(refine_uniform(unit_square(), 1));
  const auto r = local_problems(p.f, p.u, BiorthSystem(p.mesh));
  std::ostringstream os;
  write_report_csv(os, r);
  const std::string s = os.str();
  CHECK(s.rfind("family,index_kind,index,value\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == 1 + r.values.size());
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j.at("family") == family_name(r.family));
  CHECK(j.at("global").get<double>() == doctest::Approx(r.global));
  CHECK(j.at("count").get<std::size_t>() == r.values.size());
}
