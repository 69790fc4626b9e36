#include "support.hpp"

using namespace eosc;
using testing::random_mesh;
using testing::uniform;

namespace {

// ∇V per element as a constant divergence field.
DivergenceField gradient_field(const P1Function& v) {
  const Mesh& m = *v.mesh;
  DivergenceField d{v.mesh, {}};
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const auto& g = m.bary_gradients(static_cast<Index>(k));
    std::array<double, 2> grad{0, 0};
    for (int i = 0; i < 3; ++i) {
      const double vi = v.values(m.element(static_cast<Index>(k)).v[static_cast<std::size_t>(i)]);
      grad[0] += vi * g[static_cast<std::size_t>(i)][0];
      grad[1] += vi * g[static_cast<std::size_t>(i)][1];
    }
    d.field.push_back({BaryPoly::constant(grad[0]), BaryPoly::constant(grad[1])});
  }
  return d;
}

// P1 function of the coarse mesh, re-expressed on a refinement.
PiecewisePoly on_fine(const P1Function& coarse, const MeshPtr& fine) {
  return testing::p1_as_poly(prolongate(coarse, fine));
}

}  // namespace

TEST_CASE("barycentric integral formula") {
  CHECK(integrate_barycentric(0.7, {1, 0, 0}) == doctest::Approx(0.7 / 3));
  CHECK(integrate_barycentric(0.7, {0, 0, 0}) == doctest::Approx(0.7));
  CHECK(integrate_barycentric(0.7, {2, 1, 0}) == doctest::Approx(0.7 / 30));
  // Independent rule on the reference triangle.
  double q = 0.0;
  for (const auto& [l, w] : testing::reference_rule()) q += w * l[0] * l[0] * l[1];
  CHECK(q == doctest::Approx(1.0 / 30).epsilon(1e-13));
  CHECK(integrate_barycentric_segment(2.0, 1, 1) == doctest::Approx(2.0 / 6));
}

TEST_CASE("library quadrature rules") {
  double s = 0.0;
  for (const auto& q : triangle_rule()) s += q.weight * std::pow(q.bary[0], 4) * std::pow(q.bary[1], 3) * q.bary[2];
  CHECK(s == doctest::Approx(integrate_barycentric(1.0, {4, 3, 1})).epsilon(1e-13));
  double t = 0.0;
  for (const auto& q : segment_rule()) t += q.weight * std::pow(q.bary[0], 5) * std::pow(q.bary[1], 4);
  CHECK(t == doctest::Approx(integrate_barycentric_segment(1.0, 5, 4)).epsilon(1e-13));
}

TEST_CASE("BaryPoly algebra") {
  const BaryPoly p = BaryPoly::coordinate(0) * BaryPoly::coordinate(1) + 2.0 * BaryPoly::constant(1.0);
  const Bary l{0.2, 0.3, 0.5};
  CHECK(p(l) == doctest::Approx(0.06 + 2.0));
  CHECK(p.degree() == 2);
  CHECK(p.derivative(0)(l) == doctest::Approx(0.3));
  CHECK((p - p).is_zero());
  // Composition with a random affine change of coordinates.
  std::array<Bary, 3> cols;
  for (auto& c : cols) {
    const double a = uniform(0, 1), b = uniform(0, 1 - a);
    c = {a, b, 1 - a - b};
  }
  const BaryPoly q = (p * p).compose(cols);
  Bary img{0, 0, 0};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) img[i] += cols[j][i] * l[j];
  CHECK(q(l) == doctest::Approx(p(img) * p(img)).epsilon(1e-13));
}

TEST_CASE("element density against a hat") {
  const MeshPtr m = refine_uniform(unit_square(), 1);
  for (std::size_t z = 0; z < m->num_vertices(); ++z) {
    const auto zi = static_cast<Index>(z);
    const auto st = m->star_elements(zi);
    std::vector<double> ones(m->num_elements(), 0.0);
    ones[static_cast<std::size_t>(st[0])] = 1.0;
    CHECK(evaluate(element_constants(m, ones), hat_function(m, zi)) == doctest::Approx(m->area(st[0]) / 3));
  }
}

TEST_CASE("face density against a function vanishing on the face") {
  const MeshPtr m = refine_uniform(unit_square(), 1);
  for (std::size_t f = 0; f < m->num_faces(); ++f) {
    const Face& F = m->face(static_cast<Index>(f));
    if (!F.interior) continue;
    for (std::size_t z = 0; z < m->num_vertices(); ++z) {
      if (static_cast<Index>(z) == F.v[0] || static_cast<Index>(z) == F.v[1]) continue;
      CHECK(evaluate(face_dirac_load(m, static_cast<Index>(f)), hat_function(m, static_cast<Index>(z))) == 0.0);
    }
  }
}

TEST_CASE("divergence field of a gradient") {
  const MeshPtr m = random_mesh(2, 2);
  const P1Function v = testing::random_discrete(m);
  const double pairing = evaluate(Load(gradient_field(v)), testing::p1_as_poly(v));
  const auto A = stiffness_matrix(*m);
  CHECK(pairing == doctest::Approx(-v.values.dot(A * v.values)).epsilon(1e-12));
}

TEST_CASE("evaluate is bilinear") {
  const MeshPtr m = random_mesh(1, 2);
  const Load f1 = element_constants(m, testing::random_values(m->num_elements()));
  Load f2 = sine_load(m);
  f2 += face_dirac_load(m);
  const P1Function v1 = testing::random_discrete(m), v2 = testing::random_discrete(m);
  const double a = uniform(), b = uniform();
  const Load fc = a * f1 + b * f2;
  const double lhs = evaluate(fc, testing::p1_as_poly(v1));
  const double rhs = a * evaluate(f1, testing::p1_as_poly(v1)) + b * evaluate(f2, testing::p1_as_poly(v1));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  P1Function vc{m, a * v1.values + b * v2.values};
  const double l2 = evaluate(f2, testing::p1_as_poly(vc));
  const double r2 = a * evaluate(f2, testing::p1_as_poly(v1)) + b * evaluate(f2, testing::p1_as_poly(v2));
  CHECK(l2 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("L2 loads agree with physical-space quadrature") {
  const MeshPtr m = random_mesh(1, 2);
  // A quadratic is reproduced exactly by the P2 interpolant.
  auto g = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y * y + x * y; };
  const Load f(interpolate_elements(m, g, 2));
  const P1Function v = testing::random_discrete(m);
  double ref = 0.0;
  for (std::size_t k = 0; k < m->num_elements(); ++k) {
    const auto kk = static_cast<Index>(k);
    const auto& e = m->element(kk);
    for (const auto& [l, w] : testing::reference_rule()) {
      const Point p = m->map_point(kk, l);
      double vv = 0.0;
      for (int i = 0; i < 3; ++i) vv += l[static_cast<std::size_t>(i)] * v.values(e.v[static_cast<std::size_t>(i)]);
      ref += w * m->area(kk) * g(p.x, p.y) * vv;
    }
  }
  CHECK(evaluate(f, testing::p1_as_poly(v)) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("refinement consistency in both directions") {
  const MeshPtr coarse = refine_uniform(unit_square(), 1);
  const MeshPtr fine = refine_nvb_all(refine_nvb_all(coarse));
  const P1Function v = testing::random_discrete(coarse);

  // Background coarse, test on both meshes.
  Load fc = sine_load(coarse);
  fc += face_dirac_load(coarse);
  const double on_coarse = evaluate(fc, testing::p1_as_poly(v));
  CHECK(evaluate(fc, on_fine(v, fine)) == doctest::Approx(on_coarse).epsilon(1e-12));

  // Background fine, test on the coarse mesh.
  Load ff = sine_load(fine);
  ff += face_dirac_load(fine);
  ff += element_constants(fine, testing::random_values(fine->num_elements()));
  CHECK(evaluate(ff, testing::p1_as_poly(v)) == doctest::Approx(evaluate(ff, on_fine(v, fine))).epsilon(1e-12));

  // Evaluation through evaluate_many with the P1 basis matches.
  const auto many = evaluate_many(ff, *coarse, p1_test_basis(*coarse), coarse->num_vertices());
  double s = 0.0;
  for (std::size_t z = 0; z < coarse->num_vertices(); ++z) s += many[z] * v.values(static_cast<Eigen::Index>(z));
  CHECK(s == doctest::Approx(evaluate(ff, testing::p1_as_poly(v))).epsilon(1e-12));
}

TEST_CASE("load errors") {
  const MeshPtr a = unit_square();
  const MeshPtr b = unit_square();
  const Load fa = element_constants(a, {1.0, 2.0});
  CHECK_THROWS_AS(evaluate(fa, hat_function(b, 0)), LoadError);
  // Degree 8 density times a hat exceeds the exact rule.
  ElementDensity d{a, {BaryPoly::monomial({8, 0, 0}), BaryPoly()}};
  CHECK_THROWS_AS(evaluate(Load(d), hat_function(a, 0)), LoadError);
}

TEST_CASE("interpolation reproduces polynomials") {
  const MeshPtr m = random_mesh(1, 1);
  auto g = [](double x, double y) { return x * x * x * y - 2 * y * y * y * y + x; };
  const ElementDensity d = interpolate_elements(m, g, 4);
  for (std::size_t k = 0; k < m->num_elements(); ++k) {
    const Bary l{0.1, 0.3, 0.6};
    const Point p = m->map_point(static_cast<Index>(k), l);
    CHECK(d.density[k](l) == doctest::Approx(g(p.x, p.y)).epsilon(1e-12));
  }
  CHECK(load_degree(Load(d)) == 4);
}
