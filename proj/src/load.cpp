#include "eosc/load.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

#include "eosc/quadrature.hpp"

namespace eosc {

namespace {

constexpr double kOnEdgeTol = 1e-12;

void check_degree(int deg, int limit, const char* where) {
  if (deg > limit)
    throw LoadError(std::string("degree overflow in ") + where + ": " + std::to_string(deg) + " > " +
                    std::to_string(limit));
}

// Segment polynomial restriction of p (on an element) using columns for (μ0, μ1).
BaryPoly restrict_with(const BaryPoly& p, const Bary& c0, const Bary& c1) {
  return p.compose({c0, c1, Bary{0.0, 0.0, 0.0}});
}

const MeshPtr& term_background(const LoadTerm& t) {
  return std::visit([](const auto& x) -> const MeshPtr& { return x.background; }, t);
}

struct Relation {
  bool test_finer = true;      // the test mesh refines (or equals) the background
  std::vector<Index> ancestor;  // finer element -> coarser element
};

Relation relate(const Mesh& test, const Mesh& background) {
  Relation r;
  if (descends_from(test, background)) {
    r.test_finer = true;
    r.ancestor = ancestor_map(test, background);
  } else if (descends_from(background, test)) {
    r.test_finer = false;
    r.ancestor = ancestor_map(background, test);
  } else {
    throw LoadError("incompatible mesh: load background and test mesh are not nested");
  }
  return r;
}

// Triangle rules (n = 1..5) with the powers of their barycentric coordinates.
constexpr std::size_t kRulePoints = 25;
using PointPowers = std::array<std::array<double, kTriangleExactDegree + 1>, 3>;

struct PoweredRule {
  const std::vector<QuadPoint>* rule;
  std::vector<PointPowers> pw;
};

// Smallest rule exact for `degree`.
const PoweredRule& powered_rule(int degree) {
  static const std::array<PoweredRule, 5> table = [] {
    std::array<PoweredRule, 5> t;
    for (int n = 1; n <= 5; ++n) {
      auto& r = t[static_cast<std::size_t>(n - 1)];
      r.rule = &triangle_rule(n);
      r.pw.resize(r.rule->size());
      for (std::size_t q = 0; q < r.rule->size(); ++q)
        for (std::size_t i = 0; i < 3; ++i) {
          r.pw[q][i][0] = 1.0;
          for (std::size_t p = 1; p <= kTriangleExactDegree; ++p)
            r.pw[q][i][p] = r.pw[q][i][p - 1] * (*r.rule)[q].bary[i];
        }
    }
    return t;
  }();
  const int n = std::clamp((degree + 3) / 2, 1, 5);
  return table[static_cast<std::size_t>(n - 1)];
}

bool identity_map(const Mesh& a, const Mesh& b) { return a.id() == b.id(); }

std::array<Bary, 3> identity_columns() { return {Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}}; }

void add_element_density(const ElementDensity& t, const Mesh& mesh, const TestBasis& tests,
                         std::vector<double>& out) {
  const Mesh& bg = *t.background;
  if (t.density.size() != bg.num_elements()) throw LoadError("element density size mismatch");
  const Relation rel = relate(mesh, bg);
  const bool same = identity_map(mesh, bg);
  if (rel.test_finer) {
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
      const auto& tk = tests[k];
      if (tk.empty()) continue;
      const Index kc = rel.ancestor[k];
      const BaryPoly& g = t.density[static_cast<std::size_t>(kc)];
      if (g.is_zero()) continue;
      const double area = mesh.area(static_cast<Index>(k));
      if (same) {
        for (const auto& lt : tk) {
          check_degree(g.degree() + lt.poly.degree(), kTriangleExactDegree, "element density");
          out[static_cast<std::size_t>(lt.dof)] += integrate_product(g, lt.poly, area);
        }
        continue;
      }
      // Composition is costly; the rule is exact up to the checked degree.
      const int gd = g.degree();
      int td = 0;
      for (const auto& lt : tk) td = std::max(td, lt.poly.degree());
      check_degree(gd + td, kTriangleExactDegree, "element density");
      const auto cols = bary_map(mesh, static_cast<Index>(k), bg, kc);
      const auto& pr = powered_rule(gd + td);
      const auto& rule = *pr.rule;
      const auto& pw = pr.pw;
      std::array<double, kRulePoints> gv{};
      for (std::size_t iq = 0; iq < rule.size(); ++iq) {
        Bary lc{0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < 3; ++j)
          for (std::size_t i = 0; i < 3; ++i) lc[i] += cols[j][i] * rule[iq].bary[j];
        gv[iq] = g(lc) * rule[iq].weight * area;
      }
      for (const auto& lt : tk) {
        double s = 0.0;
        for (const auto& m : lt.poly.terms()) {
          double t = 0.0;
          for (std::size_t iq = 0; iq < rule.size(); ++iq)
            t += gv[iq] * pw[iq][0][m.exp[0]] * pw[iq][1][m.exp[1]] * pw[iq][2][m.exp[2]];
          s += m.coef * t;
        }
        out[static_cast<std::size_t>(lt.dof)] += s;
      }
    }
  } else {
    for (std::size_t k = 0; k < bg.num_elements(); ++k) {
      const BaryPoly& g = t.density[k];
      if (g.is_zero()) continue;
      const Index kc = rel.ancestor[k];
      const auto& tk = tests[static_cast<std::size_t>(kc)];
      if (tk.empty()) continue;
      const auto cols = bary_map(bg, static_cast<Index>(k), mesh, kc);
      const double area = bg.area(static_cast<Index>(k));
      for (const auto& lt : tk) {
        check_degree(g.degree() + lt.poly.degree(), kTriangleExactDegree, "element density");
        out[static_cast<std::size_t>(lt.dof)] += integrate_product(g, lt.poly.compose(cols), area);
      }
    }
  }
}

void add_face_density(const FaceDensity& t, const Mesh& mesh, const TestBasis& tests, std::vector<double>& out) {
  const Mesh& bg = *t.background;
  if (t.density.empty()) return;
  for (const auto& [f, j] : t.density)
    if (f < 0 || static_cast<std::size_t>(f) >= bg.num_faces()) throw LoadError("face density on unknown face");
  const Relation rel = relate(mesh, bg);
  if (rel.test_finer) {
    const bool same = identity_map(mesh, bg);
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
      const auto& tk = tests[k];
      if (tk.empty()) continue;
      const auto kf = static_cast<Index>(k);
      const Index kc = rel.ancestor[k];
      const auto cols = same ? identity_columns() : bary_map(mesh, kf, bg, kc);
      for (int l = 0; l < 3; ++l) {
        const int a = (l + 1) % 3, b = (l + 2) % 3;
        int jc = -1;
        for (int q = 0; q < 3; ++q)
          if (std::abs(cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(q)]) < kOnEdgeTol &&
              std::abs(cols[static_cast<std::size_t>(b)][static_cast<std::size_t>(q)]) < kOnEdgeTol)
            jc = q;
        if (jc < 0) continue;
        const Index fc = bg.element_face(kc, jc);
        auto it = t.density.find(fc);
        if (it == t.density.end() || it->second.is_zero()) continue;
        const Face& F = bg.face(fc);
        const int i0 = bg.local_index(kc, F.v[0]);
        const int i1 = bg.local_index(kc, F.v[1]);
        // Face coordinates (μ0, μ1) at the fine endpoints a and b.
        const Bary ca{cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(i0)],
                      cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(i1)], 0.0};
        const Bary cb{cols[static_cast<std::size_t>(b)][static_cast<std::size_t>(i0)],
                      cols[static_cast<std::size_t>(b)][static_cast<std::size_t>(i1)], 0.0};
        const BaryPoly& J = it->second;
        const Index fe = mesh.element_face(kf, l);
        const double weight = mesh.face(fe).interior ? 0.5 : 1.0;
        const double len = mesh.geometry(kf).face_lengths[static_cast<std::size_t>(l)];
        int td = 0;
        for (const auto& lt : tk) td = std::max(td, lt.poly.degree());
        const int deg = J.degree() + td;
        check_degree(deg, kSegmentExactDegree, "face density");
        // Gauss rule along the fine edge, exact for the checked degree.
        for (const auto& q : segment_rule(std::clamp((deg + 2) / 2, 1, 5))) {
          const double s0 = q.bary[0], s1 = q.bary[1];
          const double jv = J(Bary{s0 * ca[0] + s1 * cb[0], s0 * ca[1] + s1 * cb[1], 0.0}) * q.weight * len * weight;
          if (jv == 0.0) continue;
          Bary pt{0.0, 0.0, 0.0};
          pt[static_cast<std::size_t>(a)] = s0;
          pt[static_cast<std::size_t>(b)] = s1;
          for (const auto& lt : tk) out[static_cast<std::size_t>(lt.dof)] += jv * lt.poly(pt);
        }
      }
    }
  } else {
    for (const auto& [fc, j] : t.density) {
      if (j.is_zero()) continue;
      const Face& F = bg.face(fc);
      const int nadj = F.interior ? 2 : 1;
      const double len = bg.face_length(fc);
      for (int s = 0; s < nadj; ++s) {
        const Index k = F.elements[static_cast<std::size_t>(s)];
        const Index kc = rel.ancestor[static_cast<std::size_t>(k)];
        const auto& tk = tests[static_cast<std::size_t>(kc)];
        if (tk.empty()) continue;
        const Bary c0 = mesh.barycentric(kc, bg.point(F.v[0]));
        const Bary c1 = mesh.barycentric(kc, bg.point(F.v[1]));
        for (const auto& lt : tk) {
          check_degree(j.degree() + lt.poly.degree(), kSegmentExactDegree, "face density");
          out[static_cast<std::size_t>(lt.dof)] +=
              integrate_segment_product(j, restrict_with(lt.poly, c0, c1), len) / nadj;
        }
      }
    }
  }
}

// -∫_C G·∇v on one integration cell with barycentric gradients `grads`.
double divergence_pairing(const std::array<BaryPoly, 2>& G, const BaryPoly& v,
                          const std::array<std::array<double, 2>, 3>& grads, double area) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const BaryPoly dv = v.derivative(i);
    if (dv.is_zero()) continue;
    const auto& g = grads[static_cast<std::size_t>(i)];
    s -= g[0] * integrate_product(G[0], dv, area) + g[1] * integrate_product(G[1], dv, area);
  }
  return s;
}

void add_divergence(const DivergenceField& t, const Mesh& mesh, const TestBasis& tests, std::vector<double>& out) {
  const Mesh& bg = *t.background;
  if (t.field.size() != bg.num_elements()) throw LoadError("divergence field size mismatch");
  const Relation rel = relate(mesh, bg);
  const bool same = identity_map(mesh, bg);
  auto deg = [](const std::array<BaryPoly, 2>& G) { return std::max(G[0].degree(), G[1].degree()); };
  if (rel.test_finer) {
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
      const auto& tk = tests[k];
      if (tk.empty()) continue;
      const auto kf = static_cast<Index>(k);
      const Index kc = rel.ancestor[k];
      const auto& G = t.field[static_cast<std::size_t>(kc)];
      if (G[0].is_zero() && G[1].is_zero()) continue;
      std::array<BaryPoly, 2> Gl = G;
      if (!same) {
        const auto cols = bary_map(mesh, kf, bg, kc);
        Gl = {G[0].compose(cols), G[1].compose(cols)};
      }
      for (const auto& lt : tk) {
        check_degree(deg(Gl) + lt.poly.degree() - 1, kTriangleExactDegree, "divergence field");
        out[static_cast<std::size_t>(lt.dof)] += divergence_pairing(Gl, lt.poly, mesh.bary_gradients(kf), mesh.area(kf));
      }
    }
  } else {
    for (std::size_t k = 0; k < bg.num_elements(); ++k) {
      const auto& G = t.field[k];
      if (G[0].is_zero() && G[1].is_zero()) continue;
      const auto kb = static_cast<Index>(k);
      const Index kc = rel.ancestor[k];
      const auto& tk = tests[static_cast<std::size_t>(kc)];
      if (tk.empty()) continue;
      const auto cols = bary_map(bg, kb, mesh, kc);
      for (const auto& lt : tk) {
        check_degree(deg(G) + lt.poly.degree() - 1, kTriangleExactDegree, "divergence field");
        out[static_cast<std::size_t>(lt.dof)] +=
            divergence_pairing(G, lt.poly.compose(cols), bg.bary_gradients(kb), bg.area(kb));
      }
    }
  }
}

}  // namespace

MeshPtr Load::background() const {
  MeshPtr best;
  for (const auto& t : terms_) {
    const MeshPtr& b = term_background(t);
    if (!best || descends_from(*b, *best)) best = b;
  }
  return best;
}

Load& Load::operator+=(const Load& o) {
  for (const auto& t : o.terms_) terms_.push_back(t);
  return *this;
}

Load& Load::operator*=(double s) {
  for (auto& t : terms_) {
    std::visit(
        [s](auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ElementDensity>) {
            for (auto& p : x.density) p *= s;
          } else if constexpr (std::is_same_v<T, FaceDensity>) {
            for (auto& [f, p] : x.density) p *= s;
          } else {
            for (auto& G : x.field) {
              G[0] *= s;
              G[1] *= s;
            }
          }
        },
        t);
  }
  return *this;
}

double integrate(const BaryPoly& a, double area) {
  double s = 0.0;
  for (const auto& m : a.terms()) s += m.coef * integrate_barycentric(area, m.exp);
  return s;
}

double integrate_product(const BaryPoly& a, const BaryPoly& b, double area) {
  double s = 0.0;
  for (const auto& x : a.terms())
    for (const auto& y : b.terms()) {
      const Exponent e{static_cast<std::uint8_t>(x.exp[0] + y.exp[0]), static_cast<std::uint8_t>(x.exp[1] + y.exp[1]),
                       static_cast<std::uint8_t>(x.exp[2] + y.exp[2])};
      s += x.coef * y.coef * integrate_barycentric(area, e);
    }
  return s;
}

double integrate_segment_product(const BaryPoly& a, const BaryPoly& b, double length) {
  double s = 0.0;
  for (const auto& x : a.terms())
    for (const auto& y : b.terms()) {
      if (x.exp[2] + y.exp[2] != 0) throw LoadError("segment polynomial uses a third coordinate");
      s += x.coef * y.coef * integrate_barycentric_segment(length, x.exp[0] + y.exp[0], x.exp[1] + y.exp[1]);
    }
  return s;
}

std::vector<double> evaluate_many(const Load& f, const Mesh& mesh, const TestBasis& tests, std::size_t ndofs) {
  if (tests.size() != mesh.num_elements()) throw LoadError("test basis size mismatch");
  std::vector<double> out(ndofs, 0.0);
  for (const auto& t : f.terms()) {
    if (const auto* e = std::get_if<ElementDensity>(&t)) add_element_density(*e, mesh, tests, out);
    else if (const auto* fd = std::get_if<FaceDensity>(&t)) add_face_density(*fd, mesh, tests, out);
    else add_divergence(std::get<DivergenceField>(t), mesh, tests, out);
  }
  return out;
}

double evaluate(const Load& f, const PiecewisePoly& v) {
  TestBasis tests(v.mesh->num_elements());
  for (const auto& [k, p] : v.pieces) tests[static_cast<std::size_t>(k)].push_back({0, p});
  return evaluate_many(f, *v.mesh, tests, 1)[0];
}

namespace {

std::vector<Exponent> homogeneous_exponents(int q) {
  std::vector<Exponent> out;
  for (int a = q; a >= 0; --a)
    for (int b = q - a; b >= 0; --b)
      out.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(q - a - b)});
  return out;
}

// Inverse Vandermonde of the degree-q lattice in the homogeneous monomial basis.
const Eigen::MatrixXd& lattice_inverse(int q) {
  static std::map<int, Eigen::MatrixXd> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  const auto ex = homogeneous_exponents(q);
  const auto n = static_cast<Eigen::Index>(ex.size());
  Eigen::MatrixXd V(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Bary l{ex[static_cast<std::size_t>(r)][0] / double(q), ex[static_cast<std::size_t>(r)][1] / double(q),
                 ex[static_cast<std::size_t>(r)][2] / double(q)};
    for (Eigen::Index c = 0; c < n; ++c) V(r, c) = BaryPoly::monomial(ex[static_cast<std::size_t>(c)])(l);
  }
  return cache.emplace(q, V.inverse()).first->second;
}

}  // namespace

ElementDensity interpolate_elements(const MeshPtr& mesh, const ScalarFunction& g, int q) {
  if (q < 0 || q > 4) throw LoadError("interpolation degree must be in [0, 4]");
  ElementDensity d{mesh, std::vector<BaryPoly>(mesh->num_elements())};
  if (q == 0) {
    for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
      const Point p = mesh->map_point(static_cast<Index>(k), {1.0 / 3, 1.0 / 3, 1.0 / 3});
      d.density[k] = BaryPoly::constant(g(p.x, p.y));
    }
    return d;
  }
  const auto ex = homogeneous_exponents(q);
  const auto& Vinv = lattice_inverse(q);
  const auto n = static_cast<Eigen::Index>(ex.size());
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
    Eigen::VectorXd vals(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& e = ex[static_cast<std::size_t>(r)];
      const Point p = mesh->map_point(static_cast<Index>(k), {e[0] / double(q), e[1] / double(q), e[2] / double(q)});
      vals(r) = g(p.x, p.y);
    }
    const Eigen::VectorXd c = Vinv * vals;
    BaryPoly poly;
    for (Eigen::Index r = 0; r < n; ++r) poly.add_term(ex[static_cast<std::size_t>(r)], c(r));
    d.density[k] = poly;
  }
  return d;
}

FaceDensity interpolate_faces(const MeshPtr& mesh, const std::vector<Index>& faces, const ScalarFunction& j, int q) {
  if (q < 0 || q > 4) throw LoadError("interpolation degree must be in [0, 4]");
  FaceDensity d{mesh, {}};
  const int n = q + 1;
  Eigen::MatrixXd V(n, n);
  for (int r = 0; r < n; ++r) {
    const double s = q == 0 ? 0.5 : double(r) / q;
    for (int c = 0; c < n; ++c) V(r, c) = std::pow(1.0 - s, q - c) * std::pow(s, c);
  }
  const Eigen::MatrixXd Vinv = V.inverse();
  for (Index f : faces) {
    const Face& F = mesh->face(f);
    const Point& a = mesh->point(F.v[0]);
    const Point& b = mesh->point(F.v[1]);
    Eigen::VectorXd vals(n);
    for (int r = 0; r < n; ++r) {
      const double s = q == 0 ? 0.5 : double(r) / q;
      vals(r) = j((1 - s) * a.x + s * b.x, (1 - s) * a.y + s * b.y);
    }
    const Eigen::VectorXd c = Vinv * vals;
    BaryPoly poly;
    for (int r = 0; r < n; ++r)
      poly.add_term({static_cast<std::uint8_t>(q - r), static_cast<std::uint8_t>(r), 0}, c(r));
    d.density[f] = poly;
  }
  return d;
}

Load element_constants(const MeshPtr& mesh, const std::vector<double>& values) {
  if (values.size() != mesh->num_elements()) throw LoadError("element_constants: size mismatch");
  ElementDensity d{mesh, std::vector<BaryPoly>(mesh->num_elements())};
  for (std::size_t k = 0; k < values.size(); ++k) d.density[k] = BaryPoly::constant(values[k]);
  return Load(d);
}

Load face_constants(const MeshPtr& mesh, const std::map<Index, double>& values) {
  FaceDensity d{mesh, {}};
  for (const auto& [f, c] : values) {
    if (f < 0 || static_cast<std::size_t>(f) >= mesh->num_faces()) throw LoadError("face_constants: unknown face");
    d.density[f] = BaryPoly::constant(c);
  }
  return Load(d);
}

Load sine_load(const MeshPtr& mesh) {
  return Load(interpolate_elements(
      mesh, [](double x, double y) { return 2.0 * M_PI * M_PI * std::sin(M_PI * x) * std::sin(M_PI * y); }, 4));
}

Load face_dirac_load(const MeshPtr& mesh) {
  std::vector<Index> diag;
  for (std::size_t f = 0; f < mesh->num_faces(); ++f) {
    const Face& F = mesh->faces()[f];
    const Point& a = mesh->point(F.v[0]);
    const Point& b = mesh->point(F.v[1]);
    if (F.interior && std::abs(a.x - a.y) < 1e-12 && std::abs(b.x - b.y) < 1e-12) diag.push_back(static_cast<Index>(f));
  }
  if (diag.empty()) throw LoadError("face_dirac preset: mesh has no faces on the diagonal");
  return Load(interpolate_faces(mesh, diag, [](double x, double) { return 1.0 + 4.0 * x * (1.0 - x); }, 2));
}

Load face_dirac_load(const MeshPtr& mesh, Index face, double density) {
  return face_constants(mesh, {{face, density}});
}

int load_degree(const Load& f) {
  int d = 0;
  for (const auto& t : f.terms()) {
    if (const auto* e = std::get_if<ElementDensity>(&t)) {
      for (const auto& p : e->density) d = std::max(d, p.degree());
    } else if (const auto* fd = std::get_if<FaceDensity>(&t)) {
      for (const auto& [k, p] : fd->density) d = std::max(d, p.degree());
    } else {
      for (const auto& G : std::get<DivergenceField>(t).field) d = std::max({d, G[0].degree(), G[1].degree()});
    }
  }
  return d;
}

}  // namespace eosc
