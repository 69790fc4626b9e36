#include "eosc/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "eosc/quadrature.hpp"

namespace eosc {

std::string family_name(Family f) {
  switch (f) {
    case Family::Hierarchical: return "hierarchical";
    case Family::Residual: return "residual";
    case Family::LocalProblem: return "local_problem";
    case Family::Equilibrated: return "equilibrated";
  }
  return "unknown";
}

Family parse_family(const std::string& s) {
  if (s == "hier" || s == "hierarchical") return Family::Hierarchical;
  if (s == "res" || s == "residual") return Family::Residual;
  if (s == "local" || s == "local_problem") return Family::LocalProblem;
  if (s == "equil" || s == "equilibrated") return Family::Equilibrated;
  throw std::invalid_argument("unknown estimator family: " + s);
}

namespace {

void finalize(EstimatorReport& r) {
  double s = 0.0;
  for (double v : r.values) s += v * v;
  r.global = std::sqrt(s);
}

std::array<double, 2> p1_gradient(const P1Function& u, Index k) {
  const auto& g = u.mesh->bary_gradients(k);
  std::array<double, 2> d{0.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const double val = u.values(u.mesh->element(k).v[i]);
    d[0] += val * g[i][0];
    d[1] += val * g[i][1];
  }
  return d;
}

// (∇a, ∇b) over element k for polynomials on k.
double stiffness_entry(const Mesh& m, Index k, const BaryPoly& a, const BaryPoly& b) {
  const auto& g = m.bary_gradients(k);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const BaryPoly da = a.derivative(i);
    if (da.is_zero()) continue;
    for (int j = 0; j < 3; ++j) {
      const BaryPoly db = b.derivative(j);
      if (db.is_zero()) continue;
      const auto& gi = g[static_cast<std::size_t>(i)];
      const auto& gj = g[static_cast<std::size_t>(j)];
      s += (gi[0] * gj[0] + gi[1] * gj[1]) * integrate_product(da, db, m.area(k));
    }
  }
  return s;
}

// ⟨Res, λ_i⟩ = ⟨f, λ_i⟩ - (∇U, ∇λ_i) for every i.
std::vector<double> residual_on_bubbles(const Load& f, const P1Function& u, const BiorthSystem& b) {
  auto vals = evaluate_many(f, *b.mesh(), b.bubble_basis(), b.size());
  const Mesh& m = *b.mesh();
  for (std::size_t i = 0; i < b.size(); ++i)
    for (const auto& [k, p] : b.bubble(i).pieces) {
      const auto du = p1_gradient(u, k);
      const auto& g = m.bary_gradients(k);
      double s = 0.0;
      for (int j = 0; j < 3; ++j) {
        const BaryPoly dp = p.derivative(j);
        const auto& gj = g[static_cast<std::size_t>(j)];
        s += (du[0] * gj[0] + du[1] * gj[1]) * integrate(dp, m.area(k));
      }
      vals[i] -= s;
    }
  return vals;
}

// Σ_j c_j ⟨χ_j, λ_i⟩ for the discretized residual.
std::vector<double> discrete_on_bubbles(const DiscretizedResidual& r, const BiorthSystem& b) {
  const auto vals = evaluate_many(as_load(r), *b.mesh(), b.bubble_basis(), b.size());
  return vals;
}

}  // namespace

EstimatorReport hierarchical(const Load& f, const P1Function& u, const BiorthSystem& b) {
  EstimatorReport rep;
  rep.family = Family::Hierarchical;
  rep.index_kind = "I";
  const auto route1 = residual_on_bubbles(f, u, b);
  const auto route2 = discrete_on_bubbles(discretized_residual(f, u, b), b);
  rep.values.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    rep.values[i] = std::abs(route1[i]) / b.bubble_grad_norm(i);
    rep.check = std::max(rep.check, std::abs(route1[i] - route2[i]) / b.bubble_grad_norm(i));
  }
  finalize(rep);
  return rep;
}

EstimatorReport residual(const Load& f, const P1Function& u, const BiorthSystem& b) {
  EstimatorReport rep;
  rep.family = Family::Residual;
  rep.index_kind = "I";
  const auto r = discretized_residual(f, u, b);
  const Mesh& m = *b.mesh();
  rep.values.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Index e = b.indices().entity(i);
    if (b.indices().kind(i) == IndexKind::Element) {
      rep.values[i] = m.geometry(e).h * std::abs(r.element[static_cast<std::size_t>(e)]) * std::sqrt(m.area(e));
    } else {
      const double len = m.face_length(e);  // h_F = diam F = |F|
      rep.values[i] = std::sqrt(len) * std::abs(r.face[static_cast<std::size_t>(e)]) * std::sqrt(len);
    }
  }
  finalize(rep);
  return rep;
}

EstimatorReport local_problems(const Load& f, const P1Function& u, const BiorthSystem& b) {
  EstimatorReport rep;
  rep.family = Family::LocalProblem;
  rep.index_kind = "vertex";
  const Mesh& m = *b.mesh();
  const auto rhs = residual_on_bubbles(f, u, b);
  rep.values.resize(m.num_vertices());
  for (std::size_t z = 0; z < m.num_vertices(); ++z) {
    const auto I = b.star_indices(static_cast<Index>(z));
    const auto n = static_cast<Eigen::Index>(I.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      r(a) = rhs[I[static_cast<std::size_t>(a)]];
      for (Eigen::Index c = 0; c <= a; ++c) {
        double s = 0.0;
        for (const auto& [ka, pa] : b.bubble(I[static_cast<std::size_t>(a)]).pieces)
          for (const auto& [kc, pc] : b.bubble(I[static_cast<std::size_t>(c)]).pieces)
            if (ka == kc) s += stiffness_entry(m, ka, pa, pc);
        A(a, c) = A(c, a) = s;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw std::logic_error("local problem matrix is singular at vertex " + std::to_string(z));
    rep.values[z] = std::sqrt(std::max(0.0, r.dot(llt.solve(r))));
  }
  finalize(rep);
  return rep;
}

namespace {

constexpr int kRt = 8;  // RT1 dimension on a triangle

struct RtFrame {
  Point c;
  double h;
};

RtFrame frame(const Mesh& m, Index k) {
  Point c{0, 0};
  for (Index v : m.element(k).v) {
    c.x += m.point(v).x / 3.0;
    c.y += m.point(v).y / 3.0;
  }
  return {c, m.geometry(k).h};
}

// Values of the 8 basis fields at p.
std::array<std::array<double, 2>, kRt> rt_values(const RtFrame& fr, const Point& p) {
  const double x = (p.x - fr.c.x) / fr.h, y = (p.y - fr.c.y) / fr.h;
  return {{{1, 0}, {x, 0}, {y, 0}, {0, 1}, {0, x}, {0, y}, {x * x, x * y}, {x * y, y * y}}};
}

std::array<double, kRt> rt_divergence(const RtFrame& fr, const Point& p) {
  const double x = (p.x - fr.c.x) / fr.h, y = (p.y - fr.c.y) / fr.h;
  return {0, 1 / fr.h, 0, 0, 0, 1 / fr.h, 3 * x / fr.h, 3 * y / fr.h};
}

struct FluxResult {
  double norm = 0.0;
  double residual = 0.0;
};

FluxResult star_flux(const Mesh& m, Index z, const DiscretizedResidual& r) {
  const auto elems = m.star_elements(z);
  const auto ne = static_cast<Eigen::Index>(elems.size());
  const bool interior = !m.vertex(z).on_boundary;
  auto pos = [&](Index k) {
    return static_cast<Eigen::Index>(std::find(elems.begin(), elems.end(), k) - elems.begin());
  };

  double star_area = 0.0;
  double pairing = 0.0;  // ⟨r, φ_z⟩
  for (Index k : elems) {
    star_area += m.area(k);
    pairing += r.element[static_cast<std::size_t>(k)] * m.area(k) / 3.0;
  }
  const auto sfaces = m.star_faces(z);
  for (Index f : sfaces) pairing += r.face[static_cast<std::size_t>(f)] * m.face_length(f) / 2.0;
  const double mean = interior ? pairing / star_area : 0.0;

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto new_row = [&]() {
    rows.emplace_back(Eigen::VectorXd::Zero(ne * kRt));
    return rows.size() - 1;
  };

  for (Eigen::Index e = 0; e < ne; ++e) {
    const Index k = elems[static_cast<std::size_t>(e)];
    const RtFrame fr = frame(m, k);
    for (Index v : m.element(k).v) {
      const auto d = rt_divergence(fr, m.point(v));
      const auto row = new_row();
      for (int j = 0; j < kRt; ++j) rows[row](e * kRt + j) = d[static_cast<std::size_t>(j)];
      rhs.push_back(r.element[static_cast<std::size_t>(k)] * (v == z ? 1.0 : 0.0) - mean);
    }
  }

  // Normal-trace rows at both endpoints of face `l` of element k.
  auto add_trace = [&](std::size_t row, Index k, int l, const Point& p) {
    const RtFrame fr = frame(m, k);
    const auto n = m.outward_normal(k, l);
    const auto vals = rt_values(fr, p);
    const Eigen::Index e = pos(k);
    for (int j = 0; j < kRt; ++j)
      rows[row](e * kRt + j) += vals[static_cast<std::size_t>(j)][0] * n[0] + vals[static_cast<std::size_t>(j)][1] * n[1];
  };

  for (Index k : elems) {
    for (int l = 0; l < 3; ++l) {
      const Index f = m.element_face(k, l);
      const Face& F = m.face(f);
      const bool contains_z = F.v[0] == z || F.v[1] == z;
      if (contains_z && F.interior) {
        if (F.elements[0] != k) continue;  // handle once
        for (Index v : F.v) {
          const auto row = new_row();
          add_trace(row, F.elements[0], F.local[0], m.point(v));
          add_trace(row, F.elements[1], F.local[1], m.point(v));
          rows[row] *= -1.0;
          rhs.push_back(r.face[static_cast<std::size_t>(f)] * (v == z ? 1.0 : 0.0));
        }
      } else if (!F.interior && !interior) {
        continue;  // on ∂Ω around a boundary vertex: free
      } else {
        // Star boundary: inside Ω, or anywhere for an interior vertex.
        for (Index v : F.v) {
          const auto row = new_row();
          add_trace(row, k, l, m.point(v));
          rhs.push_back(0.0);
        }
      }
    }
  }

  const auto nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nu = ne * kRt;
  Eigen::MatrixXd C(nr, nu);
  for (Eigen::Index i = 0; i < nr; ++i) C.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(rhs.data(), nr);

  // Block-diagonal mass matrix.
  Eigen::MatrixXd Mass = Eigen::MatrixXd::Zero(nu, nu);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const Index k = elems[static_cast<std::size_t>(e)];
    const RtFrame fr = frame(m, k);
    for (const auto& q : triangle_rule()) {
      const auto vals = rt_values(fr, m.map_point(k, q.bary));
      const double w = q.weight * m.area(k);
      for (int a = 0; a < kRt; ++a)
        for (int c = 0; c < kRt; ++c)
          Mass(e * kRt + a, e * kRt + c) +=
              w * (vals[static_cast<std::size_t>(a)][0] * vals[static_cast<std::size_t>(c)][0] +
                   vals[static_cast<std::size_t>(a)][1] * vals[static_cast<std::size_t>(c)][1]);
    }
  }

  // Range/null-space split of C from a pivoted QR of its transpose.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  qr.setThreshold(1e-10);
  const Eigen::Index rank = nr > 0 ? qr.rank() : 0;
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd xi0 = Eigen::VectorXd::Zero(nu);
  if (rank > 0) {
    const Eigen::MatrixXd A = C * Q.leftCols(rank);
    xi0 = Q.leftCols(rank) * A.colPivHouseholderQr().solve(d);
  }
  const double tol = 1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff());
  if (nr > 0 && (C * xi0 - d).cwiseAbs().maxCoeff() > tol)
    throw std::runtime_error("equilibration constraints infeasible at vertex " + std::to_string(z));
  const Eigen::MatrixXd N = Q.rightCols(nu - rank);
  Eigen::VectorXd xi = xi0;
  if (N.cols() > 0) {
    const Eigen::MatrixXd H = N.transpose() * Mass * N;
    const Eigen::VectorXd g = N.transpose() * Mass * xi0;
    xi -= N * H.ldlt().solve(g);
  }
  FluxResult res;
  res.residual = nr > 0 ? (C * xi - d).cwiseAbs().maxCoeff() : 0.0;
  if (res.residual > tol) throw std::runtime_error("equilibration residual too large at vertex " + std::to_string(z));
  res.norm = std::sqrt(std::max(0.0, xi.dot(Mass * xi)));
  return res;
}

}  // namespace

EstimatorReport equilibrated_flux(const Load& f, const P1Function& u, const BiorthSystem& b) {
  EstimatorReport rep;
  rep.family = Family::Equilibrated;
  rep.index_kind = "vertex";
  const auto r = discretized_residual(f, u, b);
  const Mesh& m = *b.mesh();
  rep.values.resize(m.num_vertices());
  for (std::size_t z = 0; z < m.num_vertices(); ++z) {
    const auto fr = star_flux(m, static_cast<Index>(z), r);
    rep.values[z] = fr.norm;
    rep.check = std::max(rep.check, fr.residual);
  }
  finalize(rep);
  return rep;
}

EstimatorReport estimate(Family fam, const Load& f, const P1Function& u, const BiorthSystem& b) {
  switch (fam) {
    case Family::Hierarchical: return hierarchical(f, u, b);
    case Family::Residual: return residual(f, u, b);
    case Family::LocalProblem: return local_problems(f, u, b);
    case Family::Equilibrated: return equilibrated_flux(f, u, b);
  }
  throw std::invalid_argument("unknown family");
}

std::vector<double> oscillation(const Load& f, const BiorthSystem& b, int depth, bool hz, int degree) {
  const Load diff = f - as_load(project(f, b));
  const auto vals = oracle_star_norms(diff, b.mesh(), depth, degree, hz ? OracleKind::Hz : OracleKind::Dirichlet);
  std::vector<double> out;
  out.reserve(vals.size());
  for (const auto& v : vals) out.push_back(v.value);
  return out;
}

ClassicalOsc classical_osc0(const Load& f, const MeshPtr& mesh) {
  std::vector<MeshPtr> meshes{mesh};
  for (const auto& t : f.terms()) {
    const auto* e = std::get_if<ElementDensity>(&t);
    if (!e) throw LoadError("classical oscillation needs an L2 load (element densities only)");
    meshes.push_back(e->background);
  }
  const MeshPtr fine = finest_mesh(meshes);
  const auto to_mesh = ancestor_map(*fine, *mesh);
  std::vector<double> int_f(mesh->num_elements(), 0.0), int_f2(mesh->num_elements(), 0.0);
  std::vector<std::vector<Index>> anc;
  for (const auto& t : f.terms()) anc.push_back(ancestor_map(*fine, *std::get<ElementDensity>(t).background));
  for (std::size_t k = 0; k < fine->num_elements(); ++k) {
    BaryPoly g;
    for (std::size_t ti = 0; ti < f.terms().size(); ++ti) {
      const auto& e = std::get<ElementDensity>(f.terms()[ti]);
      const Index kb = anc[ti][k];
      const BaryPoly& d = e.density[static_cast<std::size_t>(kb)];
      if (d.is_zero()) continue;
      g += e.background->id() == fine->id() ? d : d.compose(bary_map(*fine, static_cast<Index>(k), *e.background, kb));
    }
    const double area = fine->area(static_cast<Index>(k));
    const auto K = static_cast<std::size_t>(to_mesh[k]);
    int_f[K] += integrate(g, area);
    int_f2[K] += integrate_product(g, g, area);
  }
  ClassicalOsc out;
  out.per_element.resize(mesh->num_elements());
  double s = 0.0;
  for (std::size_t k = 0; k < mesh->num_elements(); ++k) {
    const auto kk = static_cast<Index>(k);
    const double var = std::max(0.0, int_f2[k] - int_f[k] * int_f[k] / mesh->area(kk));
    const double h = mesh->geometry(kk).h;
    out.per_element[k] = h * std::sqrt(var);
    s += h * h * var;
  }
  out.global = std::sqrt(s);
  return out;
}

std::vector<double> element_indicators(const EstimatorReport& r, const BiorthSystem& b) {
  const Mesh& m = *b.mesh();
  std::vector<double> out(m.num_elements(), 0.0);
  if (r.index_kind == "vertex") {
    for (std::size_t z = 0; z < m.num_vertices(); ++z) {
      const auto star = m.star_elements(static_cast<Index>(z));
      const double share = r.values[z] * r.values[z] / static_cast<double>(star.size());
      for (Index k : star) out[static_cast<std::size_t>(k)] += share;
    }
  } else {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double v2 = r.values[i] * r.values[i];
      const Index e = b.indices().entity(i);
      if (b.indices().kind(i) == IndexKind::Element) {
        out[static_cast<std::size_t>(e)] += v2;
      } else {
        for (Index k : m.face(e).elements) out[static_cast<std::size_t>(k)] += 0.5 * v2;
      }
    }
  }
  return out;
}

void write_report_csv(std::ostream& os, const EstimatorReport& r) {
  os << "family,index_kind,index,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.values.size(); ++i)
    os << family_name(r.family) << ',' << r.index_kind << ',' << i << ',' << r.values[i] << '\n';
}

std::string report_json(const EstimatorReport& r) {
  nlohmann::json j;
  j["family"] = family_name(r.family);
  j["index_kind"] = r.index_kind;
  j["count"] = r.values.size();
  j["global"] = r.global;
  j["osc_global"] = r.osc_global;
  j["check"] = r.check;
  return j.dump(2);
}

}  // namespace eosc
