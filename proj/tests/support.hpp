#pragma once

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "eosc/biorth.hpp"
#include "eosc/dualnorm.hpp"
#include "eosc/estimators.hpp"
#include "eosc/fem.hpp"
#include "eosc/lagrange.hpp"
#include "eosc/load.hpp"
#include "eosc/mesh.hpp"
#include "eosc/projection.hpp"
#include "eosc/quadrature.hpp"

namespace testing {

using namespace eosc;

inline std::mt19937& rng() {
  static std::mt19937 g(12345);
  return g;
}

inline double uniform(double a = -1.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng()); }

/// Square refined `uniform` times, then `random_rounds` NVB passes on random
/// halves of the elements.
inline MeshPtr random_mesh(int uniform_levels, int random_rounds) {
  MeshPtr m = refine_uniform(unit_square(), uniform_levels);
  for (int r = 0; r < random_rounds; ++r) {
    std::vector<Index> marked;
    for (std::size_t k = 0; k < m->num_elements(); ++k)
      if (uniform(0, 1) < 0.5) marked.push_back(static_cast<Index>(k));
    m = refine_nvb(m, marked).mesh;
  }
  return m;
}

/// Random V ∈ V₀(M).
inline P1Function random_discrete(const MeshPtr& m) {
  P1Function v{m, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m->num_vertices()))};
  for (std::size_t z = 0; z < m->num_vertices(); ++z)
    if (!m->vertex(static_cast<Index>(z)).on_boundary) v.values(static_cast<Eigen::Index>(z)) = uniform();
  return v;
}

inline std::vector<double> random_values(std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = uniform();
  return out;
}

/// Random element of D(M).
inline DiscretizedResidual random_residual(const MeshPtr& m) {
  DiscretizedResidual r = DiscretizedResidual::zero(m);
  for (auto& c : r.element) c = uniform();
  for (std::size_t f = 0; f < m->num_faces(); ++f)
    if (m->face(static_cast<Index>(f)).interior) r.face[f] = uniform();
  return r;
}

/// Continuous piecewise affine function as a piecewise polynomial.
inline PiecewisePoly p1_as_poly(const P1Function& u) {
  PiecewisePoly p{u.mesh, {}};
  for (std::size_t k = 0; k < u.mesh->num_elements(); ++k) {
    BaryPoly q;
    const auto& el = u.mesh->element(static_cast<Index>(k));
    for (int i = 0; i < 3; ++i) {
      Exponent e{0, 0, 0};
      e[static_cast<std::size_t>(i)] = 1;
      q.add_term(e, u.values(el.v[static_cast<std::size_t>(i)]));
    }
    p.pieces.emplace_back(static_cast<Index>(k), q);
  }
  return p;
}

/// Value of a piecewise polynomial piece at a point of element k (0 if absent).
inline double piece_value(const PiecewisePoly& p, Index k, const Bary& l) {
  for (const auto& [e, q] : p.pieces)
    if (e == k) return q(l);
  return 0.0;
}

/// 3-point Gauss-Legendre on [0,1], used for an independent collapsed rule.
inline std::vector<std::pair<Bary, double>> reference_rule() {
  const double a = std::sqrt(0.6);
  const double x[3] = {(1 - a) / 2, 0.5, (1 + a) / 2};
  const double w[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  std::vector<std::pair<Bary, double>> out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double s = x[i], t = x[j] * (1 - x[i]);
      // Weights normalized to the unit reference area 1/2, scaled to sum 1.
      out.push_back({Bary{1 - s - t, s, t}, 2.0 * w[i] * w[j] * (1 - x[i])});
    }
  return out;
}

}  // namespace testing
