#pragma once

#include <array>
#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "eosc/bary_poly.hpp"
#include "eosc/mesh.hpp"

namespace eosc {

/// v ↦ Σ_K ∫_K g v. One polynomial per background element, empty means zero.
struct ElementDensity {
  MeshPtr background;
  std::vector<BaryPoly> density;
};

/// v ↦ Σ_F ∫_F j v ds. Densities are segment polynomials in the barycentric
/// coordinates of (face.v[0], face.v[1]).
struct FaceDensity {
  MeshPtr background;
  std::map<Index, BaryPoly> density;
};

/// v ↦ -Σ_K ∫_K G·∇v with G given per element by its two Cartesian components.
struct DivergenceField {
  MeshPtr background;
  std::vector<std::array<BaryPoly, 2>> field;
};

using LoadTerm = std::variant<ElementDensity, FaceDensity, DivergenceField>;

/// A functional in H^{-1} given as a finite sum of exactly integrable terms.
/// Each term carries its own background mesh; all of them must be related
/// by refinement to any mesh the load is tested on.
class Load {
 public:
  Load() = default;
  explicit Load(LoadTerm t) { terms_.push_back(std::move(t)); }

  const std::vector<LoadTerm>& terms() const { return terms_; }
  void add(LoadTerm t) { terms_.push_back(std::move(t)); }
  bool empty() const { return terms_.empty(); }

  /// Finest background among the terms (null for the zero load).
  MeshPtr background() const;

  Load& operator+=(const Load& o);
  Load& operator*=(double s);
  friend Load operator+(Load a, const Load& b) { return a += b; }
  friend Load operator-(Load a, const Load& b) { return a += (Load(b) *= -1.0); }
  friend Load operator*(double s, Load a) { return a *= s; }

 private:
  std::vector<LoadTerm> terms_;
};

/// Piecewise polynomial given on a subset of the elements of `mesh`.
struct PiecewisePoly {
  MeshPtr mesh;
  std::vector<std::pair<Index, BaryPoly>> pieces;
};

/// One test function restricted to one element.
struct LocalTest {
  Index dof;
  BaryPoly poly;
};

/// Per element of the test mesh, the local pieces of a family of test functions.
using TestBasis = std::vector<std::vector<LocalTest>>;

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ⟨f, v⟩ exactly.
double evaluate(const Load& f, const PiecewisePoly& v);

/// ⟨f, v_j⟩ for a whole family at once. The test mesh and every term
/// background must be related by refinement, in either direction.
std::vector<double> evaluate_many(const Load& f, const Mesh& mesh, const TestBasis& tests, std::size_t ndofs);

/// ∫_K a b dx for polynomials on the same element.
double integrate_product(const BaryPoly& a, const BaryPoly& b, double area);
double integrate(const BaryPoly& a, double area);
/// ∫_F a b ds for segment polynomials.
double integrate_segment_product(const BaryPoly& a, const BaryPoly& b, double length);

using ScalarFunction = std::function<double(double, double)>;

/// Lagrange interpolation into P_q on every element (q ≤ 4), stored in the
/// homogeneous degree-q barycentric monomials.
ElementDensity interpolate_elements(const MeshPtr& mesh, const ScalarFunction& g, int q);
/// Lagrange interpolation into P_q along the listed faces.
FaceDensity interpolate_faces(const MeshPtr& mesh, const std::vector<Index>& faces, const ScalarFunction& j, int q);

/// Piecewise constant element density (values per element).
Load element_constants(const MeshPtr& mesh, const std::vector<double>& values);
/// Constant face densities (surface Diracs) on the listed faces.
Load face_constants(const MeshPtr& mesh, const std::map<Index, double>& values);

/// f = 2π² sin(πx) sin(πy), interpolated into P_4 on `mesh`.
Load sine_load(const MeshPtr& mesh);
/// Face Dirac with density 1 + 4x(1 - x) on the faces along the diagonal y = x.
Load face_dirac_load(const MeshPtr& mesh);
/// Face Dirac with the given constant density on one face.
Load face_dirac_load(const MeshPtr& mesh, Index face, double density = 1.0);

/// Maximal polynomial degree appearing in any term.
int load_degree(const Load& f);

}  // namespace eosc
