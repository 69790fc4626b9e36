#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace eosc {

/// Spatial dimension. Formulas below keep `kDim` symbolic; only 2 is built.
inline constexpr int kDim = 2;

using Exponent = std::array<std::uint8_t, 3>;
using Bary = std::array<double, 3>;

struct Monomial {
  Exponent exp;
  double coef;
};

/// Polynomial in the barycentric coordinates (l0, l1, l2) of a triangle.
///
/// Segment densities reuse the type with the third exponent fixed to zero,
/// then (l0, l1) are the barycentric coordinates of the segment.
/// Terms are kept sorted and merged, zero coefficients are dropped.
class BaryPoly {
 public:
  BaryPoly() = default;

  static BaryPoly constant(double c);
  static BaryPoly coordinate(int i);
  static BaryPoly monomial(Exponent e, double c = 1.0);

  void add_term(Exponent e, double c);

  const std::vector<Monomial>& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

  double operator()(const Bary& l) const;

  /// Partial derivative with respect to l_i, treating the coordinates as
  /// independent variables.
  BaryPoly derivative(int i) const;

  BaryPoly& operator+=(const BaryPoly& o);
  BaryPoly& operator-=(const BaryPoly& o);
  BaryPoly& operator*=(double s);

  friend BaryPoly operator+(BaryPoly a, const BaryPoly& b) { return a += b; }
  friend BaryPoly operator-(BaryPoly a, const BaryPoly& b) { return a -= b; }
  friend BaryPoly operator*(BaryPoly a, double s) { return a *= s; }
  friend BaryPoly operator*(double s, BaryPoly a) { return a *= s; }
  friend BaryPoly operator*(const BaryPoly& a, const BaryPoly& b);

  /// (1/|K|) ∫_K p dx, exact.
  double triangle_mean() const;
  /// (1/|F|) ∫_F p ds over the edge opposite local vertex i, exact.
  double edge_mean(int i) const;
  /// (1/|F|) ∫_F p ds when p is a segment polynomial in (l0, l1).
  double segment_mean() const;

  /// Composition with a linear change of barycentric coordinates:
  /// returns q with q(m) = p(A m), A given column-wise (A[j] = image of e_j).
  BaryPoly compose(const std::array<Bary, 3>& columns) const;

 private:
  // Packed exponent key; addition of keys multiplies monomials.
  using Key = std::uint32_t;
  static Key key_of(const Exponent& e) { return (Key(e[0]) << 16) | (Key(e[1]) << 8) | Key(e[2]); }
  static Exponent exp_of(Key k) {
    return {static_cast<std::uint8_t>(k >> 16), static_cast<std::uint8_t>((k >> 8) & 0xff),
            static_cast<std::uint8_t>(k & 0xff)};
  }
  static BaryPoly from_pairs(std::vector<std::pair<Key, double>>& items);

  std::vector<Monomial> terms_;
};

/// ∫_K Π λ_z^{α_z} = d! Π α_z! / (Σ α_z + d)! · |K| for a triangle.
double integrate_barycentric(double area, const Exponent& alpha);

/// Same closed form on a segment (d − 1 = 1): Π α! / (Σ α + 1)! · |F|.
double integrate_barycentric_segment(double length, int a0, int a1);

double factorial(int n);

}  // namespace eosc
