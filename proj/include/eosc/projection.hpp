#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "eosc/biorth.hpp"
#include "eosc/fem.hpp"
#include "eosc/load.hpp"

namespace eosc {

/// Element of D(M): Σ_K c_K χ_K + Σ_F c_F χ_F. Coefficients are raw,
/// never scaled by measures. Boundary faces always carry 0.
struct DiscretizedResidual {
  MeshPtr mesh;
  std::vector<double> element;
  std::vector<double> face;

  static DiscretizedResidual zero(const MeshPtr& mesh);

  DiscretizedResidual& operator+=(const DiscretizedResidual& o);
  DiscretizedResidual& operator*=(double s);
  friend DiscretizedResidual operator+(DiscretizedResidual a, const DiscretizedResidual& b) { return a += b; }
  friend DiscretizedResidual operator-(DiscretizedResidual a, const DiscretizedResidual& b) {
    DiscretizedResidual nb = b;
    nb *= -1.0;
    return a += nb;
  }
  friend DiscretizedResidual operator*(double s, DiscretizedResidual a) { return a *= s; }

  /// Coefficients ordered by the index set ℐ.
  Eigen::VectorXd coefficients(const IndexSet& idx) const;
  static DiscretizedResidual from_coefficients(const MeshPtr& mesh, const IndexSet& idx, const Eigen::VectorXd& c);
  double max_abs() const;
};

/// P_M f: c_i = ⟨f, ψ_i⟩.
DiscretizedResidual project(const Load& f, const BiorthSystem& b);
DiscretizedResidual project(const Load& f, const MeshPtr& mesh);

/// P̃₀ f: element coefficients of P_M f, faces dropped.
DiscretizedResidual tprog0(const Load& f, const BiorthSystem& b);
DiscretizedResidual tprog0(const Load& f, const MeshPtr& mesh);

/// P_M f + ΔU: c_K = ⟨f, ψ_K⟩, c_F = ⟨f, ψ_F⟩ + J(U)|_F.
DiscretizedResidual discretized_residual(const Load& f, const P1Function& u, const BiorthSystem& b);
DiscretizedResidual discretized_residual(const Load& f, const P1Function& u);

Load as_load(const DiscretizedResidual& r);

void write_residual_csv(std::ostream& os, const DiscretizedResidual& r);

}  // namespace eosc
