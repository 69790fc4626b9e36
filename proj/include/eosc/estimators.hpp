#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eosc/biorth.hpp"
#include "eosc/dualnorm.hpp"
#include "eosc/fem.hpp"
#include "eosc/projection.hpp"

namespace eosc {

enum class Family { Hierarchical, Residual, LocalProblem, Equilibrated };

std::string family_name(Family f);
/// Parses hier|res|local|equil (or the full names).
Family parse_family(const std::string& s);

struct EstimatorReport {
  Family family = Family::Hierarchical;
  std::string index_kind;       // "I" (elements then interior faces) or "vertex"
  std::vector<double> values;   // local indicators
  double global = 0.0;          // sqrt(Σ values²)
  std::vector<double> osc;      // optional per-vertex oscillation
  double osc_global = 0.0;
  /// Hierarchical: max gap between the two evaluation routes.
  /// Equilibrated: max constraint residual.
  double check = 0.0;
};

/// E_H(i) = |⟨Res, λ_i⟩| / ‖∇λ_i‖.
EstimatorReport hierarchical(const Load& f, const P1Function& u, const BiorthSystem& b);
/// E_R(F) = h_F^{1/2} |c_F| |F|^{1/2}, E_R(K) = h_K |c_K| |K|^{1/2}.
EstimatorReport residual(const Load& f, const P1Function& u, const BiorthSystem& b);
/// E_L(z) = ‖∇ν_z‖, ν_z ∈ span{λ_i : i ∈ ℐ_z} with (∇ν_z, ∇λ) = ⟨Res, λ⟩.
EstimatorReport local_problems(const Load& f, const P1Function& u, const BiorthSystem& b);
/// ‖Ξ_z‖ of the minimal RT1 flux on ω_z equilibrating π_z(φ_z(P_M f + ΔU)).
EstimatorReport equilibrated_flux(const Load& f, const P1Function& u, const BiorthSystem& b);

EstimatorReport estimate(Family fam, const Load& f, const P1Function& u, const BiorthSystem& b);

/// Per-vertex oracle values of ‖f - P_M f‖_{H⁻¹(ω_z)}, or of ‖φ_z(f - P_M f)‖_{H_z*}.
std::vector<double> oscillation(const Load& f, const BiorthSystem& b, int depth, bool hz = false, int degree = 1);

struct ClassicalOsc {
  double global = 0.0;
  std::vector<double> per_element;
};
/// osc₀² = Σ_K h_K² ‖f - mean_K f‖²_K for loads made of element densities only.
ClassicalOsc classical_osc0(const Load& f, const MeshPtr& mesh);

/// Element values Σ_i w_i·value_i² over the indices touching each element,
/// each index shared evenly among its elements (returned squared).
std::vector<double> element_indicators(const EstimatorReport& r, const BiorthSystem& b);

void write_report_csv(std::ostream& os, const EstimatorReport& r);
std::string report_json(const EstimatorReport& r);

}  // namespace eosc
