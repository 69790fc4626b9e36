#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <vector>

#include "eosc/biorth.hpp"
#include "eosc/lagrange.hpp"
#include "eosc/load.hpp"
#include "eosc/projection.hpp"

namespace eosc {

/// Two-sided computable bracket for ‖r‖²_{H⁻¹(ω_z)} with r ∈ D(M).
/// Both entries are on the squared scale.
struct Bracket {
  double lower = 0.0;      // S / (d+1)
  double upper_raw = 0.0;  // S = Σ_{i∈ℐ_z} (⟨r,ψ_i⟩ / ‖∇ψ_i‖)²
  Index vertex = -1;
  /// Geometric mean of the two entries (reporting only).
  double midpoint() const;
};

struct OracleResult {
  double value = 0.0;
  int depth = 0;
  int degree = 1;
};

Bracket quantify_local(const DiscretizedResidual& r, Index z, const BiorthSystem& b);
std::vector<Bracket> quantify_all(const DiscretizedResidual& r, const BiorthSystem& b);

/// Finest mesh among the given ones; all must lie on one refinement chain.
MeshPtr finest_mesh(const std::vector<MeshPtr>& meshes);

/// Shared data for patch oracles over the stars of `mesh`. `base` is the mesh
/// the oracle submeshes are cut from; it must refine `mesh` and every
/// background of the loads that will be measured.
class OracleContext {
 public:
  OracleContext(MeshPtr mesh, MeshPtr base);
  /// Uses the finest of `mesh` and the load backgrounds as base.
  OracleContext(MeshPtr mesh, const std::vector<Load>& loads);

  const MeshPtr& mesh() const { return mesh_; }
  const MeshPtr& base() const { return base_; }
  /// Elements of `base` inside element k of `mesh`.
  const std::vector<Index>& children(Index k) const { return children_[static_cast<std::size_t>(k)]; }
  Index ancestor(Index kb) const { return ancestor_[static_cast<std::size_t>(kb)]; }

 private:
  MeshPtr mesh_, base_;
  std::vector<Index> ancestor_;
  std::vector<std::vector<Index>> children_;
};

enum class OracleKind {
  Dirichlet,  // H¹₀ on the region
  Hz          // φ_z-weighted functional on H_z (mean zero / partial zero trace)
};

/// Riesz-problem oracle on a vertex star (or the whole domain for z = -1),
/// refined `depth` times with all edges bisected, P1 or P2 elements.
class PatchOracle {
 public:
  PatchOracle(const OracleContext& ctx, Index z, int depth, int degree = 1, OracleKind kind = OracleKind::Dirichlet);
  ~PatchOracle();
  PatchOracle(PatchOracle&&) noexcept;

  /// Right-hand side ⟨ℓ, test_i⟩ (with φ_z weighting and mean removal for Hz).
  Eigen::VectorXd rhs(const Load& l) const;
  /// Riesz representer for a right-hand side.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  OracleResult norm(const Load& l) const;
  /// G_ij = ⟨ℓ_i, w_j⟩ with w_j the representer of ℓ_j.
  Eigen::MatrixXd gram(const std::vector<Load>& loads) const;

  const MeshPtr& submesh() const { return sub_; }
  const LagrangeSpace& space() const { return space_; }
  int depth() const { return depth_; }
  int degree() const { return space_.degree; }
  /// Lagrange multiplier of the last Hz solve (should vanish).
  double last_multiplier() const { return last_multiplier_; }

 private:
  struct Factor;
  Index z_;
  int depth_;
  OracleKind kind_;
  bool neumann_ = false;
  Index pinned_ = -1;
  MeshPtr sub_;
  LagrangeSpace space_;
  TestBasis tests_;
  Eigen::VectorXd integrals_;
  double region_area_ = 0.0;
  std::vector<Index> free_;     // dof -> reduced index or -1
  std::unique_ptr<Factor> factor_;
  mutable double last_multiplier_ = 0.0;
};

/// ‖ℓ‖_{H⁻¹(ω_z)} (z ≥ 0) or ‖ℓ‖_{H⁻¹(Ω)} (z = -1).
OracleResult oracle_dual_norm(const Load& l, const MeshPtr& mesh, Index z, int depth, int degree = 1);
/// ‖φ_z ℓ‖_{H_z*}.
OracleResult oracle_hz_norm(const Load& l, const MeshPtr& mesh, Index z, int depth, int degree = 1);

/// Per-vertex oracle values ‖ℓ‖_{H⁻¹(ω_z)} for all vertices.
std::vector<OracleResult> oracle_star_norms(const Load& l, const MeshPtr& mesh, int depth, int degree = 1,
                                            OracleKind kind = OracleKind::Dirichlet);

/// sqrt(Σ_z midpoint_z) from brackets.
double localized_norm(const DiscretizedResidual& r, const BiorthSystem& b);
/// sqrt(Σ_z oracle_z²).
double localized_norm(const Load& l, const MeshPtr& mesh, int depth, int degree = 1);

void write_oracle_csv(std::ostream& os, const std::vector<OracleResult>& values);

}  // namespace eosc
