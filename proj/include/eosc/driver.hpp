#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "eosc/estimators.hpp"

namespace eosc {

struct ExperimentConfig {
  std::string preset = "sine";  // sine | face_dirac | discrete_laplacian
  std::string family = "res";   // hier | res | local | equil | all
  double theta = 0.5;
  int rounds = 5;
  std::size_t max_dofs = 200000;
  int oracle_depth = 2;
  int initial_refinements = 2;  // uniform refinements of the two-triangle square
  int reference_rounds = 6;     // extra bisection rounds for the reference solution
  int bisections = 2;           // bisection passes per round for marked elements
  bool compute_osc = true;
  std::string output;           // CSV path (empty: none)
  std::string plot;             // plot script path (empty: none)

  void validate() const;
  /// Applies one key=value setting; unknown keys throw.
  void set(const std::string& key, const std::string& value);
};

/// Reads a flat key=value file ('#' starts a comment).
ExperimentConfig read_config(const std::string& path, ExperimentConfig base = {});

struct ConvergenceRow {
  int round = 0;
  std::size_t elements = 0;
  std::size_t interior_vertices = 0;
  double error = 0.0;
  double estimator = 0.0;  // first family
  double osc = 0.0;        // sqrt(Σ_z osc_z²), Dirichlet star oracle
  double osc_hz = 0.0;     // sqrt(Σ_z osc_z²), H_z* oracle (equilibrated runs)
  double rate = 0.0;       // log-log slope of the error against interior vertices
  std::map<std::string, double> estimators;    // global value per family
  std::map<std::string, double> flux_bound;    // equilibrated: sqrt((d+1) Σ_z (‖Ξ_z‖ + osc_z)²)
  double max_indicator = 0.0;                  // largest local indicator of any family
  double flux_residual = 0.0;                  // equilibrated constraint residual
};

struct RunResult {
  std::vector<ConvergenceRow> rows;
  bool budget_exhausted = false;
  double reference_gap = 0.0;  // ‖∇(u_ref - u_ref')‖ with one reference level less
  double fitted_rate = 0.0;    // least-squares slope over all rows
};

RunResult run(const ExperimentConfig& config);

struct OverestimationRow {
  int k = 0;
  std::size_t background_elements = 0;
  double width = 0.0;
  double error = 0.0;
  double osc0 = 0.0;
  double osc_sum = 0.0;  // Σ_z ‖f_k - P_M f_k‖²_{H⁻¹(ω_z)}
  double osc0_ratio = 0.0;       // osc0 / error
  double dominated_ratio = 0.0;  // osc_sum / error²
};

struct DemoConfig {
  int kmax = 6;
  int rounds_per_k = 4;  // bisection rounds along the support per step
  int oracle_depth = 1;
  int reference_depth = 1;
};

std::vector<OverestimationRow> overestimation_demo(const DemoConfig& cfg = {});

/// Dörfler marking: minimal prefix of the sorted indicators reaching θ·total.
std::vector<Index> dorfler_mark(const std::vector<double>& eta2, double theta);

/// Least-squares slope of log y against log x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_table_csv(std::ostream& os, const RunResult& r);
void write_demo_csv(std::ostream& os, const std::vector<OverestimationRow>& rows);
/// Writes `<path>.csv` and a gnuplot script `<path>.gp` plotting it.
void emit_plots(const RunResult& r, const std::string& path);

}  // namespace eosc
