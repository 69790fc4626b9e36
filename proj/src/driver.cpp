#include "eosc/driver.hpp"
#include "eosc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace eosc {

void ExperimentConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  if (oracle_depth < 0) throw std::invalid_argument("oracle_depth must be nonnegative");
  if (reference_rounds < 1) throw std::invalid_argument("reference_rounds must be at least 1");
  if (bisections < 1) throw std::invalid_argument("bisections must be at least 1");
  if (preset != "sine" && preset != "face_dirac" && preset != "discrete_laplacian")
    throw std::invalid_argument("unknown preset: " + preset);
  if (family != "all") (void)parse_family(family);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto to_bool = [](const std::string& v) { return v == "1" || v == "true" || v == "yes" || v == "on"; };
  if (key == "preset") preset = value;
  else if (key == "family") family = value;
  else if (key == "theta") theta = std::stod(value);
  else if (key == "rounds") rounds = std::stoi(value);
  else if (key == "max_dofs") max_dofs = static_cast<std::size_t>(std::stoull(value));
  else if (key == "oracle_depth") oracle_depth = std::stoi(value);
  else if (key == "initial_refinements") initial_refinements = std::stoi(value);
  else if (key == "reference_rounds") reference_rounds = std::stoi(value);
  else if (key == "bisections") bisections = std::stoi(value);
  else if (key == "compute_osc") compute_osc = to_bool(value);
  else if (key == "output") output = value;
  else if (key == "plot") plot = value;
  else throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig read_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::vector<Index> dorfler_mark(const std::vector<double>& eta2, double theta) {
  std::vector<Index> order(eta2.size());
  std::iota(order.begin(), order.end(), 0);
  const double total = std::accumulate(eta2.begin(), eta2.end(), 0.0);
  if (theta >= 1.0 || total <= 0.0) return order;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return eta2[static_cast<std::size_t>(a)] > eta2[static_cast<std::size_t>(b)];
  });
  double acc = 0.0;
  std::size_t n = 0;
  while (n < order.size() && acc < theta * total) acc += eta2[static_cast<std::size_t>(order[n++])];
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

namespace {

std::vector<std::string> families_of(const std::string& fam) {
  if (fam == "all") return {"hier", "res", "local", "equil"};
  return {fam};
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
  config.validate();
  MeshPtr mesh = refine_uniform(unit_square(), config.initial_refinements);
  const Load f = preset_load(config.preset, mesh);
  const auto fams = families_of(config.family);

  RunResult result;
  std::vector<P1Function> solutions;
  for (int round = 0; round < config.rounds; ++round) {
    const P1Function u = solve_galerkin(mesh, f);
    const BiorthSystem b(mesh);
    ConvergenceRow row;
    row.round = round;
    row.elements = mesh->num_elements();
    row.interior_vertices = mesh->num_interior_vertices();

    std::vector<double> mark_eta;
    std::vector<double> osc_hz;
    if (config.compute_osc) {
      const auto osc = oscillation(f, b, config.oracle_depth);
      double s = 0.0;
      for (double o : osc) s += o * o;
      row.osc = std::sqrt(s);
    }
    for (const auto& name : fams) {
      const Family fam = parse_family(name);
      const EstimatorReport rep = estimate(fam, f, u, b);
      row.estimators[family_name(fam)] = rep.global;
      for (double v : rep.values) row.max_indicator = std::max(row.max_indicator, v);
      if (mark_eta.empty()) {
        mark_eta = element_indicators(rep, b);
        row.estimator = rep.global;
      }
      if (fam == Family::Equilibrated) {
        row.flux_residual = rep.check;
        if (config.compute_osc) {
          osc_hz = oscillation(f, b, config.oracle_depth, true);
          double s = 0.0, bound = 0.0;
          for (std::size_t z = 0; z < osc_hz.size(); ++z) {
            s += osc_hz[z] * osc_hz[z];
            bound += std::pow(rep.values[z] + osc_hz[z], 2);
          }
          row.osc_hz = std::sqrt(s);
          row.flux_bound["equilibrated"] = std::sqrt((kDim + 1) * bound);
        }
      }
    }
    result.rows.push_back(row);
    solutions.push_back(u);

    if (round + 1 == config.rounds) break;
    const auto marked = dorfler_mark(mark_eta, config.theta);
    MeshPtr next = mesh;
    std::vector<Index> to_refine = marked;
    for (int pass = 0; pass < config.bisections; ++pass) {
      const RefinementResult rr = refine_nvb(next, to_refine);
      // Children of refined elements are bisected again in the next pass.
      std::vector<char> was_marked(next->num_elements(), 0);
      for (Index k : to_refine) was_marked[static_cast<std::size_t>(k)] = 1;
      to_refine.clear();
      for (std::size_t c = 0; c < rr.parent.size(); ++c)
        if (was_marked[static_cast<std::size_t>(rr.parent[c])]) to_refine.push_back(static_cast<Index>(c));
      next = rr.mesh;
    }
    if (next->num_interior_vertices() > config.max_dofs) {
      result.budget_exhausted = true;
      break;
    }
    mesh = next;
  }

  // Reference solution on the finest mesh plus extra bisection rounds.
  MeshPtr ref_mesh = mesh;
  MeshPtr prev_mesh;
  for (int i = 0; i < config.reference_rounds; ++i) {
    prev_mesh = ref_mesh;
    ref_mesh = refine_nvb_all(ref_mesh);
  }
  const P1Function u_ref = solve_galerkin(ref_mesh, f);
  const P1Function u_prev = solve_galerkin(prev_mesh, f);
  result.reference_gap = energy_norm_difference(u_ref, u_prev);

  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    auto& row = result.rows[r];
    row.error = energy_norm_difference(u_ref, solutions[r]);
    if (r > 0 && row.error > 0 && result.rows[r - 1].error > 0)
      row.rate = std::log(row.error / result.rows[r - 1].error) /
                 std::log(double(row.interior_vertices) / double(result.rows[r - 1].interior_vertices));
    if (row.error > 0) {
      xs.push_back(double(row.interior_vertices));
      ys.push_back(row.error);
    }
  }
  result.fitted_rate = fitted_slope(xs, ys);
  return result;
}

namespace {

struct Segment {
  Point p, q;
  bool contains_edge(const Point& a, const Point& b) const {
    auto on = [&](const Point& x) {
      const double dx = q.x - p.x, dy = q.y - p.y;
      const double len2 = dx * dx + dy * dy;
      const double cross = dx * (x.y - p.y) - dy * (x.x - p.x);
      if (std::abs(cross) > 1e-12 * len2) return false;
      const double t = (dx * (x.x - p.x) + dy * (x.y - p.y)) / len2;
      return t > -1e-12 && t < 1.0 + 1e-12;
    };
    return on(a) && on(b);
  }
  double distance(const Point& x) const {
    const double dx = q.x - p.x, dy = q.y - p.y;
    return std::abs(dx * (x.y - p.y) - dy * (x.x - p.x)) / std::hypot(dx, dy);
  }
};

std::vector<Index> faces_on(const Mesh& m, const Segment& s) {
  std::vector<Index> out;
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    const Face& F = m.faces()[f];
    if (s.contains_edge(m.point(F.v[0]), m.point(F.v[1]))) out.push_back(static_cast<Index>(f));
  }
  return out;
}

}  // namespace

std::vector<OverestimationRow> overestimation_demo(const DemoConfig& cfg) {
  const MeshPtr M = refine_uniform(unit_square(), 2);
  MeshPtr B = refine_uniform(M, 1);

  // A face of the background strictly inside an element of M: its Dirac is not in D(M).
  const auto anc0 = ancestor_map(*B, *M);
  Segment seg{};
  bool found = false;
  for (std::size_t f = 0; f < B->num_faces() && !found; ++f) {
    const Face& F = B->faces()[f];
    if (!F.interior) continue;
    const Point a = B->point(F.v[0]), b = B->point(F.v[1]);
    const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const Bary l = M->barycentric(anc0[static_cast<std::size_t>(F.elements[0])], mid);
    if (l[0] > 1e-9 && l[1] > 1e-9 && l[2] > 1e-9) {
      seg = {a, b};
      found = true;
    }
  }
  if (!found) throw std::logic_error("overestimation demo: no interior face found");

  std::vector<OverestimationRow> rows;
  for (int k = 1; k <= cfg.kmax; ++k) {
    for (int r = 0; r < cfg.rounds_per_k; ++r) {
      std::vector<Index> marked;
      for (Index f : faces_on(*B, seg))
        for (Index e : B->face(f).elements)
          if (e >= 0) marked.push_back(e);
      std::sort(marked.begin(), marked.end());
      marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
      B = refine_nvb(B, marked).mesh;
    }
    // Spread the mass |e| of every sub-face evenly over its two elements.
    ElementDensity d{B, std::vector<BaryPoly>(B->num_elements())};
    std::vector<double> dens(B->num_elements(), 0.0);
    double width = 0.0;
    for (Index f : faces_on(*B, seg)) {
      const Face& F = B->face(f);
      const double len = B->face_length(f);
      for (Index e : F.elements) {
        dens[static_cast<std::size_t>(e)] += 0.5 * len / B->area(e);
        for (Index v : B->element(e).v) width = std::max(width, seg.distance(B->point(v)));
      }
    }
    for (std::size_t e = 0; e < dens.size(); ++e)
      if (dens[e] != 0.0) d.density[e] = BaryPoly::constant(dens[e]);
    const Load fk(d);

    OverestimationRow row;
    row.k = k;
    row.background_elements = B->num_elements();
    row.width = width;
    const P1Function u = solve_galerkin(M, fk);
    const MeshPtr ref = cfg.reference_depth > 0 ? refine_uniform(B, cfg.reference_depth) : B;
    const P1Function u_ref = solve_galerkin(ref, fk);
    row.error = energy_norm_difference(u_ref, u);
    row.osc0 = classical_osc0(fk, M).global;
    const Load diff = fk - as_load(project(fk, M));
    const OracleContext ctx(M, B);
    for (std::size_t z = 0; z < M->num_vertices(); ++z) {
      const double v = PatchOracle(ctx, static_cast<Index>(z), cfg.oracle_depth).norm(diff).value;
      row.osc_sum += v * v;
    }
    row.osc0_ratio = row.osc0 / row.error;
    row.dominated_ratio = row.osc_sum / (row.error * row.error);
    rows.push_back(row);
  }
  return rows;
}

void write_table_csv(std::ostream& os, const RunResult& r) {
  os << "round,elements,interior_vertices,error,estimator,osc,rate\n" << std::setprecision(12);
  for (const auto& row : r.rows)
    os << row.round << ',' << row.elements << ',' << row.interior_vertices << ',' << row.error << ','
       << row.estimator << ',' << row.osc << ',' << row.rate << '\n';
}

void write_demo_csv(std::ostream& os, const std::vector<OverestimationRow>& rows) {
  os << "k,background_elements,width,error,osc0,osc_sum,osc0_ratio,dominated_ratio\n" << std::setprecision(12);
  for (const auto& r : rows)
    os << r.k << ',' << r.background_elements << ',' << r.width << ',' << r.error << ',' << r.osc0 << ','
       << r.osc_sum << ',' << r.osc0_ratio << ',' << r.dominated_ratio << '\n';
}

void emit_plots(const RunResult& r, const std::string& path) {
  const std::string csv = path + ".csv";
  {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv);
    write_table_csv(out, r);
  }
  std::ofstream gp(path + ".gp");
  if (!gp) throw std::runtime_error("cannot write " + path + ".gp");
  std::string name = csv;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  gp << "# log-log convergence plot; columns: 3 interior_vertices, 4 error, 5 estimator, 6 osc\n"
     << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set xlabel 'interior vertices'\n"
     << "set key top right\n"
     << "plot '" << name << "' every ::1 using 3:4 with linespoints title 'error', \\\n"
     << "     '" << name << "' every ::1 using 3:5 with linespoints title 'estimator', \\\n"
     << "     '" << name << "' every ::1 using 3:6 with linespoints title 'oscillation'\n";
}

}  // namespace eosc
