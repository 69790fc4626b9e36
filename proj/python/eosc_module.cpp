#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "eosc/biorth.hpp"
#include "eosc/driver.hpp"
#include "eosc/dualnorm.hpp"
#include "eosc/estimators.hpp"
#include "eosc/fem.hpp"
#include "eosc/io.hpp"

namespace py = pybind11;
using namespace eosc;

namespace {

// Python holds meshes as shared_ptr<Mesh>; the library never mutates them.
using PyMesh = std::shared_ptr<Mesh>;
PyMesh wrap(const MeshPtr& m) { return std::const_pointer_cast<Mesh>(m); }

PyMesh mesh_from_arrays(const Eigen::MatrixXd& pts, const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& tri) {
  if (pts.cols() != 2 || tri.cols() != 3) throw std::invalid_argument("expected points (N, 2) and triangles (M, 3)");
  std::vector<Point> p(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) p[static_cast<std::size_t>(i)] = {pts(i, 0), pts(i, 1)};
  std::vector<std::array<Index, 3>> t(static_cast<std::size_t>(tri.rows()));
  for (Eigen::Index i = 0; i < tri.rows(); ++i)
    for (int j = 0; j < 3; ++j) {
      const long long v = tri(i, j);
      if (v < 0 || v >= pts.rows()) throw std::invalid_argument("triangle vertex index out of range");
      t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<Index>(v);
    }
  return wrap(Mesh::build(p, t));
}

Eigen::MatrixXd points_of(const Mesh& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.num_vertices()), 2);
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = m.vertex(static_cast<Index>(i)).coords.x;
    out(static_cast<Eigen::Index>(i), 1) = m.vertex(static_cast<Index>(i)).coords.y;
  }
  return out;
}

Eigen::Matrix<long long, Eigen::Dynamic, 3> triangles_of(const Mesh& m) {
  Eigen::Matrix<long long, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(m.num_elements()), 3);
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int j = 0; j < 3; ++j) out(static_cast<Eigen::Index>(k), j) = m.element(static_cast<Index>(k)).v[static_cast<std::size_t>(j)];
  return out;
}

py::dict report_dict(const EstimatorReport& r) {
  py::dict d;
  d["family"] = family_name(r.family);
  d["index_kind"] = r.index_kind;
  d["values"] = r.values;
  d["global"] = r.global;
  d["check"] = r.check;
  return d;
}

ExperimentConfig config_from(const py::dict& opts) {
  ExperimentConfig c;
  for (const auto& [k, v] : opts) c.set(py::str(k), py::str(v));
  c.validate();
  return c;
}

py::dict row_dict(const ConvergenceRow& r) {
  py::dict d;
  d["round"] = r.round;
  d["elements"] = r.elements;
  d["interior_vertices"] = r.interior_vertices;
  d["error"] = r.error;
  d["estimator"] = r.estimator;
  d["osc"] = r.osc;
  d["osc_hz"] = r.osc_hz;
  d["rate"] = r.rate;
  d["estimators"] = r.estimators;
  d["flux_bound"] = r.flux_bound;
  d["max_indicator"] = r.max_indicator;
  d["flux_residual"] = r.flux_residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_eosc, m) {
  m.doc() = "A posteriori error estimators with error-dominated oscillation (2D Poisson, P1)";

  py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_ValueError);

  py::class_<Mesh, PyMesh>(m, "Mesh")
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_elements", &Mesh::num_elements)
      .def_property_readonly("num_faces", &Mesh::num_faces)
      .def_property_readonly("num_interior_vertices", &Mesh::num_interior_vertices)
      .def_property_readonly("points", &points_of)
      .def_property_readonly("triangles", &triangles_of)
      .def("area", &Mesh::area, py::arg("element"))
      .def("shape_coefficient", &Mesh::shape_coefficient)
      .def("__repr__", [](const Mesh& x) {
        std::ostringstream os;
        os << "<Mesh vertices=" << x.num_vertices() << " elements=" << x.num_elements() << ">";
        return os.str();
      });

  m.def("unit_square", [] { return wrap(unit_square()); });
  m.def("mesh_from_arrays", &mesh_from_arrays, py::arg("points"), py::arg("triangles"));
  m.def("read_mesh", [](const std::string& p) { return wrap(read_mesh_file(p)); }, py::arg("path"));
  m.def("mesh_text", [](const PyMesh& x) {
    std::ostringstream os;
    write_mesh(os, *x);
    return os.str();
  });
  m.def("refine_uniform", [](const PyMesh& x, int levels) { return wrap(refine_uniform(x, levels)); }, py::arg("mesh"),
        py::arg("levels") = 1);
  m.def("refine_nvb_all", [](const PyMesh& x) { return wrap(refine_nvb_all(x)); }, py::arg("mesh"));
  m.def("refine_nvb", [](const PyMesh& x, const std::vector<Index>& marked) { return wrap(refine_nvb(x, marked).mesh); },
        py::arg("mesh"), py::arg("marked"));

  py::class_<Load>(m, "Load")
      .def("__add__", [](const Load& a, const Load& b) { return a + b; })
      .def("__rmul__", [](const Load& a, double s) { return s * a; })
      .def("__mul__", [](const Load& a, double s) { return s * a; })
      .def("__neg__", [](const Load& a) { return -1.0 * a; });
  m.def("preset_load", [](const std::string& n, const PyMesh& x) { return preset_load(n, x); }, py::arg("name"), py::arg("mesh"));
  m.def("load_from_json", [](const std::string& t, const PyMesh& x, const std::string& d) { return parse_load_json(t, x, d); }, py::arg("text"), py::arg("mesh"), py::arg("base_dir") = ".");
  m.def("read_load", [](const std::string& p, const PyMesh& x) { return read_load_file(p, x); }, py::arg("path"), py::arg("mesh"));
  m.def("element_constants", [](const PyMesh& x, const std::vector<double>& v) { return element_constants(x, v); }, py::arg("mesh"), py::arg("values"));
  m.def("face_dirac_load", [](const PyMesh& x, Index f, double d) { return face_dirac_load(x, f, d); }, py::arg("mesh"),
        py::arg("face"), py::arg("density") = 1.0);
  m.def("load_vector", [](const Load& f, const PyMesh& x) { return load_vector(f, x); }, py::arg("load"), py::arg("mesh"), "Moments against the hat functions");

  m.def("solve", [](const PyMesh& x, const Load& f) { return solve_galerkin(x, f).values; }, py::arg("mesh"),
        py::arg("load"), "Galerkin solution, one value per vertex");
  m.def("energy_norm", [](const PyMesh& x, const Eigen::VectorXd& v) { return energy_norm(P1Function{x, v}); });

  m.def(
      "estimate",
      [](const PyMesh& x, const Load& f, const std::string& family) {
        const P1Function u = solve_galerkin(x, f);
        const BiorthSystem b(x);
        return report_dict(estimate(parse_family(family), f, u, b));
      },
      py::arg("mesh"), py::arg("load"), py::arg("family") = "res");
  m.def(
      "oscillation",
      [](const PyMesh& x, const Load& f, int depth, bool hz) { return oscillation(f, BiorthSystem(x), depth, hz); },
      py::arg("mesh"), py::arg("load"), py::arg("depth") = 2, py::arg("hz") = false);
  m.def(
      "biorth_deviation",
      [](const PyMesh& x) {
        const Eigen::MatrixXd p = BiorthSystem(x).dense_pairing_matrix();
        return (p - Eigen::MatrixXd::Identity(p.rows(), p.cols())).cwiseAbs().maxCoeff();
      },
      py::arg("mesh"), "max |<chi_i, psi_j> - delta_ij|");
  m.def(
      "dual_norm", [](const Load& f, const PyMesh& x, Index z, int depth) { return oracle_dual_norm(f, x, z, depth).value; },
      py::arg("load"), py::arg("mesh"), py::arg("vertex") = -1, py::arg("depth") = 2,
      "Oracle H^-1 norm on the star of a vertex, or on the whole domain for vertex=-1");

  m.def(
      "run",
      [](const py::dict& opts) {
        const RunResult r = run(config_from(opts));
        py::list rows;
        for (const auto& row : r.rows) rows.append(row_dict(row));
        py::dict d;
        d["rows"] = rows;
        d["fitted_rate"] = r.fitted_rate;
        d["reference_gap"] = r.reference_gap;
        d["budget_exhausted"] = r.budget_exhausted;
        return d;
      },
      py::arg("options") = py::dict(), "Refinement loop; options use the config file keys");
  m.def(
      "overestimation_demo",
      [](int kmax) {
        DemoConfig c;
        c.kmax = kmax;
        py::list out;
        for (const auto& r : overestimation_demo(c)) {
          py::dict d;
          d["k"] = r.k;
          d["background_elements"] = r.background_elements;
          d["width"] = r.width;
          d["error"] = r.error;
          d["osc0"] = r.osc0;
          d["osc_sum"] = r.osc_sum;
          d["osc0_ratio"] = r.osc0_ratio;
          d["dominated_ratio"] = r.dominated_ratio;
          out.append(d);
        }
        return out;
      },
      py::arg("kmax") = 6);
}
