#include "eosc/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace eosc {

namespace {

using nlohmann::json;

std::runtime_error parse_error(const std::string& what) { return std::runtime_error("mesh file: " + what); }

std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open value file " + path);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  if (!in.eof()) throw std::runtime_error("value file " + path + ": malformed number");
  return out;
}

Load discrete_laplacian_from(const std::vector<double>& values, const MeshPtr& mesh) {
  if (values.size() != mesh->num_vertices())
    throw std::runtime_error("discrete_laplacian: expected " + std::to_string(mesh->num_vertices()) + " vertex values, got " +
                             std::to_string(values.size()));
  P1Function v{mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(values.size()))};
  for (std::size_t z = 0; z < values.size(); ++z)
    if (!mesh->vertex(static_cast<Index>(z)).on_boundary) v.values(static_cast<Eigen::Index>(z)) = values[z];
  return -1.0 * laplacian_load(v);
}

Index checked_face(const MeshPtr& mesh, long long f) {
  if (f < 0 || static_cast<std::size_t>(f) >= mesh->num_faces())
    throw std::runtime_error("face index out of range: " + std::to_string(f));
  return static_cast<Index>(f);
}

Load term_from_json(const json& t, const MeshPtr& mesh, const std::filesystem::path& base) {
  const std::string kind = t.at("kind").get<std::string>();
  if (kind == "preset") {
    const std::string name = t.at("name").get<std::string>();
    const auto open = name.find('(');
    if (open == std::string::npos) return preset_load(name, mesh);
    if (name.back() != ')') throw std::runtime_error("bad preset name: " + name);
    const std::string head = name.substr(0, open), arg = name.substr(open + 1, name.size() - open - 2);
    if (head == "face_dirac") return face_dirac_load(mesh, checked_face(mesh, std::stoll(arg)));
    if (head == "discrete_laplacian") return discrete_laplacian_from(read_values((base / arg).string()), mesh);
    throw std::runtime_error("unknown preset: " + name);
  }
  if (kind == "element") {
    const int degree = t.value("degree", 0);
    const json& c = t.at("coefficients");
    if (c.size() != mesh->num_elements())
      throw std::runtime_error("element term: expected one entry per element (" + std::to_string(mesh->num_elements()) + ")");
    if (degree == 0) return element_constants(mesh, c.get<std::vector<double>>());
    ElementDensity d{mesh, std::vector<BaryPoly>(mesh->num_elements())};
    for (std::size_t k = 0; k < c.size(); ++k)
      for (const auto& mono : c[k]) {
        const auto a = mono.get<std::vector<double>>();
        if (a.size() != 4 || a[0] + a[1] + a[2] != degree)
          throw std::runtime_error("element term: monomials are [a, b, c, coef] with a + b + c = degree");
        d.density[k].add_term(Exponent{static_cast<std::uint8_t>(a[0]), static_cast<std::uint8_t>(a[1]),
                                       static_cast<std::uint8_t>(a[2])},
                              a[3]);
      }
    return Load(std::move(d));
  }
  if (kind == "face") {
    std::map<Index, double> values;
    for (const auto& [key, v] : t.at("coefficients").items()) {
      const Index f = checked_face(mesh, std::stoll(key));
      if (!mesh->face(f).interior) throw std::runtime_error("face term on boundary face " + key);
      values[f] = v.get<double>();
    }
    return face_constants(mesh, values);
  }
  if (kind == "discrete_laplacian") {
    if (t.contains("file")) return discrete_laplacian_from(read_values((base / t["file"].get<std::string>()).string()), mesh);
    return discrete_laplacian_from(t.at("values").get<std::vector<double>>(), mesh);
  }
  throw std::runtime_error("unknown load term kind: " + kind);
}

}  // namespace

MeshPtr read_mesh(std::istream& in) {
  std::string w1, w2;
  long long nv = -1, ne = -1;
  if (!(in >> w1 >> nv >> w2 >> ne) || w1 != "vertices" || w2 != "elements" || nv < 3 || ne < 1)
    throw parse_error("expected header 'vertices N elements M'");
  std::vector<Point> pts(static_cast<std::size_t>(nv));
  for (auto& p : pts)
    if (!(in >> p.x >> p.y) || !std::isfinite(p.x) || !std::isfinite(p.y)) throw parse_error("bad vertex line");
  std::vector<std::array<Index, 3>> tri(static_cast<std::size_t>(ne));
  for (auto& t : tri) {
    long long a, b, c;
    if (!(in >> a >> b >> c)) throw parse_error("bad element line");
    for (long long i : {a, b, c})
      if (i < 0 || i >= nv) throw parse_error("vertex index out of range: " + std::to_string(i));
    t = {static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)};
  }
  std::string extra;
  if (in >> extra) throw parse_error("trailing content");
  return Mesh::build(pts, tri);
}

MeshPtr read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  return read_mesh(in);
}

void write_mesh(std::ostream& os, const Mesh& m) {
  os << "vertices " << m.num_vertices() << " elements " << m.num_elements() << '\n';
  os.precision(17);
  for (const auto& v : m.vertices()) os << v.coords.x << ' ' << v.coords.y << '\n';
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const auto& e = m.element(static_cast<Index>(k));
    os << e.v[0] << ' ' << e.v[1] << ' ' << e.v[2] << '\n';
  }
}

Load parse_load_json(const std::string& text, const MeshPtr& mesh, const std::string& base_dir) {
  const json doc = json::parse(text);
  const json& terms = doc.is_array() ? doc : doc.at("terms");
  Load f;
  for (const auto& t : terms) {
    Load term = term_from_json(t, mesh, base_dir);
    if (t.contains("scale")) term *= t["scale"].get<double>();
    f += term;
  }
  if (f.empty()) f = element_constants(mesh, std::vector<double>(mesh->num_elements(), 0.0));
  return f;
}

Load read_load_file(const std::string& path, const MeshPtr& mesh) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open load file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_load_json(ss.str(), mesh, std::filesystem::path(path).parent_path().string());
}

Load preset_load(const std::string& name, const MeshPtr& mesh) {
  if (name == "sine") return sine_load(mesh);
  if (name == "face_dirac") return face_dirac_load(mesh);
  if (name == "discrete_laplacian") {
    const P1Function v = interpolate_p1(mesh, [](double x, double y) { return std::sin(M_PI * x) * x * y * (1.0 - y); });
    return -1.0 * laplacian_load(v);
  }
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace eosc
