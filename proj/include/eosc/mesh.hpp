#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eosc/bary_poly.hpp"

namespace eosc {

using Index = std::int32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vertex {
  Point coords;
  bool on_boundary = false;
};

/// Positively oriented triangle. Local edge i is the edge opposite vertex i.
struct Element {
  std::array<Index, 3> v{};
  int refinement_edge = 0;
};

struct Face {
  std::array<Index, 2> v{};
  std::array<Index, 2> elements{-1, -1};
  std::array<int, 2> local{-1, -1};  // local edge index inside each element
  bool interior = false;
};

struct ElementGeometry {
  double h = 0.0;     // diameter
  double rho = 0.0;   // inscribed-circle diameter
  double area = 0.0;
  std::array<double, 3> heights{};  // height over the face opposite vertex i
  std::array<double, 3> face_lengths{};
};

class MeshError : public std::runtime_error {
 public:
  MeshError(const std::string& entity, Index id, const std::string& what)
      : std::runtime_error(what + " (" + entity + " " + std::to_string(id) + ")"),
        entity_(entity),
        id_(id) {}
  const std::string& entity() const { return entity_; }
  Index id() const { return id_; }

 private:
  std::string entity_;
  Index id_;
};

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

/// Immutable conforming triangulation. Refinements keep a pointer to the
/// mesh they came from and a map child element -> parent element.
class Mesh {
 public:
  /// Validates and builds. Negatively oriented triples are reoriented. When
  /// `refinement_edges` is absent each element uses its longest edge.
  static MeshPtr build(const std::vector<Point>& coords,
                       const std::vector<std::array<Index, 3>>& triples,
                       const std::vector<int>* refinement_edges = nullptr,
                       MeshPtr parent = nullptr, std::vector<Index> parent_element = {});

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_faces() const { return faces_.size(); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Vertex& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Element& element(Index k) const { return elements_[static_cast<std::size_t>(k)]; }
  const Face& face(Index f) const { return faces_[static_cast<std::size_t>(f)]; }
  const Point& point(Index i) const { return vertex(i).coords; }

  /// Face opposite local vertex i of element k.
  Index element_face(Index k, int i) const { return element_faces_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]; }

  /// Elements containing z.
  std::vector<Index> star_elements(Index z) const;
  /// Interior faces containing z.
  std::vector<Index> star_faces(Index z) const;
  /// Diameter of the vertex star.
  double star_diameter(Index z) const;

  double area(Index k) const { return geometry_[static_cast<std::size_t>(k)].area; }
  const ElementGeometry& geometry(Index k) const { return geometry_[static_cast<std::size_t>(k)]; }
  double face_length(Index f) const;
  /// Gradients of the barycentric coordinates on element k.
  const std::array<std::array<double, 2>, 3>& bary_gradients(Index k) const {
    return gradients_[static_cast<std::size_t>(k)];
  }
  /// Outward unit normal of local edge i of element k.
  std::array<double, 2> outward_normal(Index k, int i) const;

  /// Barycentric coordinates of p with respect to element k.
  Bary barycentric(Index k, const Point& p) const;
  Point map_point(Index k, const Bary& l) const;

  /// Shape coefficient max_K h_K / rho_K.
  double shape_coefficient() const;
  double max_h() const;

  /// Local index of vertex v in element k, or -1.
  int local_index(Index k, Index v) const;

  /// Interior vertex numbering: -1 for boundary vertices.
  const std::vector<Index>& interior_index() const { return interior_index_; }
  std::size_t num_interior_vertices() const { return num_interior_; }

  std::uint64_t id() const { return id_; }
  const MeshPtr& parent() const { return parent_; }
  Index parent_element(Index k) const { return parent_element_[static_cast<std::size_t>(k)]; }

 private:
  Mesh() = default;

  std::vector<Vertex> vertices_;
  std::vector<Element> elements_;
  std::vector<Face> faces_;
  std::vector<std::array<Index, 3>> element_faces_;
  std::vector<ElementGeometry> geometry_;
  std::vector<std::array<std::array<double, 2>, 3>> gradients_;
  // CSR star index: elements incident to each vertex
  std::vector<Index> star_offsets_, star_list_;
  std::vector<Index> interior_index_;
  std::size_t num_interior_ = 0;
  std::uint64_t id_ = 0;
  MeshPtr parent_;
  std::vector<Index> parent_element_;
};

struct RefinementResult {
  MeshPtr mesh;
  std::vector<Index> parent;  // child element -> element of the input mesh
};

/// Newest vertex bisection of all marked elements plus conforming closure.
RefinementResult refine_nvb(const MeshPtr& mesh, const std::vector<Index>& marked);

/// Bisects every element once (all marked).
MeshPtr refine_nvb_all(const MeshPtr& mesh);

/// Splits every element into four similar children by bisecting all edges.
MeshPtr refine_uniform(const MeshPtr& mesh, int levels = 1);

/// Mesh made of the given elements, linked to `mesh` as its parent.
MeshPtr extract_submesh(const MeshPtr& mesh, const std::vector<Index>& elements);

/// For every element of `fine`, the element of `coarse` containing it.
/// Throws MeshError if `fine` does not descend from `coarse`.
std::vector<Index> ancestor_map(const Mesh& fine, const Mesh& coarse);

/// True if `fine` is `coarse` or descends from it.
bool descends_from(const Mesh& fine, const Mesh& coarse);

/// Barycentric coordinates of the vertices of element kf (of `fine`) inside
/// element kc (of `coarse`), column j = vertex j.
std::array<Bary, 3> bary_map(const Mesh& fine, Index kf, const Mesh& coarse, Index kc);

/// Two-triangle unit square (0,0),(1,0),(1,1),(0,1).
MeshPtr unit_square();

}  // namespace eosc
