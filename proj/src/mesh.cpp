#include "eosc/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <set>
#include <unordered_map>

namespace eosc {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

int longest_edge(const std::vector<Point>& p, const std::array<Index, 3>& v) {
  int best = 0;
  double best_len = -1.0;
  std::pair<Index, Index> best_pair{0, 0};
  for (int i = 0; i < 3; ++i) {
    const Index a = v[static_cast<std::size_t>((i + 1) % 3)];
    const Index b = v[static_cast<std::size_t>((i + 2) % 3)];
    const double len = dist(p[static_cast<std::size_t>(a)], p[static_cast<std::size_t>(b)]);
    const std::pair<Index, Index> pr = std::minmax(a, b);
    const double tol = 1e-12 * std::max(len, best_len);
    if (len > best_len + tol || (std::abs(len - best_len) <= tol && pr < best_pair)) {
      best = i;
      best_len = len;
      best_pair = pr;
    }
  }
  return best;
}

// Hanging-vertex test: no vertex may lie in the relative interior of a face.
void check_hanging(const std::vector<Vertex>& verts, const std::vector<Face>& faces) {
  if (verts.empty() || faces.empty()) return;
  double xmin = verts[0].coords.x, xmax = xmin, ymin = verts[0].coords.y, ymax = ymin;
  for (const auto& v : verts) {
    xmin = std::min(xmin, v.coords.x);
    xmax = std::max(xmax, v.coords.x);
    ymin = std::min(ymin, v.coords.y);
    ymax = std::max(ymax, v.coords.y);
  }
  const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
  const int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(verts.size()))));
  const double cell = extent / n * (1.0 + 1e-9);
  auto cell_of = [&](double x, double y) {
    int i = std::clamp(static_cast<int>((x - xmin) / cell), 0, n - 1);
    int j = std::clamp(static_cast<int>((y - ymin) / cell), 0, n - 1);
    return std::pair{i, j};
  };
  std::vector<std::vector<Index>> grid(static_cast<std::size_t>(n * n));
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto [ci, cj] = cell_of(verts[i].coords.x, verts[i].coords.y);
    grid[static_cast<std::size_t>(ci * n + cj)].push_back(static_cast<Index>(i));
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Point& a = verts[static_cast<std::size_t>(faces[f].v[0])].coords;
    const Point& b = verts[static_cast<std::size_t>(faces[f].v[1])].coords;
    const double len = dist(a, b);
    auto [i0, j0] = cell_of(std::min(a.x, b.x), std::min(a.y, b.y));
    auto [i1, j1] = cell_of(std::max(a.x, b.x), std::max(a.y, b.y));
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        for (Index q : grid[static_cast<std::size_t>(i * n + j)]) {
          if (q == faces[f].v[0] || q == faces[f].v[1]) continue;
          const Point& p = verts[static_cast<std::size_t>(q)].coords;
          const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
          if (std::abs(cross) > 1e-10 * len * len) continue;
          const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
          if (t > 1e-10 && t < 1.0 - 1e-10)
            throw MeshError("vertex", q, "non-conforming mesh: hanging vertex on face " + std::to_string(f));
        }
  }
}

}  // namespace

MeshPtr Mesh::build(const std::vector<Point>& coords, const std::vector<std::array<Index, 3>>& triples,
                    const std::vector<int>* refinement_edges, MeshPtr parent,
                    std::vector<Index> parent_element) {
  std::shared_ptr<Mesh> m(new Mesh());
  const auto nv = static_cast<Index>(coords.size());
  m->vertices_.resize(coords.size());
  for (Index i = 0; i < nv; ++i) {
    const Point& p = coords[static_cast<std::size_t>(i)];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("vertex", i, "non-finite coordinates");
    m->vertices_[static_cast<std::size_t>(i)].coords = p;
  }
  if (refinement_edges && refinement_edges->size() != triples.size())
    throw std::invalid_argument("refinement edge list size mismatch");

  m->elements_.resize(triples.size());
  std::set<std::array<Index, 3>> seen;
  for (std::size_t k = 0; k < triples.size(); ++k) {
    auto t = triples[k];
    const auto kk = static_cast<Index>(k);
    for (Index v : t)
      if (v < 0 || v >= nv) throw MeshError("element", kk, "vertex index out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw MeshError("element", kk, "repeated vertex");
    const double a = signed_area(coords[static_cast<std::size_t>(t[0])], coords[static_cast<std::size_t>(t[1])],
                                 coords[static_cast<std::size_t>(t[2])]);
    const double scale = std::max({dist(coords[static_cast<std::size_t>(t[0])], coords[static_cast<std::size_t>(t[1])]),
                                   dist(coords[static_cast<std::size_t>(t[1])], coords[static_cast<std::size_t>(t[2])]),
                                   dist(coords[static_cast<std::size_t>(t[0])], coords[static_cast<std::size_t>(t[2])])});
    if (!(std::abs(a) > 1e-14 * scale * scale)) throw MeshError("element", kk, "zero-area element");
    int r = refinement_edges ? (*refinement_edges)[k] : -1;
    if (a < 0) {
      std::swap(t[1], t[2]);
      if (r == 1) r = 2;
      else if (r == 2) r = 1;
    }
    if (r < 0) r = longest_edge(coords, t);
    auto sorted = t;
    std::sort(sorted.begin(), sorted.end());
    if (!seen.insert(sorted).second) throw MeshError("element", kk, "duplicate element");
    m->elements_[k] = Element{t, r};
  }

  // Faces
  std::unordered_map<std::uint64_t, Index> face_of;
  face_of.reserve(triples.size() * 2);
  m->element_faces_.resize(triples.size());
  for (std::size_t k = 0; k < m->elements_.size(); ++k) {
    const auto& e = m->elements_[k];
    for (int i = 0; i < 3; ++i) {
      const Index a = e.v[static_cast<std::size_t>((i + 1) % 3)];
      const Index b = e.v[static_cast<std::size_t>((i + 2) % 3)];
      auto [it, inserted] = face_of.try_emplace(edge_key(a, b), static_cast<Index>(m->faces_.size()));
      if (inserted) {
        Face f;
        f.v = {std::min(a, b), std::max(a, b)};
        f.elements = {static_cast<Index>(k), -1};
        f.local = {i, -1};
        m->faces_.push_back(f);
      } else {
        Face& f = m->faces_[static_cast<std::size_t>(it->second)];
        if (f.elements[1] >= 0) throw MeshError("face", it->second, "face shared by more than two elements");
        f.elements[1] = static_cast<Index>(k);
        f.local[1] = i;
        f.interior = true;
      }
      m->element_faces_[k][static_cast<std::size_t>(i)] = it->second;
    }
  }

  std::vector<char> used(coords.size(), 0);
  for (const auto& e : m->elements_)
    for (Index v : e.v) used[static_cast<std::size_t>(v)] = 1;
  for (Index i = 0; i < nv; ++i)
    if (!used[static_cast<std::size_t>(i)]) throw MeshError("vertex", i, "vertex not used by any element");
  for (const auto& f : m->faces_)
    if (!f.interior)
      for (Index v : f.v) m->vertices_[static_cast<std::size_t>(v)].on_boundary = true;

  check_hanging(m->vertices_, m->faces_);

  // Geometry
  m->geometry_.resize(m->elements_.size());
  m->gradients_.resize(m->elements_.size());
  for (std::size_t k = 0; k < m->elements_.size(); ++k) {
    const auto& e = m->elements_[k];
    std::array<Point, 3> p;
    for (std::size_t i = 0; i < 3; ++i) p[i] = coords[static_cast<std::size_t>(e.v[i])];
    ElementGeometry g;
    g.area = signed_area(p[0], p[1], p[2]);
    double perimeter = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      g.face_lengths[i] = dist(p[(i + 1) % 3], p[(i + 2) % 3]);
      perimeter += g.face_lengths[i];
      g.h = std::max(g.h, g.face_lengths[i]);
      g.heights[i] = kDim * g.area / g.face_lengths[i];
      const double ex = p[(i + 2) % 3].x - p[(i + 1) % 3].x;
      const double ey = p[(i + 2) % 3].y - p[(i + 1) % 3].y;
      m->gradients_[k][i] = {-ey / (2.0 * g.area), ex / (2.0 * g.area)};
    }
    g.rho = 2.0 * (2.0 * g.area / perimeter);
    m->geometry_[k] = g;
  }

  // Star CSR
  m->star_offsets_.assign(coords.size() + 1, 0);
  for (const auto& e : m->elements_)
    for (Index v : e.v) ++m->star_offsets_[static_cast<std::size_t>(v) + 1];
  for (std::size_t i = 0; i < coords.size(); ++i) m->star_offsets_[i + 1] += m->star_offsets_[i];
  m->star_list_.resize(static_cast<std::size_t>(m->star_offsets_.back()));
  {
    auto fill = m->star_offsets_;
    for (std::size_t k = 0; k < m->elements_.size(); ++k)
      for (Index v : m->elements_[k].v) m->star_list_[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = static_cast<Index>(k);
  }

  m->interior_index_.assign(coords.size(), -1);
  for (std::size_t i = 0; i < coords.size(); ++i)
    if (!m->vertices_[i].on_boundary) m->interior_index_[i] = static_cast<Index>(m->num_interior_++);

  m->id_ = next_mesh_id++;
  if (parent) {
    if (parent_element.size() != m->elements_.size()) throw std::invalid_argument("parent map size mismatch");
    m->parent_ = std::move(parent);
    m->parent_element_ = std::move(parent_element);
  }
  return m;
}

std::vector<Index> Mesh::star_elements(Index z) const {
  const auto b = star_offsets_[static_cast<std::size_t>(z)];
  const auto e = star_offsets_[static_cast<std::size_t>(z) + 1];
  return {star_list_.begin() + b, star_list_.begin() + e};
}

std::vector<Index> Mesh::star_faces(Index z) const {
  std::vector<Index> out;
  for (Index k : star_elements(z)) {
    const int lz = local_index(k, z);
    for (int i = 0; i < 3; ++i) {
      if (i == lz) continue;
      const Index f = element_face(k, i);
      if (faces_[static_cast<std::size_t>(f)].interior) out.push_back(f);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Mesh::star_diameter(Index z) const {
  std::vector<Index> vs;
  for (Index k : star_elements(z))
    for (Index v : element(k).v) vs.push_back(v);
  double d = 0.0;
  for (Index a : vs)
    for (Index b : vs) d = std::max(d, dist(point(a), point(b)));
  return d;
}

double Mesh::face_length(Index f) const {
  const Face& fc = face(f);
  return dist(point(fc.v[0]), point(fc.v[1]));
}

std::array<double, 2> Mesh::outward_normal(Index k, int i) const {
  const auto& g = bary_gradients(k)[static_cast<std::size_t>(i)];
  const double n = std::hypot(g[0], g[1]);
  return {-g[0] / n, -g[1] / n};
}

Bary Mesh::barycentric(Index k, const Point& p) const {
  const auto& e = element(k);
  Point c{0.0, 0.0};
  for (Index v : e.v) {
    c.x += point(v).x / 3.0;
    c.y += point(v).y / 3.0;
  }
  const auto& g = bary_gradients(k);
  Bary l;
  for (std::size_t i = 0; i < 3; ++i) l[i] = 1.0 / 3.0 + g[i][0] * (p.x - c.x) + g[i][1] * (p.y - c.y);
  return l;
}

Point Mesh::map_point(Index k, const Bary& l) const {
  const auto& e = element(k);
  Point p{0.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    p.x += l[i] * point(e.v[i]).x;
    p.y += l[i] * point(e.v[i]).y;
  }
  return p;
}

double Mesh::shape_coefficient() const {
  double s = 0.0;
  for (const auto& g : geometry_) s = std::max(s, g.h / g.rho);
  return s;
}

double Mesh::max_h() const {
  double h = 0.0;
  for (const auto& g : geometry_) h = std::max(h, g.h);
  return h;
}

int Mesh::local_index(Index k, Index v) const {
  const auto& e = element(k);
  for (int i = 0; i < 3; ++i)
    if (e.v[static_cast<std::size_t>(i)] == v) return i;
  return -1;
}

RefinementResult refine_nvb(const MeshPtr& mesh, const std::vector<Index>& marked) {
  const Mesh& m = *mesh;
  const std::size_t ne = m.num_elements();
  std::vector<char> edge_marked(m.num_faces(), 0);
  std::deque<Index> queue;
  std::size_t markings = 0;
  const std::size_t bound = 3 * ne;

  auto mark_edge = [&](Index f) {
    if (edge_marked[static_cast<std::size_t>(f)]) return;
    edge_marked[static_cast<std::size_t>(f)] = 1;
    if (++markings > bound) throw std::logic_error("refine_nvb: closure exceeded generation bound");
    for (Index k : m.face(f).elements)
      if (k >= 0) queue.push_back(k);
  };
  for (Index k : marked) {
    if (k < 0 || static_cast<std::size_t>(k) >= ne) throw MeshError("element", k, "marked element out of range");
    mark_edge(m.element_face(k, m.element(k).refinement_edge));
  }
  while (!queue.empty()) {
    const Index k = queue.front();
    queue.pop_front();
    bool any = false;
    for (int i = 0; i < 3; ++i) any = any || edge_marked[static_cast<std::size_t>(m.element_face(k, i))];
    if (any) mark_edge(m.element_face(k, m.element(k).refinement_edge));
  }

  std::vector<Point> coords;
  coords.reserve(m.num_vertices() + markings);
  for (const auto& v : m.vertices()) coords.push_back(v.coords);
  std::unordered_map<std::uint64_t, Index> midpoint;
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    if (!edge_marked[f]) continue;
    const Face& fc = m.faces()[f];
    const Point& a = m.point(fc.v[0]);
    const Point& b = m.point(fc.v[1]);
    midpoint[edge_key(fc.v[0], fc.v[1])] = static_cast<Index>(coords.size());
    coords.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }

  std::vector<std::array<Index, 3>> triples;
  std::vector<int> redges;
  std::vector<Index> parent;
  std::function<void(std::array<Index, 3>, int, Index)> bisect = [&](std::array<Index, 3> t, int r, Index p) {
    const Index c = t[static_cast<std::size_t>(r)];
    const Index a = t[static_cast<std::size_t>((r + 1) % 3)];
    const Index b = t[static_cast<std::size_t>((r + 2) % 3)];
    auto it = midpoint.find(edge_key(a, b));
    if (it == midpoint.end()) {
      triples.push_back(t);
      redges.push_back(r);
      parent.push_back(p);
      return;
    }
    const Index mid = it->second;
    bisect({c, a, mid}, 2, p);
    bisect({b, c, mid}, 2, p);
  };
  for (std::size_t k = 0; k < ne; ++k) bisect(m.elements()[k].v, m.elements()[k].refinement_edge, static_cast<Index>(k));

  RefinementResult res;
  res.parent = parent;
  res.mesh = Mesh::build(coords, triples, &redges, mesh, std::move(parent));
  return res;
}

MeshPtr refine_nvb_all(const MeshPtr& mesh) {
  std::vector<Index> all(mesh->num_elements());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<Index>(k);
  return refine_nvb(mesh, all).mesh;
}

MeshPtr refine_uniform(const MeshPtr& mesh, int levels) {
  MeshPtr cur = mesh;
  for (int level = 0; level < levels; ++level) {
    const Mesh& m = *cur;
    std::vector<Point> coords;
    for (const auto& v : m.vertices()) coords.push_back(v.coords);
    std::vector<Index> mid(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
      const Point& a = m.point(m.faces()[f].v[0]);
      const Point& b = m.point(m.faces()[f].v[1]);
      mid[f] = static_cast<Index>(coords.size());
      coords.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
    std::vector<std::array<Index, 3>> triples;
    std::vector<int> redges;
    std::vector<Index> parent;
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const auto& e = m.elements()[k];
      const auto kk = static_cast<Index>(k);
      const Index m0 = mid[static_cast<std::size_t>(m.element_face(kk, 0))];
      const Index m1 = mid[static_cast<std::size_t>(m.element_face(kk, 1))];
      const Index m2 = mid[static_cast<std::size_t>(m.element_face(kk, 2))];
      // Children listed vertex-by-vertex similar to the parent.
      for (const auto& t : {std::array<Index, 3>{e.v[0], m2, m1}, std::array<Index, 3>{m2, e.v[1], m0},
                            std::array<Index, 3>{m1, m0, e.v[2]}, std::array<Index, 3>{m0, m1, m2}}) {
        triples.push_back(t);
        redges.push_back(e.refinement_edge);
        parent.push_back(kk);
      }
    }
    cur = Mesh::build(coords, triples, &redges, cur, std::move(parent));
  }
  return cur;
}

MeshPtr extract_submesh(const MeshPtr& mesh, const std::vector<Index>& elements) {
  std::vector<Index> local(mesh->num_vertices(), -1);
  std::vector<Point> coords;
  std::vector<std::array<Index, 3>> triples;
  std::vector<int> redges;
  for (Index k : elements) {
    std::array<Index, 3> t{};
    const auto& e = mesh->element(k);
    for (std::size_t i = 0; i < 3; ++i) {
      Index& l = local[static_cast<std::size_t>(e.v[i])];
      if (l < 0) {
        l = static_cast<Index>(coords.size());
        coords.push_back(mesh->point(e.v[i]));
      }
      t[i] = l;
    }
    triples.push_back(t);
    redges.push_back(e.refinement_edge);
  }
  return Mesh::build(coords, triples, &redges, mesh, elements);
}

bool descends_from(const Mesh& fine, const Mesh& coarse) {
  for (const Mesh* cur = &fine; cur; cur = cur->parent().get())
    if (cur->id() == coarse.id()) return true;
  return false;
}

std::vector<Index> ancestor_map(const Mesh& fine, const Mesh& coarse) {
  std::vector<Index> map(fine.num_elements());
  for (std::size_t k = 0; k < map.size(); ++k) map[k] = static_cast<Index>(k);
  const Mesh* cur = &fine;
  while (cur->id() != coarse.id()) {
    if (!cur->parent()) throw MeshError("mesh", static_cast<Index>(fine.id()), "incompatible mesh: not a refinement");
    for (auto& k : map) k = cur->parent_element(k);
    cur = cur->parent().get();
  }
  return map;
}

std::array<Bary, 3> bary_map(const Mesh& fine, Index kf, const Mesh& coarse, Index kc) {
  std::array<Bary, 3> cols;
  for (std::size_t j = 0; j < 3; ++j) cols[j] = coarse.barycentric(kc, fine.point(fine.element(kf).v[j]));
  return cols;
}

MeshPtr unit_square() {
  return Mesh::build({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

}  // namespace eosc
