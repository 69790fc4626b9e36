#include "eosc/projection.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace eosc {

DiscretizedResidual DiscretizedResidual::zero(const MeshPtr& mesh) {
  return {mesh, std::vector<double>(mesh->num_elements(), 0.0), std::vector<double>(mesh->num_faces(), 0.0)};
}

DiscretizedResidual& DiscretizedResidual::operator+=(const DiscretizedResidual& o) {
  if (mesh->id() != o.mesh->id()) throw MeshError("mesh", static_cast<Index>(o.mesh->id()), "mesh mismatch in D(M) sum");
  for (std::size_t k = 0; k < element.size(); ++k) element[k] += o.element[k];
  for (std::size_t f = 0; f < face.size(); ++f) face[f] += o.face[f];
  return *this;
}

DiscretizedResidual& DiscretizedResidual::operator*=(double s) {
  for (auto& c : element) c *= s;
  for (auto& c : face) c *= s;
  return *this;
}

Eigen::VectorXd DiscretizedResidual::coefficients(const IndexSet& idx) const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    c(static_cast<Eigen::Index>(i)) = idx.kind(i) == IndexKind::Element ? element[static_cast<std::size_t>(idx.entity(i))]
                                                                       : face[static_cast<std::size_t>(idx.entity(i))];
  return c;
}

DiscretizedResidual DiscretizedResidual::from_coefficients(const MeshPtr& mesh, const IndexSet& idx,
                                                           const Eigen::VectorXd& c) {
  auto r = zero(mesh);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& slot = idx.kind(i) == IndexKind::Element ? r.element[static_cast<std::size_t>(idx.entity(i))]
                                                   : r.face[static_cast<std::size_t>(idx.entity(i))];
    slot = c(static_cast<Eigen::Index>(i));
  }
  return r;
}

double DiscretizedResidual::max_abs() const {
  double m = 0.0;
  for (double c : element) m = std::max(m, std::abs(c));
  for (double c : face) m = std::max(m, std::abs(c));
  return m;
}

DiscretizedResidual project(const Load& f, const BiorthSystem& b) {
  const auto vals = evaluate_many(f, *b.mesh(), b.psi_basis(), b.size());
  return DiscretizedResidual::from_coefficients(
      b.mesh(), b.indices(), Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
}

DiscretizedResidual project(const Load& f, const MeshPtr& mesh) { return project(f, BiorthSystem(mesh)); }

DiscretizedResidual tprog0(const Load& f, const BiorthSystem& b) {
  auto r = project(f, b);
  std::fill(r.face.begin(), r.face.end(), 0.0);
  return r;
}

DiscretizedResidual tprog0(const Load& f, const MeshPtr& mesh) { return tprog0(f, BiorthSystem(mesh)); }

DiscretizedResidual discretized_residual(const Load& f, const P1Function& u, const BiorthSystem& b) {
  if (u.mesh->id() != b.mesh()->id()) throw MeshError("mesh", static_cast<Index>(u.mesh->id()), "solution mesh mismatch");
  auto r = project(f, b);
  const auto j = normal_jumps(u);
  for (std::size_t f2 = 0; f2 < j.size(); ++f2)
    if (b.mesh()->faces()[f2].interior) r.face[f2] += j[f2];
  return r;
}

DiscretizedResidual discretized_residual(const Load& f, const P1Function& u) {
  return discretized_residual(f, u, BiorthSystem(u.mesh));
}

Load as_load(const DiscretizedResidual& r) {
  Load out = element_constants(r.mesh, r.element);
  std::map<Index, double> faces;
  for (std::size_t f = 0; f < r.face.size(); ++f)
    if (r.face[f] != 0.0 && r.mesh->faces()[f].interior) faces[static_cast<Index>(f)] = r.face[f];
  out += face_constants(r.mesh, faces);
  return out;
}

void write_residual_csv(std::ostream& os, const DiscretizedResidual& r) {
  os << "kind,index,coefficient\n" << std::setprecision(17);
  for (std::size_t k = 0; k < r.element.size(); ++k) os << "element," << k << ',' << r.element[k] << '\n';
  for (std::size_t f = 0; f < r.face.size(); ++f)
    if (r.mesh->faces()[f].interior) os << "face," << f << ',' << r.face[f] << '\n';
}

}  // namespace eosc
