#pragma once

#include <iosfwd>
#include <string>

#include "eosc/fem.hpp"
#include "eosc/load.hpp"
#include "eosc/mesh.hpp"

namespace eosc {

/// Plain-text mesh: `vertices N elements M`, then N lines `x y`, then M lines `i j k`.
MeshPtr read_mesh(std::istream& in);
MeshPtr read_mesh_file(const std::string& path);
void write_mesh(std::ostream& os, const Mesh& m);

/// Load description in JSON, tested on `mesh` (the background of every term):
///
///   {"terms": [
///     {"kind": "preset", "name": "sine" | "face_dirac" | "face_dirac(F)" | "discrete_laplacian(V-file)"},
///     {"kind": "element", "degree": 0, "coefficients": [c_K, ...]},
///     {"kind": "element", "degree": q, "coefficients": [[[a, b, c, coef], ...], ...]},
///     {"kind": "face", "coefficients": {"F": c_F, ...}},
///     {"kind": "discrete_laplacian", "values": [V_z, ...]} or {"kind": ..., "file": "V-file"}
///   ]}
///
/// Every term accepts an optional "scale". A V-file holds one value per vertex;
/// boundary values are ignored. Relative paths resolve against `base_dir`.
Load parse_load_json(const std::string& text, const MeshPtr& mesh, const std::string& base_dir = ".");
Load read_load_file(const std::string& path, const MeshPtr& mesh);

/// Unit square preset loads by name: sine, face_dirac or discrete_laplacian.
Load preset_load(const std::string& name, const MeshPtr& mesh);

}  // namespace eosc
