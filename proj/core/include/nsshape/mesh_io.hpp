#pragma once

#include <iosfwd>
#include <string>

#include "nsshape/geometry.hpp"

namespace nsshape::io {

/// Line-based mesh text: `nv nt nb`, then nv lines `x y`, nt lines `i j k`,
/// nb lines `i j label` (0-based indices).
void write_mesh(std::ostream& os, const geom::Mesh& mesh);
geom::Mesh read_mesh(std::istream& is);
void write_mesh_file(const std::string& path, const geom::Mesh& mesh);
geom::Mesh read_mesh_file(const std::string& path);

/// CSV with header `x,y`, one point per row.
void write_polyline_csv(std::ostream& os, const geom::Polyline& poly);
geom::Polyline read_polyline_csv(std::istream& is);
void write_polyline_file(const std::string& path, const geom::Polyline& poly);
geom::Polyline read_polyline_file(const std::string& path);

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

}  // namespace nsshape::io
