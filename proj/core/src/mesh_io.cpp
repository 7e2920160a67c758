#include "nsshape/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nsshape/errors.hpp"

namespace nsshape::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mesh(std::ostream& os, const geom::Mesh& mesh) {
  os << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' ' << mesh.boundary_edges.size() << '\n';
  for (const auto& v : mesh.vertices) os << format_double(v.x) << ' ' << format_double(v.y) << '\n';
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges) os << e.a << ' ' << e.b << ' ' << e.label << '\n';
}

geom::Mesh read_mesh(std::istream& is) {
  geom::Mesh mesh;
  std::size_t nv = 0, nt = 0, nb = 0;
  if (!(is >> nv >> nt >> nb)) throw ParseError("mesh: bad header");
  mesh.vertices.resize(nv);
  mesh.triangles.resize(nt);
  mesh.boundary_edges.resize(nb);
  for (auto& v : mesh.vertices)
    if (!(is >> v.x >> v.y)) throw ParseError("mesh: truncated vertex block");
  for (auto& t : mesh.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw ParseError("mesh: truncated triangle block");
    for (int k : t)
      if (k < 0 || static_cast<std::size_t>(k) >= nv) throw ParseError("mesh: vertex index out of range");
  }
  for (auto& e : mesh.boundary_edges) {
    if (!(is >> e.a >> e.b >> e.label)) throw ParseError("mesh: truncated boundary block");
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(std::max(e.a, e.b)) >= nv)
      throw ParseError("mesh: boundary index out of range");
  }
  // h_target is not part of the format; use the longest edge as a proxy.
  double longest = 0.0;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      longest = std::max(longest, geom::distance(mesh.vertices[t[k]], mesh.vertices[t[(k + 1) % 3]]));
  mesh.h_target = longest;
  return mesh;
}

void write_mesh_file(const std::string& path, const geom::Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_mesh(os, mesh);
}

geom::Mesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_mesh(is);
}

void write_polyline_csv(std::ostream& os, const geom::Polyline& poly) {
  os << "x,y\n";
  for (const auto& p : poly.points) os << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

geom::Polyline read_polyline_csv(std::istream& is) {
  geom::Polyline poly;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (lineno == 1 && (line.rfind("x", 0) == 0)) continue;
    std::istringstream ss(line);
    geom::Vec2 p;
    char comma = 0;
    if (!(ss >> p.x >> comma >> p.y) || comma != ',')
      throw ParseError("polyline csv: malformed row at line " + std::to_string(lineno));
    poly.points.push_back(p);
  }
  if (poly.points.empty()) throw ParseError("polyline csv: no points");
  poly.closed = poly.points.size() >= 3;
  return poly;
}

void write_polyline_file(const std::string& path, const geom::Polyline& poly) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_polyline_csv(os, poly);
}

geom::Polyline read_polyline_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_polyline_csv(is);
}

}  // namespace nsshape::io
