#include "nsshape/field_io.hpp"

#include <fstream>

#include "nsshape/errors.hpp"
#include "nsshape/mesh_io.hpp"

namespace nsshape::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  return os;
}

}  // namespace

void write_vtk(const std::string& path, const geom::Mesh& mesh, const std::vector<NamedVectorField>& vectors,
               const std::vector<NamedScalarField>& scalars) {
  auto os = open_out(path);
  const std::size_t nv = mesh.vertices.size(), nt = mesh.triangles.size();
  os << "# vtk DataFile Version 3.0\nnsshape\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (const auto& v : mesh.vertices) os << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) os << "5\n";
  if (vectors.empty() && scalars.empty()) return;
  os << "POINT_DATA " << nv << '\n';
  for (const auto& f : vectors) {
    if (f.values.size() != nv) throw std::invalid_argument("write_vtk: field " + f.name + " has the wrong length");
    os << "VECTORS " << f.name << " double\n";
    for (const auto& v : f.values) os << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
  }
  for (const auto& f : scalars) {
    if (f.values.size() != nv) throw std::invalid_argument("write_vtk: field " + f.name + " has the wrong length");
    os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f.values) os << format_double(v) << '\n';
  }
}

void write_flow_vtk(const std::string& path, const fem::FlowField& field, const std::string& prefix) {
  const auto& space = *field.space;
  const int nv = space.vertex_count(), nn = space.node_count();
  NamedVectorField vel{prefix + "velocity", {}};
  for (int i = 0; i < nv; ++i)
    vel.values.push_back({field.velocity[static_cast<std::size_t>(i)], field.velocity[static_cast<std::size_t>(nn + i)]});
  write_vtk(path, space.mesh(), {vel}, {{prefix + "pressure", field.mean_free_pressure()}});
}

void write_flow_coefficients(const std::string& path, const fem::FlowField& field) {
  auto os = open_out(path);
  os << field.velocity.size() << ' ' << field.pressure.size() << '\n';
  for (double v : field.velocity) os << format_double(v) << '\n';
  for (double v : field.pressure) os << format_double(v) << '\n';
}

fem::FlowField read_flow_coefficients(const std::string& path, fem::SpacePtr space) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::size_t nvel = 0, npres = 0;
  if (!(is >> nvel >> npres)) throw ParseError(path + ": bad header");
  fem::FlowField f = fem::FlowField::zero(std::move(space));
  if (nvel != f.velocity.size() || npres != f.pressure.size())
    throw ParseError(path + ": coefficient counts do not match the mesh");
  for (double& v : f.velocity)
    if (!(is >> v)) throw ParseError(path + ": truncated velocity block");
  for (double& v : f.pressure)
    if (!(is >> v)) throw ParseError(path + ": truncated pressure block");
  return f;
}

}  // namespace nsshape::io
