#pragma once

#include <string>
#include <vector>

#include "nsshape/fem.hpp"

namespace nsshape::io {

struct NamedVectorField {
  std::string name;
  std::vector<geom::Vec2> values;  // one per mesh vertex
};

struct NamedScalarField {
  std::string name;
  std::vector<double> values;  // one per mesh vertex
};

/// Legacy ASCII VTK unstructured grid with point data.
void write_vtk(const std::string& path, const geom::Mesh& mesh, const std::vector<NamedVectorField>& vectors,
               const std::vector<NamedScalarField>& scalars = {});

/// Velocity restricted to the vertices and the mean-free pressure.
void write_flow_vtk(const std::string& path, const fem::FlowField& field, const std::string& prefix = "");

/// Coefficient dump: `nvel npres` header followed by one value per line.
void write_flow_coefficients(const std::string& path, const fem::FlowField& field);
fem::FlowField read_flow_coefficients(const std::string& path, fem::SpacePtr space);

}  // namespace nsshape::io
