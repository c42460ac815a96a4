#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "penflow/fem.hpp"

namespace penflow {

struct VtkField {
  std::string name;
  std::vector<double> values;  // one per vertex, or two per vertex for vectors
  bool vector = false;
};

/// Legacy ASCII VTK (version 2.0) unstructured grid of triangles with point
/// fields and the region tag as cell data.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title = "penflow");

/// Vertex values of a mini-element velocity (bubble coefficients dropped).
VtkField velocity_field(const Mesh& mesh, const Vector& Y, const std::string& name = "velocity");
VtkField scalar_field(const std::string& name, const Vector& values);
VtkField scalar_field(const std::string& name, const std::vector<double>& values);

}  // namespace penflow
