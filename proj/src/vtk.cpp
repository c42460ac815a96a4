#include "penflow/vtk.hpp"

#include <charconv>
#include <ostream>

#include "penflow/errors.hpp"

namespace penflow {

namespace {

void put(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& title) {
  const int nv = mesh.num_vertices(), nt = mesh.num_triangles();
  for (const auto& f : fields) {
    const std::size_t expect = static_cast<std::size_t>(nv) * (f.vector ? 2 : 1);
    if (f.values.size() != expect) throw MeshError("VTK field '" + f.name + "' does not match the mesh");
    if (f.name.empty() || f.name.find(' ') != std::string::npos)
      throw ConfigError("VTK field names must be non-empty without spaces");
  }
  out << "# vtk DataFile Version 2.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (Vec2 p : mesh.vertices) {
    put(out, p.x);
    out << ' ';
    put(out, p.y);
    out << " 0\n";
  }
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  out << "CELL_DATA " << nt << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.regions) out << static_cast<int>(r) << '\n';
  if (fields.empty()) return;
  out << "POINT_DATA " << nv << '\n';
  for (const auto& f : fields) {
    if (f.vector) {
      out << "VECTORS " << f.name << " double\n";
      for (int v = 0; v < nv; ++v) {
        put(out, f.values[2 * v]);
        out << ' ';
        put(out, f.values[2 * v + 1]);
        out << " 0\n";
      }
    } else {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double x : f.values) {
        put(out, x);
        out << '\n';
      }
    }
  }
}

VtkField velocity_field(const Mesh& mesh, const Vector& Y, const std::string& name) {
  const int nv = mesh.num_vertices(), n1 = nv + mesh.num_triangles();
  if (Y.size() != 2 * n1) throw MeshError("velocity does not match the mesh");
  VtkField f{name, std::vector<double>(2 * static_cast<std::size_t>(nv)), true};
  for (int v = 0; v < nv; ++v) {
    f.values[2 * v] = Y[v];
    f.values[2 * v + 1] = Y[n1 + v];
  }
  return f;
}

VtkField scalar_field(const std::string& name, const Vector& values) {
  return {name, std::vector<double>(values.data(), values.data() + values.size()), false};
}

VtkField scalar_field(const std::string& name, const std::vector<double>& values) { return {name, values, false}; }

}  // namespace penflow
