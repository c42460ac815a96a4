#include "penflow/levelset.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "penflow/errors.hpp"

namespace penflow {

HeavisideValue smoothed_heaviside(double r, const SmoothingParams& params) {
  const double h = params.width;
  if (params.kind == HeavisideKind::Standard) {
    if (r >= h) return {1.0, 0.0};
    if (r <= 0.0) return {0.0, 0.0};
    const double s = r / h;
    return {std::min(1.0, s * s * (3.0 - 2.0 * s)), 6.0 * s * (1.0 - s) / h};
  }
  if (r >= 0.0) return {1.0, 0.0};
  if (r <= -h) return {0.0, 0.0};
  const double s = r / h;
  return {std::min(1.0, (1.0 - 2.0 * s) * (1.0 + s) * (1.0 + s)), -6.0 * s * (1.0 + s) / h};
}

LevelFunction compose_disks(std::vector<Vec2> centers, std::vector<double> radii) {
  if (centers.empty()) throw GeometryError("compose_disks: empty disk list");
  if (centers.size() != radii.size()) throw GeometryError("compose_disks: centers and radii differ in length");
  for (double r : radii)
    if (!(r > 0.0)) throw GeometryError("compose_disks: radius must be positive");
  return [centers = std::move(centers), radii = std::move(radii)](Vec2 x) {
    double g = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Vec2 d = x - centers[i];
      g = std::max(g, radii[i] * radii[i] - dot(d, d));
    }
    return g;
  };
}

LevelFunction ellipse_level(Vec2 center, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw GeometryError("ellipse_level: semi-axes must be positive");
  return [=](Vec2 x) {
    const double u = (x.x - center.x) / a, v = (x.y - center.y) / b;
    return 1.0 - u * u - v * v;
  };
}

LevelField LevelField::interpolate(const Mesh& mesh, const LevelFunction& g) {
  LevelField f;
  f.values.reserve(mesh.vertices.size());
  for (Vec2 p : mesh.vertices) f.values.push_back(g(p));
  return f;
}

LevelField LevelField::constant(const Mesh& mesh, double value) {
  return {std::vector<double>(mesh.vertices.size(), value)};
}

AdmissibilityReport check_admissibility(const LevelField& g, const Mesh& mesh) {
  if (g.size() != mesh.vertices.size()) throw MeshError("level field does not match the mesh");
  AdmissibilityReport rep;
  const auto& v = g.values;
  std::vector<std::array<Vec2, 2>> outer;
  for (const auto& e : mesh.edges) {
    if (e.label.is_obstacle()) continue;
    outer.push_back({mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]});
    for (int k : e.v) {
      if (!(v[k] < 0.0) && rep.boundary_sign_ok) {
        rep.boundary_sign_ok = false;
        rep.violations.push_back("g >= 0 at boundary vertex " + std::to_string(k));
      }
    }
  }
  for (double x : v)
    if (!std::isfinite(x)) rep.violations.push_back("non-finite level value");

  rep.zero_set_distance = std::numeric_limits<double>::infinity();
  rep.min_gradient_near_zero = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double g0 = v[tri[0]], g1 = v[tri[1]], g2 = v[tri[2]];
    if (g0 == 0.0 && g1 == 0.0 && g2 == 0.0 && rep.no_flat_zero_triangle) {
      rep.no_flat_zero_triangle = false;
      rep.violations.push_back("g vanishes on triangle " + std::to_string(t));
    }
    if (g0 >= 0.0 || g1 >= 0.0 || g2 >= 0.0) ++rep.obstacle_triangles;
    const double lo = std::min({g0, g1, g2}), hi = std::max({g0, g1, g2});
    if (lo > 0.0 || hi < 0.0) continue;
    // Zero crossings on the triangle's edges.
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      const double ga = v[a], gb = v[b];
      if ((ga > 0.0 && gb > 0.0) || (ga < 0.0 && gb < 0.0)) continue;
      const double s = (ga == gb) ? 0.0 : ga / (ga - gb);
      const Vec2 p = mesh.vertices[a] + s * (mesh.vertices[b] - mesh.vertices[a]);
      for (const auto& seg : outer)
        rep.zero_set_distance = std::min(rep.zero_set_distance, distance_to_segment(p, seg[0], seg[1]));
    }
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const double det = orient(p0, p1, p2);
    const Vec2 grad{((g1 - g0) * (p2.y - p0.y) - (g2 - g0) * (p1.y - p0.y)) / det,
                    ((g2 - g0) * (p1.x - p0.x) - (g1 - g0) * (p2.x - p0.x)) / det};
    rep.min_gradient_near_zero = std::min(rep.min_gradient_near_zero, norm(grad));
  }
  if (!(rep.zero_set_distance > 0.0)) {
    rep.obstacle_inside = false;
    rep.violations.push_back("zero level set touches the outer boundary");
  }
  if (!rep.boundary_sign_ok) rep.obstacle_inside = false;
  return rep;
}

void write_level_csv(std::ostream& out, const LevelField& g) {
  out << "g\n";
  char buf[64];
  for (double x : g.values) {
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

LevelField read_level_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "g") throw IoError("level CSV: expected header 'g'");
  LevelField g;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x = 0.0;
    auto res = std::from_chars(line.data(), line.data() + line.size(), x);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size())
      throw IoError("level CSV: bad value '" + line + "'");
    g.values.push_back(x);
  }
  return g;
}

}  // namespace penflow
