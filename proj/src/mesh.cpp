#include "penflow/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "delaunay.hpp"
#include "penflow/errors.hpp"

namespace penflow {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Every triangle incident to each undirected edge.
std::unordered_map<std::uint64_t, std::vector<int>> edge_triangles(const Mesh& mesh) {
  std::unordered_map<std::uint64_t, std::vector<int>> map;
  map.reserve(3 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) map[edge_key(tri[k], tri[(k + 1) % 3])].push_back(t);
  }
  return map;
}

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Label Label::from_code(int code) {
  if ((code >= 1 && code <= 4) || code > kObstacleBase) return Label(code);
  throw MeshError("invalid boundary label code " + std::to_string(code));
}

std::string Label::name() const {
  if (is_obstacle()) return "Obstacle(" + std::to_string(obstacle_index()) + ")";
  return "Gamma" + std::to_string(code_);
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

Vec2 Mesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) * (1.0 / 3.0);
}

bool Mesh::has_label(Label label) const {
  return std::any_of(edges.begin(), edges.end(), [&](const auto& e) { return e.label == label; });
}

std::vector<Label> Mesh::labels() const {
  std::set<Label> s;
  for (const auto& e : edges) s.insert(e.label);
  return {s.begin(), s.end()};
}

double total_area(const Mesh& mesh) {
  double a = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) a += mesh.triangle_area(t);
  return a;
}

double region_area(const Mesh& mesh, Region region) {
  double a = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (mesh.regions[t] == region) a += mesh.triangle_area(t);
  return a;
}

double mean_edge_length(const Mesh& mesh) {
  std::unordered_set<std::uint64_t> seen;
  double sum = 0.0;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (seen.insert(edge_key(a, b)).second) sum += norm(mesh.vertices[a] - mesh.vertices[b]);
    }
  }
  return seen.empty() ? 0.0 : sum / static_cast<double>(seen.size());
}

int count_unique_edges(const Mesh& mesh) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& tri : mesh.triangles)
    for (int k = 0; k < 3; ++k) seen.insert(edge_key(tri[k], tri[(k + 1) % 3]));
  return static_cast<int>(seen.size());
}

std::vector<int> triangles_in(const Mesh& mesh, Region region) {
  std::vector<int> out;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (mesh.regions[t] == region) out.push_back(t);
  return out;
}

std::vector<int> all_triangles(const Mesh& mesh) {
  std::vector<int> out(mesh.triangles.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

void validate(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  if (mesh.regions.size() != mesh.triangles.size())
    throw MeshError("region tag count does not match triangle count");
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= nv) throw MeshError("triangle references a missing vertex");
    if (!(mesh.triangle_area(t) > 0.0))
      throw MeshError("triangle " + std::to_string(t) + " is not counterclockwise");
  }
  {
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return mesh.vertices[a].x < mesh.vertices[b].x;
    });
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        const Vec2 a = mesh.vertices[order[i]], b = mesh.vertices[order[j]];
        if (b.x - a.x > 1e-12) break;
        if (std::abs(b.y - a.y) <= 1e-12) throw MeshError("duplicate vertices");
      }
    }
  }
  const auto et = edge_triangles(mesh);
  for (const auto& [key, tris] : et)
    if (tris.size() > 2) throw MeshError("non-manifold edge");
  std::map<int, int> degree;
  for (const auto& e : mesh.edges) {
    auto it = et.find(edge_key(e.v[0], e.v[1]));
    if (it == et.end()) throw MeshError("labeled edge is not a mesh edge");
    const std::size_t owners = it->second.size();
    if (!e.label.is_obstacle() && owners != 1)
      throw MeshError("outer boundary edge shared by two triangles");
    if (e.label.is_obstacle() && owners == 2) {
      const Region r0 = mesh.regions[it->second[0]], r1 = mesh.regions[it->second[1]];
      if (r0 == r1) throw MeshError("interface edge does not separate regions");
    }
    ++degree[e.v[0]];
    ++degree[e.v[1]];
  }
  for (const auto& [key, tris] : et) {
    if (tris.size() != 1) continue;
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    if (!degree.count(a) || !degree.count(b)) throw MeshError("unlabeled boundary edge");
  }
  for (const auto& [v, d] : degree)
    if (d % 2 != 0) throw MeshError("labeled edges do not form closed loops");
}

// --- domain description ---------------------------------------------------------

DomainSpec channel_domain(double target_edge, std::vector<ObstacleShape> obstacles,
                          int arc_min_segments) {
  DomainSpec spec;
  spec.target_edge = target_edge;
  spec.outer.push_back(LineSegment{{-0.5, 0.5}, {-0.5, -0.5}, Label::gamma(1)});
  spec.outer.push_back(LineSegment{{-0.5, -0.5}, {0.5, -0.5}, Label::gamma(2)});
  spec.outer.push_back(CircularArc{{0.5, 0.0}, 0.5, -std::numbers::pi / 2, std::numbers::pi / 2,
                                   Label::gamma(3), arc_min_segments});
  spec.outer.push_back(LineSegment{{0.5, 0.5}, {-0.5, 0.5}, Label::gamma(4)});
  spec.obstacles = std::move(obstacles);
  return spec;
}

DomainSpec unit_square(double target_edge, std::vector<ObstacleShape> obstacles) {
  DomainSpec spec;
  spec.target_edge = target_edge;
  spec.outer.push_back(LineSegment{{0.0, 1.0}, {0.0, 0.0}, Label::gamma(1)});
  spec.outer.push_back(LineSegment{{0.0, 0.0}, {1.0, 0.0}, Label::gamma(2)});
  spec.outer.push_back(LineSegment{{1.0, 0.0}, {1.0, 1.0}, Label::gamma(3)});
  spec.outer.push_back(LineSegment{{1.0, 1.0}, {0.0, 1.0}, Label::gamma(4)});
  spec.obstacles = std::move(obstacles);
  return spec;
}

PolygonObstacle ellipse_polygon(Vec2 center, double ax, double ay, int segments) {
  PolygonObstacle p;
  for (int k = 0; k < segments; ++k) {
    const double t = 2.0 * std::numbers::pi * k / segments;
    p.vertices.push_back(center + Vec2{ax * std::cos(t), ay * std::sin(t)});
  }
  return p;
}

namespace {

struct Constraint {
  int a, b;
  Label label;
};

Vec2 piece_start(const BoundaryPiece& piece) {
  if (const auto* s = std::get_if<LineSegment>(&piece)) return s->a;
  const auto& arc = std::get<CircularArc>(piece);
  return arc.center + arc.radius * Vec2{std::cos(arc.t0), std::sin(arc.t0)};
}

// Interior sample points of a piece (excluding both endpoints).
std::vector<Vec2> piece_samples(const BoundaryPiece& piece, double h) {
  std::vector<Vec2> out;
  if (const auto* s = std::get_if<LineSegment>(&piece)) {
    const int n = std::max(1, static_cast<int>(std::ceil(norm(s->b - s->a) / h - 1e-9)));
    for (int k = 1; k < n; ++k) out.push_back(s->a + (static_cast<double>(k) / n) * (s->b - s->a));
    return out;
  }
  const auto& arc = std::get<CircularArc>(piece);
  const double len = arc.radius * std::abs(arc.t1 - arc.t0);
  const int n = std::max({1, arc.min_segments, static_cast<int>(std::ceil(len / h - 1e-9))});
  for (int k = 1; k < n; ++k) {
    const double t = arc.t0 + (arc.t1 - arc.t0) * k / n;
    out.push_back(arc.center + arc.radius * Vec2{std::cos(t), std::sin(t)});
  }
  return out;
}

std::vector<Vec2> obstacle_polygon(const ObstacleShape& shape, double h) {
  if (const auto* p = std::get_if<PolygonObstacle>(&shape)) {
    std::vector<Vec2> v = p->vertices;
    if (polygon_area(v) < 0.0) std::reverse(v.begin(), v.end());
    return v;
  }
  const auto& d = std::get<Disk>(shape);
  if (!(d.radius > 0.0)) throw GeometryError("disk radius must be positive");
  const double len = 2.0 * std::numbers::pi * d.radius;
  const int n = std::max({3, d.min_segments, static_cast<int>(std::ceil(len / h - 1e-9))});
  std::vector<Vec2> v;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    v.push_back(d.center + d.radius * Vec2{std::cos(t), std::sin(t)});
  }
  return v;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace

Mesh generate_mesh(const DomainSpec& spec, bool conform_to_obstacles) {
  const double h = spec.target_edge;
  if (!(h > 0.0)) throw GeometryError("target edge length must be positive");
  if (spec.outer.empty()) throw GeometryError("empty outer boundary");

  // Outer loop vertices and labeled segments.
  std::vector<Vec2> outer;
  std::vector<Label> outer_labels;
  for (const auto& piece : spec.outer) {
    const Label label = std::visit([](const auto& p) { return p.label; }, piece);
    outer.push_back(piece_start(piece));
    for (Vec2 p : piece_samples(piece, h)) outer.push_back(p);
    const std::size_t added = outer.size() - outer_labels.size();
    outer_labels.insert(outer_labels.end(), added, label);
  }
  if (polygon_area(outer) <= 0.0) throw GeometryError("outer boundary must be counterclockwise");

  std::vector<std::vector<Vec2>> holes;
  for (const auto& shape : spec.obstacles) {
    auto poly = obstacle_polygon(shape, h);
    for (Vec2 p : poly) {
      if (!point_in_polygon(p, outer))
        throw GeometryError("obstacle is not strictly inside the holdall domain");
      for (std::size_t i = 0; i < outer.size(); ++i)
        if (distance_to_segment(p, outer[i], outer[(i + 1) % outer.size()]) < 1e-9)
          throw GeometryError("obstacle touches the outer boundary");
    }
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (std::size_t j = 0; j < outer.size(); ++j)
        if (segments_intersect(poly[i], poly[(i + 1) % poly.size()], outer[j],
                               outer[(j + 1) % outer.size()]))
          throw GeometryError("obstacle intersects the outer boundary");
    holes.push_back(std::move(poly));
  }
  for (std::size_t i = 0; i < holes.size(); ++i)
    for (std::size_t j = i + 1; j < holes.size(); ++j)
      for (std::size_t a = 0; a < holes[i].size(); ++a)
        for (std::size_t b = 0; b < holes[j].size(); ++b)
          if (segments_intersect(holes[i][a], holes[i][(a + 1) % holes[i].size()], holes[j][b],
                                 holes[j][(b + 1) % holes[j].size()]))
            throw GeometryError("obstacles overlap");

  // Points: constrained loops first, then a triangular lattice kept away from them.
  std::vector<Vec2> pts = outer;
  std::vector<Constraint> constraints;
  for (std::size_t i = 0; i < outer.size(); ++i)
    constraints.push_back({static_cast<int>(i), static_cast<int>((i + 1) % outer.size()),
                           outer_labels[i]});
  if (conform_to_obstacles) {
    for (std::size_t k = 0; k < holes.size(); ++k) {
      const int base = static_cast<int>(pts.size());
      const int n = static_cast<int>(holes[k].size());
      pts.insert(pts.end(), holes[k].begin(), holes[k].end());
      for (int i = 0; i < n; ++i)
        constraints.push_back({base + i, base + (i + 1) % n, Label::obstacle(static_cast<int>(k) + 1)});
    }
  }

  Vec2 lo = outer.front(), hi = outer.front();
  for (Vec2 p : outer) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  struct Seg {
    Vec2 a, b;
  };
  std::vector<Seg> segs;
  for (const auto& c : constraints) segs.push_back({pts[c.a], pts[c.b]});
  // Bucket the segments for the clearance test.
  const double cell = h;
  const int nx = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell)) + 1);
  const int ny = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell)) + 1);
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx) * ny);
  auto cell_of = [&](Vec2 p) {
    const int i = std::clamp(static_cast<int>((p.x - lo.x) / cell), 0, nx - 1);
    const int j = std::clamp(static_cast<int>((p.y - lo.y) / cell), 0, ny - 1);
    return std::pair{i, j};
  };
  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    auto [i0, j0] = cell_of({std::min(segs[s].a.x, segs[s].b.x), std::min(segs[s].a.y, segs[s].b.y)});
    auto [i1, j1] = cell_of({std::max(segs[s].a.x, segs[s].b.x), std::max(segs[s].a.y, segs[s].b.y)});
    for (int i = std::max(0, i0 - 1); i <= std::min(nx - 1, i1 + 1); ++i)
      for (int j = std::max(0, j0 - 1); j <= std::min(ny - 1, j1 + 1); ++j)
        buckets[static_cast<std::size_t>(j) * nx + i].push_back(s);
  }
  const double clearance = 0.6 * h;
  const double dy = 0.5 * std::sqrt(3.0) * h;
  for (int j = 0;; ++j) {
    const double y = lo.y + (j + 0.5) * dy;
    if (y >= hi.y) break;
    const double shift = (j % 2 == 0) ? 0.0 : 0.5 * h;
    for (int i = 0;; ++i) {
      const double x = lo.x + shift + (i + 0.25) * h;
      if (x >= hi.x) break;
      const Vec2 p{x, y};
      if (!point_in_polygon(p, outer)) continue;
      auto [ci, cj] = cell_of(p);
      bool ok = true;
      for (int s : buckets[static_cast<std::size_t>(cj) * nx + ci]) {
        if (distance_to_segment(p, segs[s].a, segs[s].b) < clearance) {
          ok = false;
          break;
        }
      }
      if (ok) pts.push_back(p);
    }
  }

  // Insert in a serpentine bucket order for short point-location walks.
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  auto sort_key = [&](int k) {
    auto [i, j] = cell_of(pts[k]);
    return static_cast<long>(j) * nx + ((j % 2 == 0) ? i : nx - 1 - i);
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sort_key(a) < sort_key(b); });

  const Vec2 span = hi - lo;
  detail::Delaunay dt(lo - 0.1 * span, hi + 0.1 * span);
  std::vector<int> dt_index(pts.size());  // point index -> triangulation vertex
  for (int k : order) dt_index[k] = dt.insert(pts[k]);

  // Recover missing constraint edges by splitting them.
  std::vector<std::pair<int, int>> cons;  // triangulation vertex pairs
  std::vector<Label> cons_label;
  for (const auto& c : constraints) {
    cons.emplace_back(dt_index[c.a], dt_index[c.b]);
    cons_label.push_back(c.label);
  }
  for (int round = 0;; ++round) {
    std::unordered_set<std::uint64_t> present;
    for (const auto& tri : dt.triangles())
      for (int k = 0; k < 3; ++k) present.insert(edge_key(tri[k], tri[(k + 1) % 3]));
    std::vector<std::pair<int, int>> next;
    std::vector<Label> next_label;
    bool all = true;
    for (std::size_t i = 0; i < cons.size(); ++i) {
      auto [a, b] = cons[i];
      if (present.count(edge_key(a, b))) {
        next.emplace_back(a, b);
        next_label.push_back(cons_label[i]);
        continue;
      }
      all = false;
      const int m = dt.insert(0.5 * (dt.points()[a] + dt.points()[b]));
      next.emplace_back(a, m);
      next.emplace_back(m, b);
      next_label.push_back(cons_label[i]);
      next_label.push_back(cons_label[i]);
    }
    cons = std::move(next);
    cons_label = std::move(next_label);
    if (all) break;
    if (round > 40) throw MeshGenerationError("could not recover boundary edges");
  }

  // Keep triangles inside the outer loop; compact vertices.
  const auto& dpts = dt.points();
  std::vector<std::array<int, 3>> kept;
  for (const auto& tri : dt.triangles()) {
    if (tri[0] < 3 || tri[1] < 3 || tri[2] < 3) continue;
    const Vec2 c = (dpts[tri[0]] + dpts[tri[1]] + dpts[tri[2]]) * (1.0 / 3.0);
    if (point_in_polygon(c, outer)) kept.push_back(tri);
  }
  if (kept.empty()) throw MeshGenerationError("triangulation is empty");
  std::vector<int> remap(dpts.size(), -1);
  Mesh mesh;
  for (auto& tri : kept) {
    for (int& v : tri) {
      if (remap[v] < 0) {
        remap[v] = mesh.num_vertices();
        mesh.vertices.push_back(dpts[v]);
      }
      v = remap[v];
    }
    mesh.triangles.push_back(tri);
  }
  // Renumber vertices in insertion order and sort triangles so the numbering
  // does not depend on triangle slot reuse.
  {
    std::vector<int> by_dt(dpts.size(), -1);
    for (std::size_t v = 0; v < dpts.size(); ++v)
      if (remap[v] >= 0) by_dt[v] = remap[v];
    std::vector<int> renumber(mesh.vertices.size(), -1);
    std::vector<Vec2> verts;
    for (std::size_t v = 0; v < dpts.size(); ++v) {
      if (by_dt[v] < 0) continue;
      renumber[by_dt[v]] = static_cast<int>(verts.size());
      verts.push_back(dpts[v]);
    }
    mesh.vertices = std::move(verts);
    for (auto& tri : mesh.triangles) {
      for (int& v : tri) v = renumber[v];
      const auto it = std::min_element(tri.begin(), tri.end());
      std::rotate(tri.begin(), it, tri.end());
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());
    for (auto& v : remap)
      if (v >= 0) v = renumber[v];
  }
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.triangle_area(t) > 0.0)) throw MeshGenerationError("degenerate triangle generated");

  mesh.regions.assign(mesh.triangles.size(), Region::Fluid);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 c = mesh.centroid(t);
    for (const auto& hole : holes)
      if (point_in_polygon(c, hole)) mesh.regions[t] = Region::Obstacle;
  }

  // Orient labeled edges counterclockwise with respect to their Fluid-side triangle.
  std::unordered_map<std::uint64_t, int> directed;  // (a,b) in ccw order -> triangle
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k)
      directed[(static_cast<std::uint64_t>(tri[k]) << 32) | static_cast<std::uint32_t>(tri[(k + 1) % 3])] = t;
  }
  for (std::size_t i = 0; i < cons.size(); ++i) {
    int a = remap[cons[i].first], b = remap[cons[i].second];
    if (a < 0 || b < 0) throw MeshGenerationError("boundary vertex lost");
    auto owner = [&](int p, int q) {
      auto it = directed.find((static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint32_t>(q));
      return it == directed.end() ? -1 : it->second;
    };
    const int fwd = owner(a, b), bwd = owner(b, a);
    const bool fwd_fluid = fwd >= 0 && mesh.regions[fwd] == Region::Fluid;
    const bool bwd_fluid = bwd >= 0 && mesh.regions[bwd] == Region::Fluid;
    if (!fwd_fluid && bwd_fluid) std::swap(a, b);
    if (fwd < 0 && bwd < 0) throw MeshGenerationError("boundary edge lost");
    mesh.edges.push_back({{a, b}, cons_label[i]});
  }
  std::sort(mesh.edges.begin(), mesh.edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.label, x.v) < std::tie(y.label, y.v);
  });
  validate(mesh);
  return mesh;
}

// --- submesh ------------------------------------------------------------------

Submesh extract_submesh(const Mesh& mesh, Region region) {
  Submesh sub;
  std::vector<int> vmap(mesh.vertices.size(), -1);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.regions[t] != region) continue;
    sub.triangle_parent.push_back(t);
    for (int v : mesh.triangles[t]) vmap[v] = 0;
  }
  if (sub.triangle_parent.empty()) throw MeshError("extract_submesh: region has no triangles");
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (vmap[v] < 0) continue;
    vmap[v] = static_cast<int>(sub.vertex_parent.size());
    sub.vertex_parent.push_back(v);
    sub.mesh.vertices.push_back(mesh.vertices[v]);
  }
  for (int t : sub.triangle_parent) {
    const auto& tri = mesh.triangles[t];
    sub.mesh.triangles.push_back({vmap[tri[0]], vmap[tri[1]], vmap[tri[2]]});
  }
  sub.mesh.regions.assign(sub.mesh.triangles.size(), region);

  std::unordered_map<std::uint64_t, Label> parent_labels;
  for (const auto& e : mesh.edges) parent_labels[edge_key(e.v[0], e.v[1])] = e.label;

  // Directed boundary edges of the submesh (ccw w.r.t. their triangle).
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& tri : sub.mesh.triangles)
    for (int k = 0; k < 3; ++k) ++count[edge_key(tri[k], tri[(k + 1) % 3])];
  std::vector<std::array<int, 2>> hole_edges;
  for (const auto& tri : sub.mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (count[edge_key(a, b)] != 1) continue;
      auto it = parent_labels.find(edge_key(sub.vertex_parent[a], sub.vertex_parent[b]));
      if (it != parent_labels.end() && !it->second.is_obstacle()) {
        sub.mesh.edges.push_back({{a, b}, it->second});
      } else {
        hole_edges.push_back({a, b});
      }
    }
  }
  DisjointSets sets(sub.mesh.num_vertices());
  for (const auto& e : hole_edges) sets.unite(e[0], e[1]);
  // One label per loop: reuse the parent obstacle label when present.
  std::map<int, Label> loop_label;
  std::set<Label> used;
  for (const auto& e : hole_edges) {
    auto it = parent_labels.find(edge_key(sub.vertex_parent[e[0]], sub.vertex_parent[e[1]]));
    if (it != parent_labels.end() && it->second.is_obstacle()) {
      const int root = sets.find(e[0]);
      if (!loop_label.count(root)) {
        loop_label[root] = it->second;
        used.insert(it->second);
      }
    }
  }
  int next_index = 1;
  for (const auto& e : hole_edges) {
    const int root = sets.find(e[0]);
    if (loop_label.count(root)) continue;
    while (used.count(Label::obstacle(next_index))) ++next_index;
    loop_label[root] = Label::obstacle(next_index);
    used.insert(Label::obstacle(next_index));
  }
  for (const auto& e : hole_edges) sub.mesh.edges.push_back({e, loop_label[sets.find(e[0])]});
  std::sort(sub.mesh.edges.begin(), sub.mesh.edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.label, x.v) < std::tie(y.label, y.v);
  });
  return sub;
}

double boundary_flux(const Mesh& mesh, std::span<const double> velocity, Label label) {
  const std::size_t n1 = mesh.vertices.size() + mesh.triangles.size();
  if (velocity.size() != 2 * n1) throw MeshError("boundary_flux: velocity has wrong length");
  if (!mesh.has_label(label)) throw MeshError("boundary_flux: unknown label " + label.name());
  const auto et = edge_triangles(mesh);
  double flux = 0.0;
  for (const auto& e : mesh.edges) {
    if (e.label != label) continue;
    const auto& owners = et.at(edge_key(e.v[0], e.v[1]));
    int owner = owners.front();
    if (owners.size() == 2 && mesh.regions[owner] != Region::Fluid) owner = owners[1];
    // Orient (a, b) counterclockwise around the owner so the outward normal is (dy, -dx).
    int a = e.v[0], b = e.v[1];
    const auto& tri = mesh.triangles[owner];
    for (int k = 0; k < 3; ++k)
      if (tri[k] == b && tri[(k + 1) % 3] == a) std::swap(a, b);
    const Vec2 d = mesh.vertices[b] - mesh.vertices[a];
    const Vec2 n_len{d.y, -d.x};  // outward normal scaled by edge length
    const Vec2 ya{velocity[a], velocity[n1 + a]};
    const Vec2 yb{velocity[b], velocity[n1 + b]};
    flux += 0.5 * dot(ya + yb, n_len);
  }
  return flux;
}

int count_boundary_loops(const Mesh& mesh, bool obstacles_only) {
  DisjointSets sets(mesh.num_vertices());
  std::set<int> members;
  for (const auto& e : mesh.edges) {
    if (obstacles_only && !e.label.is_obstacle()) continue;
    sets.unite(e.v[0], e.v[1]);
    members.insert(e.v[0]);
    members.insert(e.v[1]);
  }
  std::set<int> roots;
  for (int v : members) roots.insert(sets.find(v));
  return static_cast<int>(roots.size());
}

// --- text format ----------------------------------------------------------------

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' ' << mesh.edges.size() << '\n';
  for (const auto& v : mesh.vertices) out << format_double(v.x) << ' ' << format_double(v.y) << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << ' '
        << static_cast<int>(mesh.regions[t]) << '\n';
  }
  for (const auto& e : mesh.edges)
    out << e.v[0] + 1 << ' ' << e.v[1] + 1 << ' ' << e.label.code() << '\n';
}

Mesh read_mesh(std::istream& in) {
  auto fail = [](const std::string& what) { throw IoError("mesh file: " + what); };
  std::size_t nv = 0, nt = 0, ne = 0;
  if (!(in >> nv >> nt >> ne)) fail("missing header");
  Mesh mesh;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) {
    std::string xs, ys;
    if (!(in >> xs >> ys)) fail("truncated vertex list");
    auto parse = [&](const std::string& s) {
      double value = 0.0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), value);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad coordinate '" + s + "'");
      return value;
    };
    v = {parse(xs), parse(ys)};
  }
  mesh.triangles.resize(nt);
  mesh.regions.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    int i, j, k, r;
    if (!(in >> i >> j >> k >> r)) fail("truncated triangle list");
    if (r != 0 && r != 1) fail("bad region tag");
    mesh.triangles[t] = {i - 1, j - 1, k - 1};
    mesh.regions[t] = static_cast<Region>(r);
  }
  mesh.edges.resize(ne);
  for (auto& e : mesh.edges) {
    int i, j, code;
    if (!(in >> i >> j >> code)) fail("truncated edge list");
    e = {{i - 1, j - 1}, Label::from_code(code)};
  }
  for (const auto& tri : mesh.triangles)
    for (int v : tri)
      if (v < 0 || v >= static_cast<int>(nv)) fail("vertex index out of range");
  return mesh;
}

}  // namespace penflow
