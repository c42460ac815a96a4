#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "penflow/geometry.hpp"

namespace penflow {

/// Boundary label. Outer sides are Gamma1..Gamma4; obstacle loops are
/// Obstacle(i), i >= 1. The integer code (1..4, 100 + i) is what the mesh
/// file stores.
class Label {
 public:
  static constexpr int kObstacleBase = 100;

  constexpr Label() = default;
  static constexpr Label gamma(int side) { return Label(side); }
  static constexpr Label obstacle(int index) { return Label(kObstacleBase + index); }
  static Label from_code(int code);

  constexpr int code() const { return code_; }
  constexpr bool is_obstacle() const { return code_ > kObstacleBase; }
  constexpr int obstacle_index() const { return code_ - kObstacleBase; }
  std::string name() const;

  constexpr bool operator==(const Label&) const = default;
  constexpr auto operator<=>(const Label&) const = default;

 private:
  constexpr explicit Label(int code) : code_(code) {}
  int code_ = 0;
};

enum class Region : std::uint8_t { Fluid = 0, Obstacle = 1 };

struct LabeledEdge {
  std::array<int, 2> v;
  Label label;
};

/// Conforming triangulation with labeled boundary (and interface) edges.
///
/// Outer boundary edges belong to exactly one triangle. Edges labeled
/// Obstacle(i) either bound a hole (one triangle) or, in a region-tagged mesh
/// of the whole holdall domain, separate Fluid from Obstacle triangles (two
/// triangles). Normals used for fluxes point out of the Fluid side.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<LabeledEdge> edges;
  std::vector<Region> regions;  // one per triangle

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  Vec2 centroid(int t) const;
  bool has_label(Label label) const;
  std::vector<Label> labels() const;
};

double total_area(const Mesh& mesh);
double region_area(const Mesh& mesh, Region region);
double mean_edge_length(const Mesh& mesh);
int count_unique_edges(const Mesh& mesh);
std::vector<int> triangles_in(const Mesh& mesh, Region region);
std::vector<int> all_triangles(const Mesh& mesh);

/// Throws MeshError describing the first violated structural invariant.
void validate(const Mesh& mesh);

// --- domain description ------------------------------------------------------

struct LineSegment {
  Vec2 a;
  Vec2 b;
  Label label;
};

/// Circular arc from angle t0 to t1 (counterclockwise when t1 > t0).
struct CircularArc {
  Vec2 center;
  double radius = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  Label label;
  int min_segments = 64;
};

using BoundaryPiece = std::variant<LineSegment, CircularArc>;

struct Disk {
  Vec2 center;
  double radius = 0.0;
  int min_segments = 64;
};

/// Closed polygon (counterclockwise), e.g. a polygonized implicit curve.
struct PolygonObstacle {
  std::vector<Vec2> vertices;
};

using ObstacleShape = std::variant<Disk, PolygonObstacle>;

struct DomainSpec {
  /// Pieces traversed counterclockwise; each piece starts where the previous ends.
  std::vector<BoundaryPiece> outer;
  std::vector<ObstacleShape> obstacles;
  double target_edge = 0.05;
};

/// The holdall domain of the reference experiments: the square
/// ]-0.5,0.5[^2 closed on the right by a half disk of radius 0.5 centered at
/// (0.5, 0). Gamma1 left, Gamma2 bottom, Gamma3 arc, Gamma4 top.
DomainSpec channel_domain(double target_edge, std::vector<ObstacleShape> obstacles = {},
                          int arc_min_segments = 64);

/// Unit square [0,1]^2, Gamma1 left, Gamma2 bottom, Gamma3 right, Gamma4 top.
DomainSpec unit_square(double target_edge, std::vector<ObstacleShape> obstacles = {});

/// Polygonized ellipse with semi-axes (ax, ay), counterclockwise.
PolygonObstacle ellipse_polygon(Vec2 center, double ax, double ay, int segments);

/// Constrained Delaunay triangulation of the domain. With
/// conform_to_obstacles the obstacle polygons are mesh edges, labeled
/// Obstacle(i) in input order, and triangles are tagged by region. Without it
/// obstacles only drive the region tags (by centroid).
Mesh generate_mesh(const DomainSpec& spec, bool conform_to_obstacles);

struct Submesh {
  Mesh mesh;
  std::vector<int> vertex_parent;    // submesh vertex -> parent vertex
  std::vector<int> triangle_parent;  // submesh triangle -> parent triangle
};

/// Keeps the triangles tagged `region`. Edges that become boundary without
/// being outer boundary are grouped into one Obstacle(i) loop per hole.
Submesh extract_submesh(const Mesh& mesh, Region region);

/// Integral of velocity . n over the edges with `label`. `velocity` holds the
/// component-blocked mini-element vector (2 (V + T) entries) on this mesh; the
/// bubble traces vanish on edges so the edge rule is exact.
double boundary_flux(const Mesh& mesh, std::span<const double> velocity, Label label);

/// Connected components of edges carrying obstacle labels (loops).
int count_boundary_loops(const Mesh& mesh, bool obstacles_only);

// --- text format ---------------------------------------------------------------
// Header "V T E", then V lines "x y", T lines "i j k region", E lines
// "i j label"; indices are 1-based, region 0 = Fluid / 1 = Obstacle.

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

}  // namespace penflow
