#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "penflow/geometry.hpp"
#include "penflow/mesh.hpp"

namespace penflow {

/// Standard: H^h, rising on [0, h]. Shifted: rising on [-h, 0].
enum class HeavisideKind { Standard, Shifted };

struct SmoothingParams {
  double width = 0.05;
  HeavisideKind kind = HeavisideKind::Standard;
};

struct HeavisideValue {
  double value;
  double derivative;
};

/// C1 piecewise-cubic regularization of the unit step.
HeavisideValue smoothed_heaviside(double r, const SmoothingParams& params);

/// Pointwise level function; obstacles are where it is positive.
using LevelFunction = std::function<double(Vec2)>;

/// g(x) = max_i (r_i^2 - |x - c_i|^2).
LevelFunction compose_disks(std::vector<Vec2> centers, std::vector<double> radii);

/// g(x) = 1 - ((x1 - c1) / a)^2 - ((x2 - c2) / b)^2.
LevelFunction ellipse_level(Vec2 center, double a, double b);

/// Nodal P1 level field, one value per mesh vertex.
struct LevelField {
  std::vector<double> values;

  static LevelField interpolate(const Mesh& mesh, const LevelFunction& g);
  static LevelField constant(const Mesh& mesh, double value);
  std::size_t size() const { return values.size(); }
};

struct AdmissibilityReport {
  bool boundary_sign_ok = true;
  bool no_flat_zero_triangle = true;
  bool obstacle_inside = true;
  /// Distance from the P1 zero set to the outer boundary (infinity if the set is empty).
  double zero_set_distance = 0.0;
  /// Smallest |grad g_h| on triangles crossed by the zero set (diagnostic only).
  double min_gradient_near_zero = 0.0;
  int obstacle_triangles = 0;  // triangles with a vertex where g_h >= 0
  std::vector<std::string> violations;

  bool ok() const { return boundary_sign_ok && no_flat_zero_triangle && obstacle_inside; }
};

AdmissibilityReport check_admissibility(const LevelField& g, const Mesh& mesh);

/// One column with header "g", rows in mesh vertex order.
void write_level_csv(std::ostream& out, const LevelField& g);
LevelField read_level_csv(std::istream& in);

}  // namespace penflow
