#pragma once

#include <array>
#include <vector>

#include "penflow/geometry.hpp"

namespace penflow::detail {

/// Incremental Bowyer-Watson triangulation inside a large enclosing triangle.
/// Vertices 0..2 are the enclosing triangle; inserted points follow.
class Delaunay {
 public:
  struct Triangle {
    std::array<int, 3> v;
    std::array<int, 3> nbr;  // nbr[k] is across the edge opposite v[k]
    bool alive = true;
  };

  Delaunay(Vec2 lo, Vec2 hi);

  /// Returns the index of the new vertex.
  int insert(Vec2 p);

  const std::vector<Vec2>& points() const { return points_; }
  std::vector<std::array<int, 3>> triangles() const;  // alive, ccw

 private:
  int locate(Vec2 p) const;

  std::vector<Vec2> points_;
  std::vector<Triangle> tris_;
  std::vector<int> free_slots_;
  std::vector<unsigned char> state_;
  int last_ = 0;
};

}  // namespace penflow::detail
