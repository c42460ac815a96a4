#include "delaunay.hpp"

#include <algorithm>

#include "penflow/errors.hpp"

namespace penflow::detail {

Delaunay::Delaunay(Vec2 lo, Vec2 hi) {
  const Vec2 c = 0.5 * (lo + hi);
  const double size = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
  const double r = 50.0 * size;
  points_ = {c + Vec2{-r, -r}, c + Vec2{r, -r}, c + Vec2{0.0, r}};
  tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
  state_.push_back(0);
}

int Delaunay::locate(Vec2 p) const {
  int t = last_;
  if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
    for (t = static_cast<int>(tris_.size()) - 1; t >= 0 && !tris_[t].alive; --t) {
    }
  }
  // Visibility walk; terminates on Delaunay triangulations.
  for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
    const Triangle& tri = tris_[t];
    int next = -1;
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = points_[tri.v[(k + 1) % 3]];
      const Vec2 b = points_[tri.v[(k + 2) % 3]];
      if (orient(a, b, p) < 0.0) {
        next = tri.nbr[k];
        break;
      }
    }
    if (next < 0) return t;
    t = next;
  }
  throw MeshGenerationError("point location did not terminate");
}

int Delaunay::insert(Vec2 p) {
  const int t0 = locate(p);
  const int pi = static_cast<int>(points_.size());
  points_.push_back(p);

  struct BoundaryEdge {
    int a, b, outside;
  };
  std::vector<int> cavity{t0};
  std::vector<int> touched{t0};
  std::vector<BoundaryEdge> boundary;
  state_[t0] = 1;
  for (std::size_t i = 0; i < cavity.size(); ++i) {
    const int t = cavity[i];
    for (int k = 0; k < 3; ++k) {
      const int a = tris_[t].v[(k + 1) % 3];
      const int b = tris_[t].v[(k + 2) % 3];
      const int nb = tris_[t].nbr[k];
      if (nb < 0) {
        boundary.push_back({a, b, -1});
        continue;
      }
      if (state_[nb] == 0) {
        const Triangle& n = tris_[nb];
        const bool in = incircle(points_[n.v[0]], points_[n.v[1]], points_[n.v[2]], p) > 0.0;
        state_[nb] = in ? 1 : 2;
        touched.push_back(nb);
        if (in) cavity.push_back(nb);
      }
      if (state_[nb] == 2) boundary.push_back({a, b, nb});
    }
  }
  for (int t : touched) state_[t] = 0;

  for (const auto& e : boundary) {
    if (orient(points_[e.a], points_[e.b], p) <= 0.0)
      throw MeshGenerationError("degenerate cavity during insertion");
  }

  // Reuse cavity slots, then append.
  for (int t : cavity) {
    tris_[t].alive = false;
    free_slots_.push_back(t);
  }
  std::vector<int> created;
  created.reserve(boundary.size());
  for (const auto& e : boundary) {
    int slot;
    if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
    } else {
      slot = static_cast<int>(tris_.size());
      tris_.push_back({});
      state_.push_back(0);
    }
    tris_[slot] = {{e.a, e.b, pi}, {-1, -1, e.outside}, true};
    if (e.outside >= 0) {
      Triangle& o = tris_[e.outside];
      for (int k = 0; k < 3; ++k) {
        const int oa = o.v[(k + 1) % 3], ob = o.v[(k + 2) % 3];
        if (oa == e.b && ob == e.a) o.nbr[k] = slot;
      }
    }
    created.push_back(slot);
  }
  // Link the fan: triangle (a, b, p) meets (b, c, p) across edge (b, p)
  // and (d, a, p) across edge (p, a).
  for (int s : created) {
    Triangle& t = tris_[s];
    for (int o : created) {
      if (o == s) continue;
      if (tris_[o].v[0] == t.v[1]) t.nbr[0] = o;
      if (tris_[o].v[1] == t.v[0]) t.nbr[1] = o;
    }
  }
  last_ = created.front();
  return pi;
}

std::vector<std::array<int, 3>> Delaunay::triangles() const {
  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris_)
    if (t.alive) out.push_back(t.v);
  return out;
}

}  // namespace penflow::detail
