#include <cmath>
#include <sstream>

#include "doctest.h"
#include "penflow/errors.hpp"
#include "penflow/levelset.hpp"

using namespace penflow;

TEST_CASE("smoothed Heaviside knots") {
  for (double h : {0.5, 0.05, 1e-3}) {
    const SmoothingParams std_{h, HeavisideKind::Standard}, sh{h, HeavisideKind::Shifted};
    CHECK(smoothed_heaviside(h, std_).value == 1.0);
    CHECK(smoothed_heaviside(-h, sh).value == 0.0);
    CHECK(smoothed_heaviside(0.0, std_).value == 0.0);
    CHECK(smoothed_heaviside(0.0, sh).value == 1.0);
    CHECK(smoothed_heaviside(0.5 * h, std_).value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothed_heaviside(-0.5 * h, sh).value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothed_heaviside(0.0, std_).derivative == 0.0);
    CHECK(smoothed_heaviside(h, std_).derivative == 0.0);
    CHECK(smoothed_heaviside(-h, sh).derivative == 0.0);
    CHECK(smoothed_heaviside(0.0, sh).derivative == 0.0);
  }
}

TEST_CASE("smoothed Heaviside bounds, monotonicity, derivative") {
  const double h = 0.1;
  for (auto kind : {HeavisideKind::Standard, HeavisideKind::Shifted}) {
    const SmoothingParams p{h, kind};
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double r = -2.0 * h + 4.0 * h * i / 1000.0;
      const auto v = smoothed_heaviside(r, p);
      CHECK(v.value >= 0.0);
      CHECK(v.value <= 1.0);
      CHECK(v.value >= prev);
      prev = v.value;
      // Away from the knots the central difference must match.
      const double lo = kind == HeavisideKind::Standard ? 0.0 : -h;
      const bool near_knot = std::abs(r - lo) < 1e-4 || std::abs(r - lo - h) < 1e-4;
      if (near_knot) continue;
      const double d = 1e-7;
      const double fd = (smoothed_heaviside(r + d, p).value - smoothed_heaviside(r - d, p).value) / (2 * d);
      CHECK(std::abs(fd - v.derivative) <= 1e-6 * std::max(1.0, std::abs(v.derivative)));
    }
  }
  // Pointwise convergence to the step away from zero.
  for (double r : {-0.3, 0.3}) {
    double prev = 1.0;
    for (double w : {1e-1, 1e-2, 1e-3}) {
      const double err = std::abs(smoothed_heaviside(r * 0.5, {w, HeavisideKind::Standard}).value - (r > 0));
      CHECK(err <= prev);
      prev = err;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("disk composition") {
  const auto g = compose_disks({{0.5, 0.25}, {0.75, 0.0}}, {0.15, 0.15});
  CHECK(g({0.5, 0.25}) == doctest::Approx(0.0225).epsilon(1e-15));
  CHECK(std::abs(g({0.65, 0.25})) <= 1e-15);
  const auto one = compose_disks({{0.0, 0.0}}, {0.15});
  CHECK(one({1.0, 0.0}) == doctest::Approx(-0.9775).epsilon(1e-15));
  CHECK_THROWS_AS(compose_disks({}, {}), GeometryError);
  CHECK_THROWS_AS(compose_disks({{0.0, 0.0}}, {-1.0}), GeometryError);
  const auto e = ellipse_level({-0.2, 0.0}, 0.2, 0.4);
  CHECK(e({-0.2, 0.0}) == 1.0);
  CHECK(std::abs(e({0.0, 0.0})) <= 1e-15);
  CHECK(std::abs(e({-0.2, 0.4})) <= 1e-15);
}

TEST_CASE("admissibility") {
  const Mesh m = generate_mesh(channel_domain(0.05), false);
  SUBCASE("reference disks pass") {
    const auto g = LevelField::interpolate(m, compose_disks({{0.5, 0.25}, {0.75, 0.0}}, {0.15, 0.15}));
    const auto r = check_admissibility(g, m);
    CHECK(r.ok());
    CHECK(r.obstacle_triangles > 0);
    CHECK(r.zero_set_distance > 0.05);
    CHECK(r.min_gradient_near_zero > 0.0);
  }
  SUBCASE("disk centered on the outer boundary") {
    const auto g = LevelField::interpolate(m, compose_disks({{-0.5, 0.0}}, {0.2}));
    const auto r = check_admissibility(g, m);
    CHECK_FALSE(r.boundary_sign_ok);
    CHECK_FALSE(r.obstacle_inside);
    CHECK_FALSE(r.ok());
  }
  SUBCASE("flat zero triangle") {
    auto g = LevelField::constant(m, -1.0);
    for (int v : m.triangles[m.num_triangles() / 2]) g.values[v] = 0.0;
    const auto r = check_admissibility(g, m);
    CHECK_FALSE(r.no_flat_zero_triangle);
  }
}

TEST_CASE("level field CSV round trip") {
  LevelField g{{-0.5, 0.1, 1e-300, 0.30000000000000004}};
  std::ostringstream out;
  write_level_csv(out, g);
  std::istringstream in(out.str());
  CHECK(read_level_csv(in).values == g.values);
  std::istringstream bad("x\n1\n");
  CHECK_THROWS_AS(read_level_csv(bad), IoError);
}
