#include <cmath>
#include <random>

#include "doctest.h"
#include "penflow/errors.hpp"
#include "penflow/fem.hpp"

using namespace penflow;

namespace {

Mesh reference_triangle() {
  Mesh m;
  m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.triangles = {{0, 1, 2}};
  m.regions = {Region::Fluid};
  m.edges = {{{0, 1}, Label::gamma(2)}, {{1, 2}, Label::gamma(3)}, {{2, 0}, Label::gamma(1)}};
  return m;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

Vector random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

AssemblyConfig fluid_config() {
  AssemblyConfig c;
  c.nu = 1.0;
  c.epsilon = 0.0;
  c.smoothing.width = 0.05;
  return c;
}

LevelField sec31_level(const Mesh& m) {
  return LevelField::interpolate(m, compose_disks({{0.5, 0.25}, {0.75, 0.0}}, {0.15, 0.15}));
}

}  // namespace

TEST_CASE("space counts") {
  const Mesh sq = generate_mesh(unit_square(1.0), false);
  const SpaceLayout s = build_spaces(sq);
  CHECK(s.N1 == 6);
  CHECK(s.N2 == 4);
  CHECK(s.N3 == 4);
  CHECK(s.M() == 16);
  CHECK(s.N() == 20);
  // Dirichlet: every vertex lies on bottom, right or top sides.
  CHECK(s.dirichlet_dofs.size() == 8);
  // Arithmetic of the layout formulas at the optimization mesh size of the reference runs.
  SpaceLayout big;
  big.N1 = 22632 + 44722;
  big.N2 = big.N3 = 22632;
  CHECK(big.N1 == 67354);
  CHECK(big.N() == 179972);
  CHECK(big.M() == 157340);
}

TEST_CASE("quadrature exactness against the monomial formula") {
  // On the reference triangle: integral of l0^a l1^b l2^c = 2 A a! b! c! / (a+b+c+2)!.
  for (int degree : {5, 8, 11}) {
    const auto rule = triangle_rule(degree);
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        for (int c = 0; a + b + c <= degree; ++c) {
          double q = 0.0;
          for (const auto& p : rule)
            q += p.weight * std::pow(p.lambda[0], a) * std::pow(p.lambda[1], b) * std::pow(p.lambda[2], c);
          const double exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
          CHECK(std::abs(q - exact) <= 1e-14);
        }
  }
  const auto g = gauss_legendre01(4);
  for (int k = 0; k <= 7; ++k) {
    double s = 0.0;
    for (const auto& [x, w] : g) s += w * std::pow(x, k);
    CHECK(std::abs(s - 1.0 / (k + 1)) <= 1e-15);
  }
}

TEST_CASE("local stiffness on the unit right triangle") {
  const Mesh m = reference_triangle();
  const SpaceLayout s = build_spaces(m);
  const auto [A, B] = assemble_bilinear(s, fluid_config(), Geometry::from_regions());
  const double P1[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(A.coeff(c * s.N1 + i, c * s.N1 + j) - P1[i][j]) <= 1e-14);
    const int b = c * s.N1 + 3;
    CHECK(A.coeff(b, b) == doctest::Approx(81.0 / 10.0).epsilon(1e-14));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(A.coeff(b, c * s.N1 + i)) <= 1e-14);
  }
  // Mass part with epsilon = 1 inside an obstacle triangle; the bubble mass is
  // degree 6, so use a rule that integrates it exactly.
  Mesh solid = m;
  solid.regions = {Region::Obstacle};
  const SpaceLayout ss = build_spaces(solid);
  AssemblyConfig cfg = fluid_config();
  cfg.epsilon = 1.0;
  cfg.quadrature_order = 6;
  const auto [As, Bs] = assemble_bilinear(ss, cfg, Geometry::from_regions());
  CHECK(As.coeff(3, 3) == doctest::Approx(81.0 / 10.0 + 81.0 / 560.0).epsilon(1e-14));
  CHECK(As.coeff(3, 1) == doctest::Approx(3.0 / 40.0).epsilon(1e-14));
}

TEST_CASE("bilinear forms on a fluid mesh") {
  const Mesh m = generate_mesh(unit_square(0.2), true);
  const SpaceLayout s = build_spaces(m);
  const auto [A, B] = assemble_bilinear(s, fluid_config(), Geometry::from_regions());
  CHECK(A.rows() == 2 * s.N1);
  CHECK(B.rows() == s.N2);
  CHECK(B.cols() == 2 * s.N1);
  const SparseMatrix At = SparseMatrix(A.transpose());
  CHECK(max_abs(A - At) <= 1e-12);
  const Vector w = interpolate_velocity(m, [](Vec2 p) { return Vec2{p.x, 0.0}; });
  const Vector q = Vector::Ones(s.N2);
  CHECK(q.dot(B * w) == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("trilinear forms") {
  const Mesh m = generate_mesh(unit_square(0.2), true);
  const SpaceLayout s = build_spaces(m);
  const Geometry geo = Geometry::from_regions();
  SUBCASE("value on linear fields") {
    const Vector u = interpolate_velocity(m, [](Vec2) { return Vec2{1.0, 0.0}; });
    const Vector v = interpolate_velocity(m, [](Vec2 p) { return Vec2{p.x, 0.0}; });
    const auto [C1, C2] = assemble_trilinear(s, fluid_config(), geo, u);
    CHECK(u.dot(C1 * v) == doctest::Approx(0.5).epsilon(1e-13));
    // C2 evaluates the same form with the first argument free.
    const auto [D1, D2] = assemble_trilinear(s, fluid_config(), geo, v);
    CHECK(u.dot(D2 * u) == doctest::Approx(0.5).epsilon(1e-13));
  }
  SUBCASE("skew symmetry for random fields with smoothed coefficients") {
    const Mesh d = generate_mesh(channel_domain(0.1, {}, 16), false);
    const SpaceLayout sd = build_spaces(d);
    AssemblyConfig cfg;
    cfg.epsilon = 0.1;
    cfg.smoothing.width = 0.05;
    const Geometry g = Geometry::from_level(sec31_level(d));
    std::mt19937 rng(1);
    for (int k = 0; k < 5; ++k) {
      const Vector u = random_vector(2 * sd.N1, rng), v = random_vector(2 * sd.N1, rng),
                   w = random_vector(2 * sd.N1, rng);
      const auto [C1, C2] = assemble_trilinear(sd, cfg, g, u);
      const double scale = u.norm() * v.norm() * w.norm();
      CHECK(std::abs(w.dot(C1 * w)) <= 1e-12 * scale);
      CHECK(std::abs(w.dot(C1 * v) + v.dot(C1 * w)) <= 1e-12 * scale);
      // C2(v) u and C1(u) v evaluate the same trilinear form.
      const auto [E1, E2] = assemble_trilinear(sd, cfg, g, v);
      CHECK(std::abs(w.dot(E2 * u) - w.dot(C1 * v)) <= 1e-12 * scale);
    }
    const Assembler as(sd, cfg, g);
    const Vector u = random_vector(2 * sd.N1, rng);
    CHECK((as.convection(u) - as.assemble_C1(u) * u).cwiseAbs().maxCoeff() <= 1e-12 * u.squaredNorm());
  }
}

TEST_CASE("load vector") {
  const Mesh m = generate_mesh(channel_domain(0.1, {}, 16), false);
  const SpaceLayout s = build_spaces(m);
  const Geometry none = Geometry::from_level(LevelField::constant(m, -1.0));
  AssemblyConfig cfg;
  CHECK(assemble_load(s, cfg, none).cwiseAbs().maxCoeff() == 0.0);
  const Vector one = interpolate_velocity(m, [](Vec2) { return Vec2{1.0, 0.0}; });
  cfg.traction = [](Vec2 p) { return Vec2{100.0 * p.y, 0.0}; };
  CHECK(std::abs(one.dot(assemble_load(s, cfg, none))) <= 1e-12);
  // Even traction component integrates to its length-weighted mean.
  cfg.traction = [](Vec2 p) { return Vec2{3.0 * p.y * p.y, 0.0}; };
  CHECK(one.dot(assemble_load(s, cfg, none)) == doctest::Approx(0.25).epsilon(1e-12));
  cfg.traction = {};
  cfg.force = [](Vec2) { return Vec2{1.0, 0.0}; };
  CHECK(one.dot(assemble_load(s, cfg, none)) == doctest::Approx(total_area(m)).epsilon(1e-13));
}

TEST_CASE("norms") {
  const Mesh m = generate_mesh(unit_square(0.25), true);
  const auto all = all_triangles(m);
  const Vector one = interpolate_velocity(m, [](Vec2) { return Vec2{1.0, 0.0}; });
  CHECK(compute_norm(m, one, all, NormKind::L2) == doctest::Approx(1.0).epsilon(1e-13));
  const Vector lin = interpolate_velocity(m, [](Vec2 p) { return Vec2{p.x, 0.0}; });
  CHECK(compute_norm(m, lin, all, NormKind::H1seminorm) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(compute_norm(m, lin, all, NormKind::L2) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-13));
  CHECK(compute_norm(m, lin, all, NormKind::H1) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-13));
  const Vector sol = interpolate_velocity(m, [](Vec2 p) { return Vec2{p.x, -p.y}; });
  CHECK(compute_norm(m, sol, all, NormKind::DivL2) <= 1e-12);
  // A single bubble on the reference triangle: |b|^2 = 81/560, |grad b|^2 = 81/10.
  const Mesh r = reference_triangle();
  Vector b = Vector::Zero(8);
  b[3] = 1.0;
  const std::vector<int> t0{0};
  CHECK(compute_norm(r, b, t0, NormKind::L2) == doctest::Approx(std::sqrt(81.0 / 560.0)).epsilon(1e-14));
  CHECK(compute_norm(r, b, t0, NormKind::H1seminorm) == doctest::Approx(std::sqrt(8.1)).epsilon(1e-14));
  CHECK_THROWS_AS(compute_norm(m, one, std::vector<int>{}, NormKind::L2), MeshError);
  CHECK(compute_scalar_l2(m, Vector::Ones(m.num_vertices()), all) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("coercivity samples on a conforming mesh") {
  const Mesh m = generate_mesh(channel_domain(0.08, {Disk{{0.5, 0.25}, 0.15}, Disk{{0.75, 0.0}, 0.15}}, 24), true);
  const SpaceLayout s = build_spaces(m);
  AssemblyConfig cfg;
  cfg.nu = 1.0;
  cfg.epsilon = 0.1;
  cfg.smoothing.width = 0.02;
  const auto [A, B] = assemble_bilinear(s, cfg, Geometry::from_level(sec31_level(m)));
  const auto fluid = triangles_in(m, Region::Fluid), solid = triangles_in(m, Region::Obstacle);
  std::mt19937 rng(7);
  for (int k = 0; k < 10; ++k) {
    Vector w = random_vector(2 * s.N1, rng);
    for (int d : s.dirichlet_dofs) w[d] = 0.0;
    const double lhs = w.dot(A * w);
    const double semi = compute_norm(m, w, fluid, NormKind::H1seminorm);
    const double full = compute_norm(m, w, solid, NormKind::H1);
    CHECK(lhs >= cfg.nu * semi * semi + cfg.epsilon * full * full - 1e-10);
  }
}

TEST_CASE("indicator assembly matches the fluid submesh") {
  const Mesh m = generate_mesh(unit_square(0.1, {Disk{{0.5, 0.5}, 0.2, 24}}), true);
  const Submesh sub = extract_submesh(m, Region::Fluid);
  const SpaceLayout full = build_spaces(m), part = build_spaces(sub.mesh);
  AssemblyConfig cfg = fluid_config();
  const auto [A, B] = assemble_bilinear(full, cfg, Geometry::from_regions());
  const auto [Af, Bf] = assemble_bilinear(part, cfg, Geometry::from_regions());
  // Map submesh scalar DOFs to parent DOFs.
  std::vector<int> dof(part.N1);
  for (int v = 0; v < sub.mesh.num_vertices(); ++v) dof[v] = sub.vertex_parent[v];
  for (int t = 0; t < sub.mesh.num_triangles(); ++t)
    dof[sub.mesh.num_vertices() + t] = m.num_vertices() + sub.triangle_parent[t];
  auto velocity = [&](int i) { return i < part.N1 ? dof[i] : full.N1 + dof[i - part.N1]; };
  double diff = 0.0;
  // With epsilon = 0 the obstacle triangles contribute nothing.
  for (int r = 0; r < Af.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(Af, r); it; ++it)
      diff = std::max(diff, std::abs(it.value() - A.coeff(velocity(it.row()), velocity(it.col()))));
  for (int r = 0; r < Bf.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(Bf, r); it; ++it)
      diff = std::max(diff, std::abs(it.value() - B.coeff(sub.vertex_parent[it.row()], velocity(it.col()))));
  CHECK(diff <= 1e-12);
}

TEST_CASE("plain and penalized divergence coincide without obstacles") {
  const Mesh m = generate_mesh(channel_domain(0.1, {}, 16), false);
  const SpaceLayout s = build_spaces(m);
  const Geometry none = Geometry::from_level(LevelField::constant(m, -1.0));
  AssemblyConfig a;
  a.divergence = DivergenceForm::PenalizedB;
  AssemblyConfig b = a;
  b.divergence = DivergenceForm::PlainB;
  const SparseMatrix Ba = assemble_bilinear(s, a, none).second, Bb = assemble_bilinear(s, b, none).second;
  CHECK(max_abs(Ba - Bb) == 0.0);
}

TEST_CASE("configuration errors") {
  const Mesh m = reference_triangle();
  const SpaceLayout s = build_spaces(m);
  AssemblyConfig c;
  c.quadrature_order = 3;
  CHECK_THROWS_AS(assemble_bilinear(s, c, Geometry::from_regions()), ConfigError);
  c = AssemblyConfig{};
  c.nu = 0.0;
  CHECK_THROWS_AS(assemble_bilinear(s, c, Geometry::from_regions()), ConfigError);
}
