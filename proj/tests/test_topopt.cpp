#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "penflow/topopt.hpp"

using namespace penflow;

namespace {

struct Small {
  Mesh mesh = generate_mesh(unit_square(0.25), false);
  SpaceLayout layout = build_spaces(mesh);
  LevelFunction level = compose_disks({{0.5, 0.5}}, {0.3});
  AssemblyConfig config;

  Small() {
    config.nu = 1.0;
    config.epsilon = 0.05;
    config.smoothing.width = 0.2;
    config.traction = [](Vec2 p) { return Vec2{10.0 * p.y * (1.0 - p.y), 0.0}; };
    config.force = [](Vec2 p) { return Vec2{1.0, p.x}; };
  }
};

double max_abs(const SparseMatrix& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

}  // namespace

TEST_CASE("optimization vector packing") {
  const Small s;
  REQUIRE(s.layout.N() <= 200);
  std::mt19937_64 rng(1);
  const OptVector X = oracle::random_admissible_point(s.layout, s.level, rng);
  const Vector v = X.stacked();
  CHECK(v.size() == s.layout.N());
  const OptVector back = OptVector::split(s.layout, v);
  CHECK(back.Y == X.Y);
  CHECK(back.P == X.P);
  CHECK(back.G == X.G);
  CHECK_THROWS_AS(OptVector::split(s.layout, Vector::Zero(3)), ConfigError);
}

TEST_CASE("constraint residual") {
  Small s;
  SUBCASE("homogeneous system") {
    s.config.traction = nullptr;
    s.config.force = nullptr;
    OptVector X{Vector::Zero(s.layout.velocity_size()), Vector::Zero(s.layout.N2),
                Eigen::Map<const Vector>(LevelField::interpolate(s.mesh, s.level).values.data(), s.layout.N3)};
    const Vector C = constraint_residual(X, s.layout, s.config);
    CHECK(C.size() == s.layout.M());
    CHECK(C.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("converged Navier-Stokes state") {
    const OptVector X = initial_state(LevelField::interpolate(s.mesh, s.level), s.layout, s.config);
    CHECK(constraint_residual(X, s.layout, s.config).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
  SUBCASE("directional consistency is second order") {
    std::mt19937_64 rng(2);
    const OptVector X = oracle::random_admissible_point(s.layout, s.level, rng);
    const OptVector D = oracle::random_admissible_point(s.layout, s.level, rng);
    Vector d = D.stacked();
    d.tail(s.layout.N3) *= 0.1;
    const Vector x = X.stacked();
    const Vector C0 = constraint_residual(X, s.layout, s.config);
    const Vector Jd = constraint_jacobian(X, s.layout, s.config) * d;
    double err[2];
    const double ts[2] = {1e-3, 1e-4};
    for (int k = 0; k < 2; ++k) {
      const Vector Ct = constraint_residual(OptVector::split(s.layout, x + ts[k] * d), s.layout, s.config);
      err[k] = (Ct - C0 - ts[k] * Jd).lpNorm<Eigen::Infinity>();
    }
    CHECK(err[1] < 0.02 * err[0]);
  }
}

TEST_CASE("constraint Jacobian blocks") {
  const Small s;
  std::mt19937_64 rng(3);
  const OptVector X = oracle::random_admissible_point(s.layout, s.level, rng);
  const SparseMatrix J = constraint_jacobian(X, s.layout, s.config);
  const int n = s.layout.velocity_size(), m = s.layout.M();
  REQUIRE(J.rows() == m);
  REQUIRE(J.cols() == s.layout.N());

  const Geometry geo = Geometry::from_level(LevelField{std::vector<double>(X.G.data(), X.G.data() + X.G.size())});
  const Assembler as(s.layout, s.config, geo);
  const SparseMatrix B = as.assemble_B();
  const SparseMatrix V = as.assemble_A() + as.assemble_C1(X.Y) + as.assemble_C2(X.Y);
  const Eigen::MatrixXd Jd(J);
  CHECK((Jd.block(n, 0, s.layout.N2, n) - Eigen::MatrixXd(B)).cwiseAbs().maxCoeff() <= 1e-14);
  const Eigen::MatrixXd Vd(V);
  double top = 0.0;
  for (int i = 0; i < n; ++i) {
    if (s.layout.is_dirichlet(i)) {
      for (int j = 0; j < s.layout.N(); ++j) CHECK(Jd(i, j) == (i == j ? 1.0 : 0.0));
      continue;
    }
    top = std::max(top, (Jd.row(i).head(n) - Vd.row(i)).cwiseAbs().maxCoeff());
  }
  CHECK(top <= 1e-14 * std::max(1.0, max_abs(V)));
  CHECK(Jd.block(n, n, s.layout.N2, s.layout.N2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constraint Jacobian matches finite differences") {
  const Small s;
  std::mt19937_64 rng(4);
  for (const auto form : {DivergenceForm::PenalizedB, DivergenceForm::PlainB}) {
    AssemblyConfig cfg = s.config;
    cfg.divergence = form;
    for (int trial = 0; trial < 2; ++trial) {
      const OptVector X = oracle::random_admissible_point(s.layout, s.level, rng);
      auto residual = [&](const Vector& x) { return constraint_residual(OptVector::split(s.layout, x), s.layout, cfg); };
      CHECK(oracle::jacobian_discrepancy(residual, X.stacked(), constraint_jacobian(X, s.layout, cfg)) <= 1e-5);
    }
  }
}

TEST_CASE("cost values and gradients") {
  const Small s;
  std::mt19937_64 rng(5);
  const OptVector X = oracle::random_admissible_point(s.layout, s.level, rng);

  SUBCASE("dissipated energy of zero velocity") {
    OptVector Z = X;
    Z.Y.setZero();
    const auto [J, g] = cost_and_gradient(Z, {}, s.layout, s.config);
    CHECK(J == 0.0);
    CHECK(g.head(s.layout.velocity_size()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("tracking at the target") {
    CostSpec spec{CostKind::Tracking, X.Y};
    const auto [J, g] = cost_and_gradient(X, spec, s.layout, s.config);
    CHECK(J == 0.0);
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("tracking without a target") {
    CHECK_THROWS_AS(cost_and_gradient(X, {CostKind::Tracking, std::nullopt}, s.layout, s.config), ConfigError);
    CHECK_THROWS_AS(cost_and_gradient(X, {CostKind::Tracking, Vector::Zero(4)}, s.layout, s.config), ConfigError);
  }
  SUBCASE("pressure block is zero and value matches cost_value") {
    const auto [J, g] = cost_and_gradient(X, {}, s.layout, s.config);
    CHECK(g.segment(s.layout.velocity_size(), s.layout.N2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(J == cost_value(X, {}, s.layout, s.config));
    CHECK(J > 0.0);
  }
  SUBCASE("gradients match finite differences") {
    const OptVector T = oracle::random_admissible_point(s.layout, s.level, rng);
    for (const CostSpec& spec : {CostSpec{}, CostSpec{CostKind::Tracking, T.Y}}) {
      for (double rho : {0.0, 0.8}) {
        const auto [J, g] = penalized_value_and_gradient(X, spec, rho, s.layout, s.config);
        auto f = [&](const Vector& x) {
          return penalized_value_and_gradient(OptVector::split(s.layout, x), spec, rho, s.layout, s.config).first;
        };
        CHECK(oracle::gradient_discrepancy(f, X.stacked(), g) <= 1e-5);
      }
    }
  }
  SUBCASE("rho = 0 reduces to the cost") {
    const auto a = cost_and_gradient(X, {}, s.layout, s.config);
    const auto b = penalized_value_and_gradient(X, {}, 0.0, s.layout, s.config);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK_THROWS_AS(penalized_value_and_gradient(X, {}, -1.0, s.layout, s.config), ConfigError);
  }
  SUBCASE("penalty composition") {
    const double rho = 0.8;
    const Vector C = constraint_residual(X, s.layout, s.config);
    const auto [Jh, gh] = cost_and_gradient(X, {}, s.layout, s.config);
    const auto [Jr, gr] = penalized_value_and_gradient(X, {}, rho, s.layout, s.config);
    CHECK(Jr == doctest::Approx(Jh + 0.5 * rho * C.squaredNorm()).epsilon(1e-14));
    const Vector expect = gh + rho * (constraint_jacobian(X, s.layout, s.config).transpose() * C);
    CHECK((gr - expect).cwiseAbs().maxCoeff() <= 1e-12 * expect.cwiseAbs().maxCoeff());
  }
  SUBCASE("penalty vanishes at a converged state") {
    const OptVector N = initial_state(LevelField::interpolate(s.mesh, s.level), s.layout, s.config);
    const auto [Jh, gh] = cost_and_gradient(N, {}, s.layout, s.config);
    const auto [Jr, gr] = penalized_value_and_gradient(N, {}, 0.8, s.layout, s.config);
    CHECK(std::abs(Jr - Jh) <= 1e-15 * std::max(1.0, Jh) + 1e-18);
  }
}

TEST_CASE("steepest descent") {
  const Small s;
  const LevelField G0 = LevelField::interpolate(s.mesh, s.level);
  OptConfig opt;
  opt.rho = 0.0;
  opt.step_growth = 1.0;
  opt.max_iterations = 30;
  opt.snapshot_every = 10;
  opt.stagnation_window = 0;
  const OptResult r = optimize(G0, {}, opt, s.layout, s.config);
  REQUIRE(r.history.size() == 31);
  CHECK(r.history.front().C_inf <= 1e-9);
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    const auto& a = r.history[k - 1];
    const auto& b = r.history[k];
    CHECK(b.J_h <= a.J_h);
    if (!b.stalled) CHECK(b.J_rho <= a.J_rho - opt.armijo_c * b.step * a.grad_norm_sq);
  }
  CHECK(r.history.back().J_h < r.history.front().J_h);
  for (int d : s.layout.dirichlet_dofs) CHECK(r.X.Y[d] == 0.0);
  REQUIRE(r.snapshots.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(r.snapshots[k].iteration == 10 * k);
  CHECK(r.snapshots[0].G.values == G0.values);

  std::ostringstream csv;
  write_history_csv(csv, r.history);
  CHECK(csv.str().rfind("iteration,J_h,J_rho,C_inf,BY_inf,step,backtracks,stalled\n", 0) == 0);
}

TEST_CASE("optimizer input validation") {
  const Small s;
  OptConfig bad;
  bad.rho = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.backtrack_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  const LevelField everywhere = LevelField::constant(s.mesh, 1.0);
  CHECK_THROWS_AS(optimize(everywhere, {}, OptConfig{}, s.layout, s.config), GeometryError);
}
