#include "penflow/topopt.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "penflow/errors.hpp"

namespace penflow {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Geometry geometry_of(const OptVector& X) {
  return Geometry::from_level(LevelField{std::vector<double>(X.G.data(), X.G.data() + X.G.size())});
}

void check_sizes(const OptVector& X, const SpaceLayout& layout) {
  if (X.Y.size() != layout.velocity_size() || X.P.size() != layout.N2 || X.G.size() != layout.N3)
    throw ConfigError("optimization vector does not match the layout");
}

/// Symmetric gradient e(y) as {e11, e12, e22}.
std::array<double, 3> strain(const Assembler::Local& y) {
  return {y.grad[0].x, 0.5 * (y.grad[0].y + y.grad[1].x), y.grad[1].y};
}

double strain_dot(const std::array<double, 3>& e) { return e[0] * e[0] + 2.0 * e[1] * e[1] + e[2] * e[2]; }

void validate_spec(const CostSpec& spec, const SpaceLayout& layout) {
  if (spec.kind != CostKind::Tracking) return;
  if (!spec.target) throw ConfigError("tracking cost requires a target velocity y_d");
  if (spec.target->size() != layout.velocity_size()) throw ConfigError("tracking target does not match the layout");
}

/// J_h and, when `grad` is non-null, its gradient.
double cost_impl(const Assembler& as, const OptVector& X, const CostSpec& spec, Vector* grad) {
  const SpaceLayout& layout = as.layout();
  const Mesh& mesh = layout.mesh;
  const ElementCache& cache = as.cache();
  const int n1 = layout.N1, nq = cache.num_points();
  if (grad) *grad = Vector::Zero(layout.N());
  const int g_offset = layout.M();
  double J = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto dofs = layout.local_dofs(t);
    for (int q = 0; q < nq; ++q) {
      const Weights w = as.weights(t, q);
      const double wq = cache.rule()[q].weight * cache.area(t);
      const auto& N = cache.N(q);
      const auto dN = cache.dN(t, q);
      const Assembler::Local y = as.eval_velocity(X.Y, t, q);
      double density;
      if (spec.kind == CostKind::DissipatedEnergy) {
        const auto e = strain(y);
        density = strain_dot(e);
        if (grad) {
          const double E[2][2] = {{e[0], e[1]}, {e[1], e[2]}};
          for (int c = 0; c < 2; ++c)
            for (int s = 0; s < 4; ++s)
              (*grad)[c * n1 + dofs[s]] += wq * w.cost * 2.0 * (E[c][0] * dN[s].x + E[c][1] * dN[s].y);
        }
      } else {
        const Assembler::Local yd = as.eval_velocity(*spec.target, t, q);
        const Vec2 r = y.y - yd.y;
        density = dot(r, r);
        if (grad) {
          const double rc[2] = {r.x, r.y};
          for (int c = 0; c < 2; ++c)
            for (int s = 0; s < 4; ++s) (*grad)[c * n1 + dofs[s]] += wq * w.cost * 2.0 * rc[c] * N[s];
        }
      }
      J += wq * w.cost * density;
      if (grad && w.dcost != 0.0)
        for (int j = 0; j < 3; ++j) (*grad)[g_offset + tri[j]] += wq * w.dcost * N[j] * density;
    }
  }
  return J;
}

SparseMatrix jacobian_impl(const NavierStokesSystem& sys, const OptVector& X) {
  const SpaceLayout& layout = sys.assembler().layout();
  const int n = layout.velocity_size(), m = layout.M();
  const SparseMatrix saddle = sys.jacobian(X.Y, true);
  const SparseMatrix dmom = sys.assembler().assemble_momentum_level_derivative(X.Y, X.P);
  const SparseMatrix ddiv = sys.assembler().assemble_divergence_level_derivative(X.Y);
  Triplets trips;
  trips.reserve(saddle.nonZeros() + dmom.nonZeros() + ddiv.nonZeros());
  for (int i = 0; i < saddle.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(saddle, i); it; ++it) trips.emplace_back(i, it.col(), it.value());
  for (int i = 0; i < n; ++i) {
    if (layout.is_dirichlet(i)) continue;
    for (SparseMatrix::InnerIterator it(dmom, i); it; ++it) trips.emplace_back(i, m + it.col(), it.value());
  }
  for (int i = 0; i < ddiv.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(ddiv, i); it; ++it) trips.emplace_back(n + i, m + it.col(), it.value());
  SparseMatrix J(m, layout.N());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

struct Evaluation {
  double J_h = 0.0;
  double J_rho = 0.0;
  Vector C;
};

Evaluation evaluate(const OptVector& X, const CostSpec& spec, double rho, const SpaceLayout& layout,
                    const AssemblyConfig& config) {
  const NavierStokesSystem sys(layout, config, geometry_of(X));
  Evaluation e;
  e.C = sys.residual(X.Y, X.P);
  e.J_h = cost_impl(sys.assembler(), X, spec, nullptr);
  e.J_rho = e.J_h + 0.5 * rho * e.C.squaredNorm();
  return e;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Vector OptVector::stacked() const {
  Vector X(Y.size() + P.size() + G.size());
  X << Y, P, G;
  return X;
}

OptVector OptVector::split(const SpaceLayout& layout, const Vector& X) {
  if (X.size() != layout.N()) throw ConfigError("optimization vector has length " + std::to_string(X.size()) +
                                                ", expected " + std::to_string(layout.N()));
  const int n = layout.velocity_size();
  return {X.head(n), X.segment(n, layout.N2), X.tail(layout.N3)};
}

void OptConfig::validate() const {
  if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
  if (!(initial_step >= 0.0)) throw ConfigError("initial_step must be >= 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ConfigError("armijo_c must lie in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) throw ConfigError("backtrack_factor must lie in (0, 1)");
  if (max_backtracks < 0) throw ConfigError("max_backtracks must be >= 0");
  if (!(step_growth >= 1.0)) throw ConfigError("step_growth must be >= 1");
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
  if (stagnation_window < 0) throw ConfigError("stagnation_window must be >= 0");
}

Vector constraint_residual(const OptVector& X, const SpaceLayout& layout, const AssemblyConfig& config) {
  check_sizes(X, layout);
  return NavierStokesSystem(layout, config, geometry_of(X)).residual(X.Y, X.P);
}

SparseMatrix constraint_jacobian(const OptVector& X, const SpaceLayout& layout, const AssemblyConfig& config) {
  check_sizes(X, layout);
  return jacobian_impl(NavierStokesSystem(layout, config, geometry_of(X)), X);
}

std::pair<double, Vector> cost_and_gradient(const OptVector& X, const CostSpec& spec, const SpaceLayout& layout,
                                            const AssemblyConfig& config) {
  check_sizes(X, layout);
  validate_spec(spec, layout);
  const Assembler as(layout, config, geometry_of(X));
  Vector grad;
  const double J = cost_impl(as, X, spec, &grad);
  return {J, std::move(grad)};
}

double cost_value(const OptVector& X, const CostSpec& spec, const SpaceLayout& layout, const AssemblyConfig& config) {
  check_sizes(X, layout);
  validate_spec(spec, layout);
  return cost_impl(Assembler(layout, config, geometry_of(X)), X, spec, nullptr);
}

std::pair<double, Vector> penalized_value_and_gradient(const OptVector& X, const CostSpec& spec, double rho,
                                                       const SpaceLayout& layout, const AssemblyConfig& config) {
  if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
  check_sizes(X, layout);
  validate_spec(spec, layout);
  const NavierStokesSystem sys(layout, config, geometry_of(X));
  Vector grad;
  double J = cost_impl(sys.assembler(), X, spec, &grad);
  if (rho == 0.0) return {J, std::move(grad)};
  const Vector C = sys.residual(X.Y, X.P);
  J += 0.5 * rho * C.squaredNorm();
  grad += rho * (jacobian_impl(sys, X).transpose() * C);
  return {J, std::move(grad)};
}

OptVector initial_state(const LevelField& G, const SpaceLayout& layout, const AssemblyConfig& config,
                        const NewtonOptions& newton) {
  if (G.size() != static_cast<std::size_t>(layout.N3)) throw ConfigError("level field does not match the layout");
  const Geometry geo = Geometry::from_level(G);
  const MixedState init = solve_stokes(layout, config, geo, newton);
  const auto [state, report] = solve_navier_stokes(layout, config, geo, init, newton);
  return {state.Y, state.P, Eigen::Map<const Vector>(G.values.data(), layout.N3)};
}

OptResult optimize(const LevelField& initial_G, const CostSpec& spec, const OptConfig& opt, const SpaceLayout& layout,
                   const AssemblyConfig& config, const NewtonOptions& newton) {
  opt.validate();
  validate_spec(spec, layout);
  const AdmissibilityReport adm0 = check_admissibility(initial_G, layout.mesh);
  if (!adm0.boundary_sign_ok) throw GeometryError("initial level field is not negative on the outer boundary");

  OptResult res;
  res.X = initial_state(initial_G, layout, config, newton);
  const int n = layout.velocity_size();

  auto direction = [&](const OptVector& X) {
    Vector d = penalized_value_and_gradient(X, spec, opt.rho, layout, config).second;
    for (int i = 0; i < n; ++i)
      if (layout.is_dirichlet(i)) d[i] = 0.0;
    return d;
  };
  auto snapshot = [&](int k, const Vector& G) {
    LevelField g{std::vector<double>(G.data(), G.data() + G.size())};
    AdmissibilityReport rep = check_admissibility(g, layout.mesh);
    res.snapshots.push_back({k, std::move(g), std::move(rep)});
  };
  auto make_record = [&](int k, const Evaluation& e) {
    IterateRecord r;
    r.iteration = k;
    r.J_h = e.J_h;
    r.J_rho = e.J_rho;
    r.C_inf = e.C.lpNorm<Eigen::Infinity>();
    r.BY_inf = e.C.tail(layout.N2).lpNorm<Eigen::Infinity>();
    return r;
  };

  Evaluation cur = evaluate(res.X, spec, opt.rho, layout, config);
  Vector X = res.X.stacked();
  Vector d = direction(res.X);
  res.history.push_back(make_record(0, cur));
  res.history.back().grad_norm_sq = d.squaredNorm();
  if (opt.snapshot_every > 0) snapshot(0, res.X.G);

  const double dmax = d.lpNorm<Eigen::Infinity>();
  double trial = opt.initial_step > 0.0 ? opt.initial_step : (dmax > 0.0 ? 1.0 / dmax : 1.0);
  int flat = 0;

  for (int k = 1; k <= opt.max_iterations; ++k) {
    if (!std::isfinite(cur.J_rho))
      throw SolverError("optimize: non-finite J_rho at iteration " + std::to_string(k - 1));
    const double gg = d.squaredNorm();
    if (gg == 0.0) break;
    double s = trial;
    bool accepted = false;
    int backtracks = 0;
    OptVector Xt;
    Evaluation et;
    for (; backtracks <= opt.max_backtracks; ++backtracks) {
      Xt = OptVector::split(layout, X - s * d);
      et = evaluate(Xt, spec, opt.rho, layout, config);
      if (std::isfinite(et.J_rho) && et.J_rho <= cur.J_rho - opt.armijo_c * s * gg) {
        accepted = true;
        break;
      }
      if (backtracks < opt.max_backtracks) s *= opt.backtrack_factor;
    }
    const double previous = cur.J_rho;
    if (accepted) {
      X = Xt.stacked();
      res.X = std::move(Xt);
      cur = std::move(et);
      d = direction(res.X);
      trial = s * opt.step_growth;
    } else {
      trial = s;
    }
    IterateRecord r = make_record(k, cur);
    r.step = accepted ? s : 0.0;
    r.backtracks = accepted ? backtracks : opt.max_backtracks;
    r.stalled = !accepted;
    r.grad_norm_sq = d.squaredNorm();
    res.history.push_back(r);
    if (opt.snapshot_every > 0 && k % opt.snapshot_every == 0) snapshot(k, res.X.G);

    if (std::abs(cur.J_rho - previous) <= opt.stagnation_tol * (1.0 + std::abs(cur.J_rho)))
      ++flat;
    else
      flat = 0;
    if (opt.stagnation_window > 0 && flat >= opt.stagnation_window) break;
  }
  return res;
}

void write_history_csv(std::ostream& out, const std::vector<IterateRecord>& history) {
  out << "iteration,J_h,J_rho,C_inf,BY_inf,step,backtracks,stalled\n";
  for (const auto& r : history)
    out << r.iteration << ',' << fmt(r.J_h) << ',' << fmt(r.J_rho) << ',' << fmt(r.C_inf) << ',' << fmt(r.BY_inf)
        << ',' << fmt(r.step) << ',' << r.backtracks << ',' << (r.stalled ? 1 : 0) << '\n';
}

}  // namespace penflow
