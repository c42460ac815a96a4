#include "penflow/ns_solver.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "penflow/linsolve.hpp"

namespace penflow {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<SparseMatrix(const Vector&)>;

/// Plain Newton with optional backtracking on the residual max norm. Throws
/// SolverError on divergence (three consecutive increases) or iteration cap.
Vector newton(const ResidualFn& residual, const JacobianFn& jacobian, Vector x, double tol,
              const NewtonOptions& opt, NewtonReport& report) {
  report = NewtonReport{};
  report.tolerance = tol;
  Vector r = residual(x);
  double rn = inf_norm(r);
  report.residuals.push_back(rn);
  if (!std::isfinite(rn)) throw SolverError("Newton: non-finite initial residual", report);
  int increases = 0;
  while (rn > tol) {
    if (report.iterations >= opt.max_iter)
      throw SolverError("Newton: no convergence after " + std::to_string(opt.max_iter) + " iterations, residual " +
                            fmt(rn),
                        report);
    const Vector dx = solve_direct(jacobian(x), -r);
    double step = 1.0;
    Vector xn = x + dx;
    Vector rnew = residual(xn);
    double rnn = inf_norm(rnew);
    if (opt.line_search) {
      for (int k = 0; k < 12 && !(rnn < rn); ++k) {
        step *= 0.5;
        xn = x + step * dx;
        rnew = residual(xn);
        rnn = inf_norm(rnew);
      }
    }
    ++report.iterations;
    report.residuals.push_back(rnn);
    if (!std::isfinite(rnn)) throw SolverError("Newton: non-finite residual", report);
    increases = rnn > rn ? increases + 1 : 0;
    x = std::move(xn);
    r = std::move(rnew);
    rn = rnn;
    if (increases >= 3) throw SolverError("Newton: residual increased for 3 consecutive steps", report);
  }
  report.converged = true;
  return x;
}

}  // namespace

// --- system -------------------------------------------------------------------------

NavierStokesSystem::NavierStokesSystem(const SpaceLayout& layout, const AssemblyConfig& config, Geometry geometry,
                                       NewtonOptions options)
    : layout_(&layout), assembler_(layout, config, std::move(geometry)), options_(options) {
  A_ = assembler_.assemble_A();
  B_ = assembler_.assemble_B();
  L_ = assembler_.assemble_load();
  for (int d : layout.dirichlet_dofs) L_[d] = 0.0;
  if (options_.pin_pressure && (options_.pin_dof < 0 || options_.pin_dof >= layout.N2))
    throw ConfigError("pinned pressure DOF out of range");
}

double NavierStokesSystem::tolerance() const { return options_.tolerance * (1.0 + inf_norm(L_)); }

Vector NavierStokesSystem::residual(const Vector& Y, const Vector& P, bool with_convection) const {
  const int n = layout_->velocity_size();
  Vector R(layout_->M());
  Vector mom = A_ * Y + B_.transpose() * P - L_;
  if (with_convection) mom += assembler_.convection(Y);
  for (int d : layout_->dirichlet_dofs) mom[d] = Y[d];
  R.head(n) = mom;
  R.tail(layout_->N2) = B_ * Y;
  if (options_.pin_pressure) R[n + options_.pin_dof] = P[options_.pin_dof];
  return R;
}

SparseMatrix NavierStokesSystem::jacobian(const Vector& Y, bool with_convection) const {
  const int n = layout_->velocity_size();
  SparseMatrix V = A_;
  if (with_convection) V += assembler_.assemble_C1(Y) + assembler_.assemble_C2(Y);
  Triplets trips;
  trips.reserve(V.nonZeros() + 2 * B_.nonZeros() + n);
  for (int i = 0; i < n; ++i) {
    if (layout_->is_dirichlet(i)) {
      trips.emplace_back(i, i, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(V, i); it; ++it) trips.emplace_back(i, it.col(), it.value());
  }
  for (int q = 0; q < B_.outerSize(); ++q) {
    const bool pinned = options_.pin_pressure && q == options_.pin_dof;
    if (pinned) trips.emplace_back(n + q, n + q, 1.0);
    for (SparseMatrix::InnerIterator it(B_, q); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (!pinned) trips.emplace_back(n + q, j, it.value());
      if (!layout_->is_dirichlet(j)) trips.emplace_back(j, n + q, it.value());
    }
  }
  SparseMatrix J(layout_->M(), layout_->M());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

SparseMatrix border(const SparseMatrix& saddle, const SparseMatrix& K) {
  const int m = static_cast<int>(saddle.rows()), k = static_cast<int>(K.rows());
  Triplets trips;
  trips.reserve(saddle.nonZeros() + 2 * K.nonZeros());
  for (int i = 0; i < m; ++i)
    for (SparseMatrix::InnerIterator it(saddle, i); it; ++it) trips.emplace_back(i, it.col(), it.value());
  for (int r = 0; r < k; ++r)
    for (SparseMatrix::InnerIterator it(K, r); it; ++it) {
      trips.emplace_back(m + r, it.col(), it.value());
      trips.emplace_back(it.col(), m + r, it.value());
    }
  SparseMatrix out(m + k, m + k);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// --- solvers ----------------------------------------------------------------------------

MixedState solve_stokes(const SpaceLayout& layout, const AssemblyConfig& config, const Geometry& geometry,
                        const NewtonOptions& options) {
  const NavierStokesSystem sys(layout, config, geometry, options);
  const int n = layout.velocity_size();
  const Vector Y0 = Vector::Zero(n), P0 = Vector::Zero(layout.N2);
  const Vector x = solve_direct(sys.jacobian(Y0, false), -sys.residual(Y0, P0, false));
  MixedState s{x.head(n), x.tail(layout.N2), {}};
  const double r = inf_norm(sys.residual(s.Y, s.P, false));
  if (!(r <= sys.tolerance()))
    throw SolverError("Stokes solve: residual " + fmt(r) + " above tolerance " + fmt(sys.tolerance()));
  return s;
}

std::pair<MixedState, NewtonReport> solve_navier_stokes(const SpaceLayout& layout, const AssemblyConfig& config,
                                                        const Geometry& geometry, const MixedState& init,
                                                        const NewtonOptions& options) {
  const int n = layout.velocity_size();
  if (init.Y.size() != n || init.P.size() != layout.N2) throw ConfigError("initial state has wrong length");
  const NavierStokesSystem sys(layout, config, geometry, options);
  Vector x(layout.M());
  x << init.Y, init.P;
  NewtonReport report;
  x = newton([&](const Vector& v) { return sys.residual(v.head(n), v.tail(layout.N2)); },
             [&](const Vector& v) { return sys.jacobian(v.head(n), true); }, x, sys.tolerance(), options, report);
  return {MixedState{x.head(n), x.tail(layout.N2), {}}, report};
}

SparseMatrix flux_constraint_rows(const SpaceLayout& layout, const std::vector<Label>& loops) {
  const Mesh& mesh = layout.mesh;
  const int n1 = layout.N1;
  Triplets trips;
  // Outward normals point away from the fluid side: orient each edge ccw around its fluid triangle.
  std::unordered_map<std::uint64_t, int> directed;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.regions[t] != Region::Fluid) continue;
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k)
      directed[(static_cast<std::uint64_t>(tri[k]) << 32) | static_cast<std::uint32_t>(tri[(k + 1) % 3])] = t;
  }
  for (std::size_t i = 0; i < loops.size(); ++i) {
    for (const auto& e : mesh.edges) {
      if (e.label != loops[i]) continue;
      int a = e.v[0], b = e.v[1];
      if (!directed.count((static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b))) std::swap(a, b);
      const Vec2 d = mesh.vertices[b] - mesh.vertices[a];
      const Vec2 half_normal{0.5 * d.y, -0.5 * d.x};
      for (int v : {a, b}) {
        trips.emplace_back(static_cast<int>(i), v, half_normal.x);
        trips.emplace_back(static_cast<int>(i), n1 + v, half_normal.y);
      }
    }
  }
  SparseMatrix K(static_cast<int>(loops.size()), layout.velocity_size());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

std::pair<MixedState, NewtonReport> solve_reference_flux_constrained(const SpaceLayout& layout,
                                                                     const AssemblyConfig& config,
                                                                     const NewtonOptions& options) {
  std::vector<Label> loops;
  for (Label l : layout.mesh.labels())
    if (l.is_obstacle()) loops.push_back(l);
  const SparseMatrix K = flux_constraint_rows(layout, loops);
  for (int i = 0; i < K.rows(); ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(K, i); it; ++it) s += std::abs(it.value());
    if (s == 0.0) throw SolverError("flux constraint " + loops[i].name() + " has no entries (rank deficiency)");
  }
  const NavierStokesSystem sys(layout, config, Geometry::from_regions(), options);
  const int n = layout.velocity_size(), m = layout.M(), k = static_cast<int>(loops.size());
  const SparseMatrix Kt = K.transpose();

  auto residual = [&](const Vector& x, bool conv) {
    Vector r(m + k);
    r.head(m) = sys.residual(x.head(n), x.segment(n, layout.N2), conv);
    Vector kl = Kt * x.tail(k);
    for (int d : layout.dirichlet_dofs) kl[d] = 0.0;
    r.head(n) += kl;
    r.tail(k) = K * x.head(n);
    return r;
  };
  auto jacobian = [&](const Vector& x, bool conv) {
    SparseMatrix Kd = K;
    for (int r = 0; r < Kd.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(Kd, r); it; ++it)
        if (layout.is_dirichlet(static_cast<int>(it.col()))) it.valueRef() = 0.0;
    return border(sys.jacobian(x.head(n), conv), Kd);
  };

  Vector x = Vector::Zero(m + k);
  x = solve_direct(jacobian(x, false), -residual(x, false));
  NewtonReport report;
  x = newton([&](const Vector& v) { return residual(v, true); }, [&](const Vector& v) { return jacobian(v, true); },
             x, sys.tolerance(), options, report);
  MixedState s{x.head(n), x.segment(n, layout.N2), {}};
  for (int i = 0; i < k; ++i) s.multipliers.push_back(x[m + i]);
  return {s, report};
}

// --- serialization ----------------------------------------------------------------------

void write_state_csv(std::ostream& out, const SpaceLayout& layout, const MixedState& state) {
  out << "block,index,value\n";
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < layout.N1; ++i)
      out << (c == 0 ? "u1," : "u2,") << i << ',' << fmt(state.Y[c * layout.N1 + i]) << '\n';
  for (int i = 0; i < layout.N2; ++i) out << "p," << i << ',' << fmt(state.P[i]) << '\n';
  for (std::size_t i = 0; i < state.multipliers.size(); ++i) out << "l," << i << ',' << fmt(state.multipliers[i]) << '\n';
}

MixedState read_state_csv(std::istream& in, const SpaceLayout& layout) {
  std::string line;
  if (!std::getline(in, line) || line != "block,index,value") throw IoError("state CSV: bad header");
  MixedState s{Vector::Zero(layout.velocity_size()), Vector::Zero(layout.N2), {}};
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string block, idx, val;
    if (!std::getline(ls, block, ',') || !std::getline(ls, idx, ',') || !std::getline(ls, val))
      throw IoError("state CSV: malformed row '" + line + "'");
    const int i = std::stoi(idx);
    double v = 0.0;
    auto res = std::from_chars(val.data(), val.data() + val.size(), v);
    if (res.ec != std::errc()) throw IoError("state CSV: bad value '" + val + "'");
    if ((block == "u1" || block == "u2") && i >= 0 && i < layout.N1) {
      s.Y[(block == "u2" ? layout.N1 : 0) + i] = v;
    } else if (block == "p" && i >= 0 && i < layout.N2) {
      s.P[i] = v;
    } else if (block == "l" && i == static_cast<int>(s.multipliers.size())) {
      s.multipliers.push_back(v);
    } else {
      throw IoError("state CSV: row does not match the layout '" + line + "'");
    }
    ++rows;
  }
  if (rows < layout.M()) throw IoError("state CSV: missing rows");
  return s;
}

void write_report_csv(std::ostream& out, const NewtonReport& report) {
  out << "iteration,residual_max_norm\n";
  for (std::size_t i = 0; i < report.residuals.size(); ++i) out << i << ',' << fmt(report.residuals[i]) << '\n';
}

}  // namespace penflow
