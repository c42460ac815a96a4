#include "penflow/fem.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_set>

#include "penflow/errors.hpp"

namespace penflow {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int rows, int cols, const Triplets& trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

std::array<Vec2, 3> barycentric_gradients(Vec2 p0, Vec2 p1, Vec2 p2) {
  const double det = orient(p0, p1, p2);
  return {Vec2{(p1.y - p2.y) / det, (p2.x - p1.x) / det}, Vec2{(p2.y - p0.y) / det, (p0.x - p2.x) / det},
          Vec2{(p0.y - p1.y) / det, (p1.x - p0.x) / det}};
}

void shape_functions(const std::array<double, 3>& l, const std::array<Vec2, 3>& gl, std::array<double, 4>& N,
                     std::array<Vec2, 4>* dN) {
  N = {l[0], l[1], l[2], 27.0 * l[0] * l[1] * l[2]};
  if (dN) {
    (*dN)[0] = gl[0];
    (*dN)[1] = gl[1];
    (*dN)[2] = gl[2];
    (*dN)[3] = 27.0 * (l[1] * l[2] * gl[0] + l[0] * l[2] * gl[1] + l[0] * l[1] * gl[2]);
  }
}

}  // namespace

// --- spaces --------------------------------------------------------------------

SpaceLayout build_spaces(const Mesh& mesh, const DirichletSpec& spec) {
  SpaceLayout s;
  s.mesh = mesh;
  s.N1 = mesh.num_vertices() + mesh.num_triangles();
  s.N2 = mesh.num_vertices();
  s.N3 = mesh.num_vertices();
  s.dirichlet.assign(2 * s.N1, 0);
  for (const auto& e : mesh.edges) {
    const bool clamp = std::find(spec.labels.begin(), spec.labels.end(), e.label) != spec.labels.end() ||
                       (spec.obstacles && e.label.is_obstacle());
    if (!clamp) continue;
    for (int v : e.v) s.dirichlet[v] = s.dirichlet[s.N1 + v] = 1;
  }
  for (int i = 0; i < 2 * s.N1; ++i)
    if (s.dirichlet[i]) s.dirichlet_dofs.push_back(i);
  return s;
}

// --- quadrature ------------------------------------------------------------------

std::vector<std::array<double, 2>> gauss_legendre01(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one point");
  std::vector<std::array<double, 2>> out(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the standard initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[n - 1 - i] = {0.5 * (x + 1.0), 0.5 * w};
  }
  return out;
}

std::vector<QuadPoint> triangle_rule(int degree) {
  if (degree <= 5) {
    const double s15 = std::sqrt(15.0);
    const double a = (6.0 - s15) / 21.0, wa = (155.0 - s15) / 1200.0;
    const double b = (6.0 + s15) / 21.0, wb = (155.0 + s15) / 1200.0;
    return {{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
            {{a, a, 1.0 - 2.0 * a}, wa},
            {{a, 1.0 - 2.0 * a, a}, wa},
            {{1.0 - 2.0 * a, a, a}, wa},
            {{b, b, 1.0 - 2.0 * b}, wb},
            {{b, 1.0 - 2.0 * b, b}, wb},
            {{1.0 - 2.0 * b, b, b}, wb}};
  }
  // Collapsed square: lambda1 = u, lambda2 = (1 - u) v with Jacobian (1 - u).
  const int n = (degree + 3) / 2;
  const auto g = gauss_legendre01(n);
  std::vector<QuadPoint> rule;
  for (const auto& [u, wu] : g) {
    for (const auto& [v, wv] : g) {
      const double l1 = u, l2 = (1.0 - u) * v;
      rule.push_back({{1.0 - l1 - l2, l1, l2}, 2.0 * wu * wv * (1.0 - u)});
    }
  }
  return rule;
}

// --- configuration ------------------------------------------------------------------

void AssemblyConfig::validate() const {
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (!(smoothing.width > 0.0)) throw ConfigError("smoothing width must be positive");
  if (quadrature_order < 5) throw ConfigError("quadrature order must be at least 5 for bubble terms");
}

// --- element cache ------------------------------------------------------------------

ElementCache::ElementCache(const Mesh& mesh, int degree) : mesh_(&mesh), rule_(triangle_rule(degree)) {
  const int nt = mesh.num_triangles();
  const int nq = num_points();
  N_.resize(nq);
  grad_lambda_.resize(nt);
  area_.resize(nt);
  dN_.resize(static_cast<std::size_t>(nt) * nq * 4);
  for (int q = 0; q < nq; ++q) shape_functions(rule_[q].lambda, {}, N_[q], nullptr);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    grad_lambda_[t] = barycentric_gradients(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    area_[t] = mesh.triangle_area(t);
    for (int q = 0; q < nq; ++q) {
      std::array<double, 4> N;
      std::array<Vec2, 4> dN;
      shape_functions(rule_[q].lambda, grad_lambda_[t], N, &dN);
      std::copy(dN.begin(), dN.end(), dN_.begin() + (static_cast<std::size_t>(t) * nq + q) * 4);
    }
  }
}

Vec2 ElementCache::point(int t, int q) const {
  const auto& tri = mesh_->triangles[t];
  const auto& l = rule_[q].lambda;
  return l[0] * mesh_->vertices[tri[0]] + l[1] * mesh_->vertices[tri[1]] + l[2] * mesh_->vertices[tri[2]];
}

// --- assembler ------------------------------------------------------------------------

Assembler::Assembler(const SpaceLayout& layout, const AssemblyConfig& config, Geometry geometry)
    : layout_(&layout), config_(config), geometry_(std::move(geometry)),
      cache_(layout.mesh, config.quadrature_order) {
  config_.validate();
  if (geometry_.level && static_cast<int>(geometry_.level->size()) != layout.N3)
    throw ConfigError("level field length does not match the mesh");
  if (geometry_.uses_regions() && layout.mesh.regions.size() != layout.mesh.triangles.size())
    throw ConfigError("mesh is not region-tagged");
}

Weights Assembler::weights(int t, int q) const {
  const double nu = config_.nu, eps = config_.epsilon;
  double H, dH, Ht, dHt;
  if (geometry_.uses_regions()) {
    H = Ht = (layout_->mesh.regions[t] == Region::Obstacle) ? 1.0 : 0.0;
    dH = dHt = 0.0;
  } else {
    const auto& tri = layout_->mesh.triangles[t];
    const auto& l = cache_.rule()[q].lambda;
    const auto& g = geometry_.level->values;
    const double gq = l[0] * g[tri[0]] + l[1] * g[tri[1]] + l[2] * g[tri[2]];
    const HeavisideValue hs = smoothed_heaviside(gq, {config_.smoothing.width, HeavisideKind::Shifted});
    Ht = hs.value;
    dHt = hs.derivative;
    if (config_.uniform_heaviside) {
      H = Ht;
      dH = dHt;
    } else {
      const HeavisideValue hv = smoothed_heaviside(gq, {config_.smoothing.width, HeavisideKind::Standard});
      H = hv.value;
      dH = hv.derivative;
    }
  }
  Weights w;
  w.visc = nu * (1.0 - H) + eps * Ht;
  w.dvisc = -nu * dH + eps * dHt;
  w.mass = eps * Ht;
  w.dmass = eps * dHt;
  w.conv = (1.0 - Ht) + eps * Ht;
  w.dconv = (eps - 1.0) * dHt;
  if (config_.divergence == DivergenceForm::PenalizedB) {
    w.div = w.conv;
    w.ddiv = w.dconv;
  } else {
    w.div = 1.0;
    w.ddiv = 0.0;
  }
  w.force = 1.0 - Ht;
  w.dforce = -dHt;
  w.cost = 1.0 - Ht;
  w.dcost = -dHt;
  return w;
}

Assembler::Local Assembler::eval_velocity(const Vector& Y, int t, int q) const {
  const auto dofs = layout_->local_dofs(t);
  const auto& N = cache_.N(q);
  const auto dN = cache_.dN(t, q);
  const int n1 = layout_->N1;
  Local out{{0.0, 0.0}, {Vec2{}, Vec2{}}};
  for (int k = 0; k < 4; ++k) {
    const double y0 = Y[dofs[k]], y1 = Y[n1 + dofs[k]];
    out.y += Vec2{y0 * N[k], y1 * N[k]};
    out.grad[0] += y0 * dN[k];
    out.grad[1] += y1 * dN[k];
  }
  return out;
}

SparseMatrix Assembler::assemble_A() const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(nt) * 32);
  for (int t = 0; t < nt; ++t) {
    double K[4][4] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      const double wq = cache_.rule()[q].weight * cache_.area(t);
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) K[i][j] += wq * (w.visc * dot(dN[i], dN[j]) + w.mass * N[i] * N[j]);
    }
    const auto dofs = layout_->local_dofs(t);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) trips.emplace_back(c * n1 + dofs[i], c * n1 + dofs[j], K[i][j]);
  }
  return from_triplets(2 * n1, 2 * n1, trips);
}

SparseMatrix Assembler::assemble_B() const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(nt) * 24);
  for (int t = 0; t < nt; ++t) {
    double K[3][2][4] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      const double wq = cache_.rule()[q].weight * cache_.area(t);
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      for (int s = 0; s < 3; ++s)
        for (int j = 0; j < 4; ++j) {
          K[s][0][j] -= wq * w.div * dN[j].x * N[s];
          K[s][1][j] -= wq * w.div * dN[j].y * N[s];
        }
    }
    const auto dofs = layout_->local_dofs(t);
    for (int s = 0; s < 3; ++s)
      for (int d = 0; d < 2; ++d)
        for (int j = 0; j < 4; ++j) trips.emplace_back(dofs[s], d * n1 + dofs[j], K[s][d][j]);
  }
  return from_triplets(layout_->N2, 2 * n1, trips);
}

SparseMatrix Assembler::assemble_C1(const Vector& Y) const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(nt) * 32);
  for (int t = 0; t < nt; ++t) {
    double K[4][4] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      const double wq = 0.5 * cache_.rule()[q].weight * cache_.area(t) * w.conv;
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      const Vec2 u = eval_velocity(Y, t, q).y;
      double udN[4];
      for (int k = 0; k < 4; ++k) udN[k] = dot(u, dN[k]);
      for (int s = 0; s < 4; ++s)
        for (int j = 0; j < 4; ++j) K[s][j] += wq * (udN[j] * N[s] - udN[s] * N[j]);
    }
    const auto dofs = layout_->local_dofs(t);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) trips.emplace_back(c * n1 + dofs[i], c * n1 + dofs[j], K[i][j]);
  }
  return from_triplets(2 * n1, 2 * n1, trips);
}

SparseMatrix Assembler::assemble_C2(const Vector& Y) const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(nt) * 64);
  for (int t = 0; t < nt; ++t) {
    double K[2][4][2][4] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      const double wq = 0.5 * cache_.rule()[q].weight * cache_.area(t) * w.conv;
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      const Local y = eval_velocity(Y, t, q);
      const double yc[2] = {y.y.x, y.y.y};
      for (int c = 0; c < 2; ++c)
        for (int s = 0; s < 4; ++s)
          for (int d = 0; d < 2; ++d) {
            const double dyc = d == 0 ? y.grad[c].x : y.grad[c].y;
            const double dNs = d == 0 ? dN[s].x : dN[s].y;
            for (int j = 0; j < 4; ++j) K[c][s][d][j] += wq * N[j] * (N[s] * dyc - dNs * yc[c]);
          }
    }
    const auto dofs = layout_->local_dofs(t);
    for (int c = 0; c < 2; ++c)
      for (int s = 0; s < 4; ++s)
        for (int d = 0; d < 2; ++d)
          for (int j = 0; j < 4; ++j) trips.emplace_back(c * n1 + dofs[s], d * n1 + dofs[j], K[c][s][d][j]);
  }
  return from_triplets(2 * n1, 2 * n1, trips);
}

Vector Assembler::convection(const Vector& Y) const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Vector out = Vector::Zero(2 * n1);
  for (int t = 0; t < nt; ++t) {
    const auto dofs = layout_->local_dofs(t);
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      const double wq = 0.5 * cache_.rule()[q].weight * cache_.area(t) * w.conv;
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      const Local y = eval_velocity(Y, t, q);
      const double yc[2] = {y.y.x, y.y.y};
      for (int c = 0; c < 2; ++c) {
        const double adv = dot(y.y, y.grad[c]);
        for (int s = 0; s < 4; ++s) out[c * n1 + dofs[s]] += wq * (adv * N[s] - dot(y.y, dN[s]) * yc[c]);
      }
    }
  }
  return out;
}

Vector Assembler::assemble_load() const {
  const int nt = layout_->mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  const Mesh& mesh = layout_->mesh;
  Vector L = Vector::Zero(2 * n1);
  if (config_.force) {
    for (int t = 0; t < nt; ++t) {
      const auto dofs = layout_->local_dofs(t);
      for (int q = 0; q < nq; ++q) {
        const Weights w = weights(t, q);
        const double wq = cache_.rule()[q].weight * cache_.area(t) * w.force;
        const Vec2 f = config_.force(cache_.point(t, q));
        const auto& N = cache_.N(q);
        for (int s = 0; s < 4; ++s) {
          L[dofs[s]] += wq * f.x * N[s];
          L[n1 + dofs[s]] += wq * f.y * N[s];
        }
      }
    }
  }
  if (config_.traction) {
    // Bubble traces vanish on edges; only the P1 functions see the traction.
    const auto gl = gauss_legendre01(4);
    for (const auto& e : mesh.edges) {
      if (std::find(config_.neumann_labels.begin(), config_.neumann_labels.end(), e.label) ==
          config_.neumann_labels.end())
        continue;
      const Vec2 a = mesh.vertices[e.v[0]], b = mesh.vertices[e.v[1]];
      const double len = norm(b - a);
      for (const auto& [s, ws] : gl) {
        const Vec2 psi = config_.traction(a + s * (b - a));
        const double wa = ws * len * (1.0 - s), wb = ws * len * s;
        L[e.v[0]] += wa * psi.x;
        L[n1 + e.v[0]] += wa * psi.y;
        L[e.v[1]] += wb * psi.x;
        L[n1 + e.v[1]] += wb * psi.y;
      }
    }
  }
  return L;
}

SparseMatrix Assembler::assemble_momentum_level_derivative(const Vector& Y, const Vector& P) const {
  const Mesh& mesh = layout_->mesh;
  const int nt = mesh.num_triangles(), nq = cache_.num_points(), n1 = layout_->N1;
  Triplets trips;
  if (geometry_.uses_regions()) return from_triplets(2 * n1, layout_->N3, trips);
  trips.reserve(static_cast<std::size_t>(nt) * 24);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    double K[2][4][3] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      if (w.dvisc == 0.0 && w.dmass == 0.0 && w.dconv == 0.0 && w.ddiv == 0.0 && w.dforce == 0.0) continue;
      const double wq = cache_.rule()[q].weight * cache_.area(t);
      const auto& N = cache_.N(q);
      const auto dN = cache_.dN(t, q);
      const Local y = eval_velocity(Y, t, q);
      const double yc[2] = {y.y.x, y.y.y};
      const double p = P[tri[0]] * N[0] + P[tri[1]] * N[1] + P[tri[2]] * N[2];
      const Vec2 f = config_.force ? config_.force(cache_.point(t, q)) : Vec2{};
      const double fc[2] = {f.x, f.y};
      for (int c = 0; c < 2; ++c) {
        const double adv = dot(y.y, y.grad[c]);
        for (int s = 0; s < 4; ++s) {
          const double dNsc = c == 0 ? dN[s].x : dN[s].y;
          const double val = w.dvisc * dot(y.grad[c], dN[s]) + w.dmass * yc[c] * N[s] +
                             0.5 * w.dconv * (adv * N[s] - dot(y.y, dN[s]) * yc[c]) - w.ddiv * dNsc * p -
                             w.dforce * fc[c] * N[s];
          for (int j = 0; j < 3; ++j) K[c][s][j] += wq * val * N[j];
        }
      }
    }
    const auto dofs = layout_->local_dofs(t);
    for (int c = 0; c < 2; ++c)
      for (int s = 0; s < 4; ++s)
        for (int j = 0; j < 3; ++j)
          if (K[c][s][j] != 0.0) trips.emplace_back(c * n1 + dofs[s], tri[j], K[c][s][j]);
  }
  return from_triplets(2 * n1, layout_->N3, trips);
}

SparseMatrix Assembler::assemble_divergence_level_derivative(const Vector& Y) const {
  const Mesh& mesh = layout_->mesh;
  const int nt = mesh.num_triangles(), nq = cache_.num_points();
  Triplets trips;
  if (geometry_.uses_regions()) return from_triplets(layout_->N2, layout_->N3, trips);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    double K[3][3] = {};
    for (int q = 0; q < nq; ++q) {
      const Weights w = weights(t, q);
      if (w.ddiv == 0.0) continue;
      const double wq = cache_.rule()[q].weight * cache_.area(t);
      const auto& N = cache_.N(q);
      const Local y = eval_velocity(Y, t, q);
      const double div = y.grad[0].x + y.grad[1].y;
      for (int s = 0; s < 3; ++s)
        for (int j = 0; j < 3; ++j) K[s][j] -= wq * w.ddiv * div * N[s] * N[j];
    }
    for (int s = 0; s < 3; ++s)
      for (int j = 0; j < 3; ++j)
        if (K[s][j] != 0.0) trips.emplace_back(tri[s], tri[j], K[s][j]);
  }
  return from_triplets(layout_->N2, layout_->N3, trips);
}

std::pair<SparseMatrix, SparseMatrix> assemble_bilinear(const SpaceLayout& layout, const AssemblyConfig& config,
                                                        const Geometry& geometry) {
  const Assembler as(layout, config, geometry);
  return {as.assemble_A(), as.assemble_B()};
}

std::pair<SparseMatrix, SparseMatrix> assemble_trilinear(const SpaceLayout& layout, const AssemblyConfig& config,
                                                         const Geometry& geometry, const Vector& Y) {
  if (Y.size() != layout.velocity_size()) throw ConfigError("velocity vector has wrong length");
  const Assembler as(layout, config, geometry);
  return {as.assemble_C1(Y), as.assemble_C2(Y)};
}

Vector assemble_load(const SpaceLayout& layout, const AssemblyConfig& config, const Geometry& geometry) {
  return Assembler(layout, config, geometry).assemble_load();
}

// --- norms -------------------------------------------------------------------------------

double compute_norm(const Mesh& mesh, const Vector& velocity, std::span<const int> triangles, NormKind kind) {
  if (triangles.empty()) throw MeshError("compute_norm: empty region");
  const int n1 = mesh.num_vertices() + mesh.num_triangles();
  if (velocity.size() != 2 * n1) throw MeshError("compute_norm: velocity has wrong length");
  const auto rule = triangle_rule(8);
  double sum = 0.0;
  for (int t : triangles) {
    const auto& tri = mesh.triangles[t];
    const auto gl = barycentric_gradients(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    const std::array<int, 4> dofs{tri[0], tri[1], tri[2], mesh.num_vertices() + t};
    const double area = mesh.triangle_area(t);
    double local = 0.0;
    for (const auto& qp : rule) {
      std::array<double, 4> N;
      std::array<Vec2, 4> dN;
      shape_functions(qp.lambda, gl, N, &dN);
      Vec2 y{}, g0{}, g1{};
      for (int k = 0; k < 4; ++k) {
        const double a = velocity[dofs[k]], b = velocity[n1 + dofs[k]];
        y += Vec2{a * N[k], b * N[k]};
        g0 += a * dN[k];
        g1 += b * dN[k];
      }
      double v = 0.0;
      switch (kind) {
        case NormKind::L2: v = dot(y, y); break;
        case NormKind::H1seminorm: v = dot(g0, g0) + dot(g1, g1); break;
        case NormKind::H1: v = dot(y, y) + dot(g0, g0) + dot(g1, g1); break;
        case NormKind::DivL2: {
          const double d = g0.x + g1.y;
          v = d * d;
          break;
        }
      }
      local += qp.weight * v;
    }
    sum += area * local;
  }
  return std::sqrt(sum);
}

double compute_scalar_l2(const Mesh& mesh, const Vector& values, std::span<const int> triangles) {
  if (triangles.empty()) throw MeshError("compute_scalar_l2: empty region");
  if (values.size() != mesh.num_vertices()) throw MeshError("compute_scalar_l2: wrong length");
  double sum = 0.0;
  for (int t : triangles) {
    const auto& tri = mesh.triangles[t];
    const double a = values[tri[0]], b = values[tri[1]], c = values[tri[2]];
    // Exact P1 mass matrix quadratic form.
    sum += mesh.triangle_area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
  }
  return std::sqrt(sum);
}

Vector interpolate_velocity(const Mesh& mesh, const VectorField& f) {
  const int n1 = mesh.num_vertices() + mesh.num_triangles();
  Vector y = Vector::Zero(2 * n1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec2 val = f(mesh.vertices[v]);
    y[v] = val.x;
    y[n1 + v] = val.y;
  }
  return y;
}

void write_coo(std::ostream& out, const SparseMatrix& m) {
  char buf[64];
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      auto res = std::to_chars(buf, buf + sizeof(buf), it.value());
      out << it.row() << ' ' << it.col() << ' ';
      out.write(buf, res.ptr - buf);
      out << '\n';
    }
  }
}

}  // namespace penflow
