#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "penflow/levelset.hpp"
#include "penflow/mesh.hpp"

namespace penflow {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// --- spaces --------------------------------------------------------------------

/// Which boundary labels clamp the velocity.
struct DirichletSpec {
  std::vector<Label> labels{Label::gamma(2), Label::gamma(3), Label::gamma(4)};
  bool obstacles = false;
};

/// Mini element: P1 + cubic bubble velocity, P1 pressure, P1 level field.
///
/// Scalar velocity DOFs are the V vertices followed by the T bubbles (N1 = V + T).
/// A velocity vector is component-blocked: entry c * N1 + s is component c of
/// scalar DOF s. Pressure and level DOFs are the vertices.
struct SpaceLayout {
  Mesh mesh;
  int N1 = 0;
  int N2 = 0;
  int N3 = 0;
  std::vector<char> dirichlet;    // length 2 N1
  std::vector<int> dirichlet_dofs;

  int velocity_size() const { return 2 * N1; }
  int M() const { return 2 * N1 + N2; }
  int N() const { return M() + N3; }
  int bubble(int t) const { return mesh.num_vertices() + t; }
  std::array<int, 4> local_dofs(int t) const {
    const auto& tri = mesh.triangles[t];
    return {tri[0], tri[1], tri[2], bubble(t)};
  }
  bool is_dirichlet(int dof) const { return dirichlet[dof] != 0; }
};

SpaceLayout build_spaces(const Mesh& mesh, const DirichletSpec& dirichlet = {});

// --- quadrature -------------------------------------------------------------------

struct QuadPoint {
  std::array<double, 3> lambda;  // barycentric coordinates
  double weight;                 // fraction of the triangle area; weights sum to 1
};

/// Symmetric 7-point rule for degree <= 5, collapsed Gauss product rules beyond.
std::vector<QuadPoint> triangle_rule(int degree);

/// Gauss-Legendre points and weights on [0, 1].
std::vector<std::array<double, 2>> gauss_legendre01(int n);

// --- configuration ------------------------------------------------------------------

using VectorField = std::function<Vec2(Vec2)>;

enum class DivergenceForm { PenalizedB, PlainB };

struct AssemblyConfig {
  double nu = 1.0;
  double epsilon = 0.025;
  SmoothingParams smoothing{};  // width of both regularized Heavisides (kind ignored)
  int quadrature_order = 5;
  DivergenceForm divergence = DivergenceForm::PenalizedB;
  /// Use the shifted Heaviside in the viscous term as well (off: 1 - H^h as written).
  bool uniform_heaviside = false;
  VectorField traction;  // psi on the Neumann boundary; empty means zero
  VectorField force;     // f; empty means zero
  std::vector<Label> neumann_labels{Label::gamma(1)};

  void validate() const;
};

/// Geometry driving the coefficients: a P1 level field smoothed by the
/// regularized Heavisides, or the exact region tags of the mesh.
struct Geometry {
  std::optional<LevelField> level;

  static Geometry from_level(LevelField g) { return {std::move(g)}; }
  static Geometry from_regions() { return {}; }
  bool uses_regions() const { return !level.has_value(); }
};

// --- assembly ------------------------------------------------------------------------

/// Per-quadrature-point basis data for every triangle.
class ElementCache {
 public:
  ElementCache(const Mesh& mesh, int degree);

  int num_points() const { return static_cast<int>(rule_.size()); }
  const std::vector<QuadPoint>& rule() const { return rule_; }
  /// Shape functions 0..2 (P1) and 3 (bubble) at quadrature point q.
  const std::array<double, 4>& N(int q) const { return N_[q]; }
  /// Gradients of the four shape functions at point q of triangle t.
  std::span<const Vec2, 4> dN(int t, int q) const {
    return std::span<const Vec2, 4>(&dN_[(static_cast<std::size_t>(t) * rule_.size() + q) * 4], 4);
  }
  const std::array<Vec2, 3>& grad_lambda(int t) const { return grad_lambda_[t]; }
  double area(int t) const { return area_[t]; }
  Vec2 point(int t, int q) const;

 private:
  const Mesh* mesh_;
  std::vector<QuadPoint> rule_;
  std::vector<std::array<double, 4>> N_;
  std::vector<std::array<Vec2, 3>> grad_lambda_;
  std::vector<double> area_;
  std::vector<Vec2> dN_;
};

/// Form weights at a point and their derivatives with respect to g.
struct Weights {
  double visc, mass, conv, div, force, cost;
  double dvisc, dmass, dconv, ddiv, dforce, dcost;
};

/// Shared machinery for all forms on one layout.
class Assembler {
 public:
  Assembler(const SpaceLayout& layout, const AssemblyConfig& config, Geometry geometry);

  const SpaceLayout& layout() const { return *layout_; }
  const AssemblyConfig& config() const { return config_; }
  const ElementCache& cache() const { return cache_; }
  const Geometry& geometry() const { return geometry_; }

  Weights weights(int t, int q) const;

  /// A (2N1 x 2N1) and B (N2 x 2N1).
  SparseMatrix assemble_A() const;
  SparseMatrix assemble_B() const;
  /// C1(Y): w^T C1 v = c~(y, v, w). C2(Y): w^T C2 u = c~(u, y, w).
  SparseMatrix assemble_C1(const Vector& Y) const;
  SparseMatrix assemble_C2(const Vector& Y) const;
  /// Load vector <F_h, phi_i>.
  Vector assemble_load() const;
  /// Right-hand side convection vector C1(Y) Y.
  Vector convection(const Vector& Y) const;

  /// Derivatives with respect to the level DOFs gamma_j:
  /// momentum block A' + C~' + BT' - L' (2N1 x N3) and B' (N2 x N3).
  SparseMatrix assemble_momentum_level_derivative(const Vector& Y, const Vector& P) const;
  SparseMatrix assemble_divergence_level_derivative(const Vector& Y) const;

  /// Velocity value and gradient rows (d/dx1, d/dx2) of component c at point q of t.
  struct Local {
    Vec2 y;
    std::array<Vec2, 2> grad;  // grad[c] = gradient of y_c
  };
  Local eval_velocity(const Vector& Y, int t, int q) const;

 private:
  const SpaceLayout* layout_;
  AssemblyConfig config_;
  Geometry geometry_;
  ElementCache cache_;
};

/// Convenience wrappers.
std::pair<SparseMatrix, SparseMatrix> assemble_bilinear(const SpaceLayout& layout, const AssemblyConfig& config,
                                                        const Geometry& geometry);
std::pair<SparseMatrix, SparseMatrix> assemble_trilinear(const SpaceLayout& layout, const AssemblyConfig& config,
                                                         const Geometry& geometry, const Vector& Y);
Vector assemble_load(const SpaceLayout& layout, const AssemblyConfig& config, const Geometry& geometry);

// --- norms ---------------------------------------------------------------------------

enum class NormKind { L2, H1seminorm, H1, DivL2 };

/// Norm of a mini-element velocity field (2 (V + T) entries) over a triangle subset.
double compute_norm(const Mesh& mesh, const Vector& velocity, std::span<const int> triangles, NormKind kind);
/// L2 norm of a P1 scalar (one value per vertex) over a triangle subset.
double compute_scalar_l2(const Mesh& mesh, const Vector& values, std::span<const int> triangles);

/// Velocity vector interpolating a field at the vertices (bubble coefficients zero).
Vector interpolate_velocity(const Mesh& mesh, const VectorField& f);

/// Coordinate text export "row col value", 0-based, one entry per line.
void write_coo(std::ostream& out, const SparseMatrix& m);

}  // namespace penflow
