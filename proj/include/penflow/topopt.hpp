#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "penflow/fem.hpp"
#include "penflow/levelset.hpp"
#include "penflow/ns_solver.hpp"

namespace penflow {

/// X = (Y, P, G) with Y of length 2 N1, P of length N2 and G of length N3.
struct OptVector {
  Vector Y, P, G;

  Vector stacked() const;
  static OptVector split(const SpaceLayout& layout, const Vector& X);
};

enum class CostKind { DissipatedEnergy, Tracking };

struct CostSpec {
  CostKind kind = CostKind::DissipatedEnergy;
  std::optional<Vector> target;  // y_d on the same layout (Tracking)
};

struct OptConfig {
  double rho = 0.8;
  /// First trial step; 0 selects 1 / |grad J_rho(X0)|_inf.
  double initial_step = 0.0;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
  /// Trial step = growth * previous accepted step; 1 keeps the base step fixed.
  double step_growth = 2.0;
  int max_iterations = 200;
  int snapshot_every = 25;
  /// Stop once |J_rho^k - J_rho^{k-1}| <= tol (1 + |J_rho^k|) for `stagnation_window` consecutive steps (0 disables).
  double stagnation_tol = 1e-3;
  int stagnation_window = 50;

  void validate() const;
};

struct IterateRecord {
  int iteration = 0;
  double J_h = 0.0;
  double J_rho = 0.0;
  double C_inf = 0.0;
  double BY_inf = 0.0;  // |B(G) Y|_inf, the divergence block of C
  double step = 0.0;    // accepted step leading to this iterate (0 at start or on a stall)
  int backtracks = 0;
  bool stalled = false;
  double grad_norm_sq = 0.0;  // squared norm of the search direction taken from this iterate
};

struct Snapshot {
  int iteration = 0;
  LevelField G;
  AdmissibilityReport admissibility;
};

struct OptResult {
  std::vector<IterateRecord> history;
  OptVector X;
  std::vector<Snapshot> snapshots;
};

/// C(X) = (A Y + C1(Y) Y + B^T P - L ; B Y) assembled at G, Dirichlet rows Y_i.
Vector constraint_residual(const OptVector& X, const SpaceLayout& layout, const AssemblyConfig& config);

/// jac C(X) (M x N): [A + C1 + C2, B^T, jac13 ; B, 0, B'] with identity
/// Dirichlet rows in the velocity columns and zeros in the G columns.
SparseMatrix constraint_jacobian(const OptVector& X, const SpaceLayout& layout, const AssemblyConfig& config);

/// J_h and its gradient (length N, zero pressure block).
std::pair<double, Vector> cost_and_gradient(const OptVector& X, const CostSpec& spec, const SpaceLayout& layout,
                                            const AssemblyConfig& config);
double cost_value(const OptVector& X, const CostSpec& spec, const SpaceLayout& layout, const AssemblyConfig& config);

/// J_rho = J_h + rho/2 |C|^2 and grad J_h + rho jac C^T C.
std::pair<double, Vector> penalized_value_and_gradient(const OptVector& X, const CostSpec& spec, double rho,
                                                       const SpaceLayout& layout, const AssemblyConfig& config);

/// Navier-Stokes state at fixed G (Stokes start, Newton) packed as an OptVector.
OptVector initial_state(const LevelField& G, const SpaceLayout& layout, const AssemblyConfig& config,
                        const NewtonOptions& newton = {});

/// Armijo steepest descent on J_rho from the Navier-Stokes state at G0.
/// The search direction is the gradient with its Dirichlet velocity entries removed.
OptResult optimize(const LevelField& initial_G, const CostSpec& spec, const OptConfig& opt, const SpaceLayout& layout,
                   const AssemblyConfig& config, const NewtonOptions& newton = {});

/// "iteration,J_h,J_rho,C_inf,BY_inf,step,backtracks,stalled".
void write_history_csv(std::ostream& out, const std::vector<IterateRecord>& history);

}  // namespace penflow
