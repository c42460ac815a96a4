#pragma once

#include <iosfwd>
#include <vector>

#include "penflow/errors.hpp"
#include "penflow/fem.hpp"

namespace penflow {

struct MixedState {
  Vector Y;                         // 2 N1 velocity
  Vector P;                         // N2 pressure
  std::vector<double> multipliers;  // one per obstacle loop (reference solver only)
};

struct NewtonOptions {
  double tolerance = 1e-10;  // relative to 1 + |L|_inf
  int max_iter = 20;
  bool line_search = false;
  /// Replace the divergence row of pressure DOF `pin_dof` by p = 0.
  bool pin_pressure = false;
  int pin_dof = 0;
};

/// The discrete Navier-Stokes system on one layout and geometry.
///
/// Residual R(Y, P) = (A Y + C1(Y) Y + B^T P - L ; B Y), with Dirichlet
/// momentum rows replaced by Y_i (identity row, zero load).
class NavierStokesSystem {
 public:
  NavierStokesSystem(const SpaceLayout& layout, const AssemblyConfig& config, Geometry geometry,
                     NewtonOptions options = {});

  const Assembler& assembler() const { return assembler_; }
  const SparseMatrix& A() const { return A_; }
  const SparseMatrix& B() const { return B_; }
  const Vector& load() const { return L_; }
  const NewtonOptions& options() const { return options_; }
  double tolerance() const;

  Vector residual(const Vector& Y, const Vector& P, bool with_convection = true) const;
  /// [[A + C1 + C2, B^T], [B, 0]] with identity Dirichlet rows; Stokes when `with_convection` is false.
  SparseMatrix jacobian(const Vector& Y, bool with_convection) const;

 private:
  const SpaceLayout* layout_;
  Assembler assembler_;
  NewtonOptions options_;
  SparseMatrix A_, B_;
  Vector L_;
};

/// Appends the rows/columns of extra equality constraints K (k x 2N1) to a
/// saddle matrix of size M.
SparseMatrix border(const SparseMatrix& saddle, const SparseMatrix& K);

MixedState solve_stokes(const SpaceLayout& layout, const AssemblyConfig& config, const Geometry& geometry,
                        const NewtonOptions& options = {});

std::pair<MixedState, NewtonReport> solve_navier_stokes(const SpaceLayout& layout, const AssemblyConfig& config,
                                                        const Geometry& geometry, const MixedState& init,
                                                        const NewtonOptions& options = {});

/// Flux rows: K(i, :) Y = integral over the loop Obstacle(i + 1) of y . n.
SparseMatrix flux_constraint_rows(const SpaceLayout& layout, const std::vector<Label>& loops);

/// Body-fitted problem on the fluid mesh with one flux multiplier per obstacle
/// loop, Stokes-initialized Newton on the bordered system.
std::pair<MixedState, NewtonReport> solve_reference_flux_constrained(const SpaceLayout& fluid_layout,
                                                                     const AssemblyConfig& config,
                                                                     const NewtonOptions& options = {});

/// CSV "block,index,value" with blocks u1, u2 (N1 each), p (N2), l (multipliers).
void write_state_csv(std::ostream& out, const SpaceLayout& layout, const MixedState& state);
MixedState read_state_csv(std::istream& in, const SpaceLayout& layout);

void write_report_csv(std::ostream& out, const NewtonReport& report);

}  // namespace penflow
