#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "penflow/fem.hpp"
#include "penflow/levelset.hpp"
#include "penflow/mesh.hpp"
#include "penflow/ns_solver.hpp"

namespace penflow {

struct ErrorRecord {
  double epsilon = 0.0;
  double mesh_size = 0.0;  // mean edge length of the penalized mesh
  double smoothing_width = 0.0;
  int triangles = 0;
  double l2_rel = 0.0;
  double h1_rel = 0.0;
  double p_l2_rel = 0.0;
  double div_norm_omega = 0.0;  // |div y_eps|_{0, omega}
  double reference_div_norm = 0.0;
  int newton_iters = 0;
  int reference_iters = 0;
};

enum class SweepKind { EpsilonSweep, MeshSweep };

/// SharedMesh: reference and penalized solutions live on the same conforming
/// mesh (exact restriction). FineMesh: one reference on a finer conforming
/// mesh; penalized solutions are evaluated pointwise on it.
enum class ReferenceMode { SharedMesh, FineMesh };

struct StudyConfig {
  /// Outer boundary and obstacles; target_edge is the mesh size of an EpsilonSweep.
  DomainSpec domain;
  LevelFunction level;  // g > 0 inside the obstacles
  AssemblyConfig base;  // epsilon (MeshSweep) and the smoothing width (EpsilonSweep) come from here
  NewtonOptions newton;
  ReferenceMode reference = ReferenceMode::SharedMesh;
  /// FineMesh reference edge; defaults to half the smallest swept edge.
  std::optional<double> reference_edge;
  /// MeshSweep: smoothing width = this factor times the mean edge.
  double smoothing_per_edge = 1.0;
};

/// One record per value (epsilon or target edge), in input order.
std::vector<ErrorRecord> run_sweep(SweepKind kind, const std::vector<double>& values, const StudyConfig& config);

/// Least-squares slope of y on x.
double regression_slope(const std::vector<std::pair<double, double>>& points);

/// log10-log10 slope of the chosen error column against epsilon or mesh size.
double sweep_slope(const std::vector<ErrorRecord>& records, SweepKind kind, bool h1);

void write_sweep_csv(std::ostream& out, const std::vector<ErrorRecord>& records);
/// Log-log scatter of the L2 and H1 errors with fitted lines and slopes.
void write_sweep_svg(std::ostream& out, const std::vector<ErrorRecord>& records, SweepKind kind);

/// Penalized solve on a D-mesh (Stokes start, then Newton).
struct PenalizedSolution {
  SpaceLayout layout;
  MixedState state;
  NewtonReport report;
};
PenalizedSolution solve_penalized(const Mesh& mesh, const AssemblyConfig& config, const LevelField& g,
                                  const NewtonOptions& newton = {});

/// Restriction of a D-mesh velocity (or pressure) to a submesh of it.
Vector restrict_velocity(const Submesh& sub, int parent_vertices, int parent_n1, const Vector& Y);
Vector restrict_pressure(const Submesh& sub, const Vector& P);

}  // namespace penflow
