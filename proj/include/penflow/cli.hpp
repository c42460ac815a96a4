#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "penflow/error_study.hpp"
#include "penflow/fem.hpp"
#include "penflow/ns_solver.hpp"
#include "penflow/topopt.hpp"

namespace penflow::cli {

/// Sum of c * x^px * y^py.
struct Polynomial {
  struct Term {
    double c = 0.0;
    int px = 0;
    int py = 0;
  };
  std::vector<Term> terms;

  double operator()(Vec2 p) const;
  bool empty() const { return terms.empty(); }
};

struct DiskSpec {
  Vec2 center;
  double radius = 0.0;
};

struct EllipseSpec {
  Vec2 center;
  double a = 0.0;
  double b = 0.0;
};

/// Obstacles described by a union of disks or a single ellipse.
struct ShapeSpec {
  std::vector<DiskSpec> disks;
  std::optional<EllipseSpec> ellipse;
  int ellipse_segments = 128;

  bool empty() const { return disks.empty() && !ellipse; }
  LevelFunction level() const;
  std::vector<ObstacleShape> mesh_obstacles() const;
};

struct RunConfig {
  // [mesh]
  double target_edge = 0.04;
  bool conform = true;
  int arc_segments = 64;
  // [physics]
  double nu = 1.0;
  Polynomial traction_x, traction_y, force_x, force_y;
  // [regularization]
  double epsilon = 0.025;
  double smoothing_width = 0.0;  // 0: mean edge length of the mesh
  DivergenceForm divergence = DivergenceForm::PlainB;
  bool uniform_heaviside = false;
  int quadrature_order = 5;
  // [geometry]
  ShapeSpec obstacles;
  // [newton]
  NewtonOptions newton;
  // [study]
  SweepKind study_kind = SweepKind::EpsilonSweep;
  std::vector<double> study_values{0.5, 0.1, 0.05, 0.025};
  double study_edge = 0.017;
  double study_smoothing = 0.001;  // EpsilonSweep width; MeshSweep: factor times the mean edge when 0
  double study_smoothing_per_edge = 1.0;
  ReferenceMode study_reference = ReferenceMode::SharedMesh;
  std::optional<double> study_reference_edge;
  // [optimize]
  OptConfig opt;
  CostKind cost = CostKind::DissipatedEnergy;
  ShapeSpec target;  // tracking target geometry

  void validate() const;
  AssemblyConfig assembly() const;
};

RunConfig preset(std::string_view name);

/// Overlay `key = value` settings with [section] headers onto `config`.
void apply_ini(RunConfig& config, std::istream& in);

/// Writes files atomically into a directory and records their SHA-256.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);

  void write(const std::string& name, const std::string& content);
  /// Writes manifest.sha256 ("<hex>  <name>" per artifact, sorted by name).
  void finish();
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string sha256_hex(std::string_view data);

/// True when every file listed in dir/manifest.sha256 exists with the recorded hash.
bool verify_manifest(const std::filesystem::path& dir);

enum ExitCode { Ok = 0, ConfigFailure = 2, SolverFailure = 3, IoFailure = 4 };

/// Runs one command; errors are reported on `log` and mapped to exit codes.
int run(std::string_view command, const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace penflow::cli
