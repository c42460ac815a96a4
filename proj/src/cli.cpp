#include "penflow/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "penflow/errors.hpp"
#include "penflow/levelset.hpp"
#include "penflow/mesh.hpp"
#include "penflow/vtk.hpp"

namespace penflow::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double parse_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(field + ": expected a number, got '" + text + "'");
  return v;
}

int parse_int(const std::string& field, const std::string& text) {
  int v = 0;
  const std::string t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_numbers(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& w : words(text)) out.push_back(parse_double(field, w));
  return out;
}

/// "c px py; c px py; ..."
Polynomial parse_polynomial(const std::string& field, const std::string& text) {
  Polynomial p;
  for (const auto& term : split(text, ';')) {
    const auto w = words(term);
    if (w.size() != 3) throw ConfigError(field + ": each term needs 'coefficient px py', got '" + term + "'");
    Polynomial::Term t{parse_double(field, w[0]), parse_int(field, w[1]), parse_int(field, w[2])};
    if (t.px < 0 || t.py < 0) throw ConfigError(field + ": exponents must be >= 0");
    p.terms.push_back(t);
  }
  return p;
}

/// "x y r; x y r; ..."
std::vector<DiskSpec> parse_disks(const std::string& field, const std::string& text) {
  std::vector<DiskSpec> out;
  for (const auto& item : split(text, ';')) {
    const auto v = parse_numbers(field, item);
    if (v.size() != 3) throw ConfigError(field + ": each disk needs 'x y r', got '" + item + "'");
    out.push_back({{v[0], v[1]}, v[2]});
  }
  return out;
}

std::optional<EllipseSpec> parse_ellipse(const std::string& field, const std::string& text) {
  const auto v = parse_numbers(field, text);
  if (v.empty()) return std::nullopt;
  if (v.size() != 4) throw ConfigError(field + ": expected 'cx cy a b'");
  return EllipseSpec{{v[0], v[1]}, v[2], v[3]};
}

template <typename E>
E parse_enum(const std::string& field, const std::string& text, const std::map<std::string, E>& names) {
  const auto it = names.find(trim(text));
  if (it != names.end()) return it->second;
  std::string choices;
  for (const auto& [k, v] : names) choices += (choices.empty() ? "" : "|") + k;
  throw ConfigError(field + ": expected one of " + choices + ", got '" + text + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& field, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mesh.target_edge", [](RunConfig& c, auto& f, auto& v) { c.target_edge = parse_double(f, v); }},
      {"mesh.conform", [](RunConfig& c, auto& f, auto& v) { c.conform = parse_bool(f, v); }},
      {"mesh.arc_segments", [](RunConfig& c, auto& f, auto& v) { c.arc_segments = parse_int(f, v); }},
      {"physics.nu", [](RunConfig& c, auto& f, auto& v) { c.nu = parse_double(f, v); }},
      {"physics.traction_x", [](RunConfig& c, auto& f, auto& v) { c.traction_x = parse_polynomial(f, v); }},
      {"physics.traction_y", [](RunConfig& c, auto& f, auto& v) { c.traction_y = parse_polynomial(f, v); }},
      {"physics.force_x", [](RunConfig& c, auto& f, auto& v) { c.force_x = parse_polynomial(f, v); }},
      {"physics.force_y", [](RunConfig& c, auto& f, auto& v) { c.force_y = parse_polynomial(f, v); }},
      {"regularization.epsilon", [](RunConfig& c, auto& f, auto& v) { c.epsilon = parse_double(f, v); }},
      {"regularization.smoothing_width",
       [](RunConfig& c, auto& f, auto& v) { c.smoothing_width = parse_double(f, v); }},
      {"regularization.divergence",
       [](RunConfig& c, auto& f, auto& v) {
         c.divergence = parse_enum<DivergenceForm>(
             f, v, {{"plain", DivergenceForm::PlainB}, {"penalized", DivergenceForm::PenalizedB}});
       }},
      {"regularization.uniform_heaviside",
       [](RunConfig& c, auto& f, auto& v) { c.uniform_heaviside = parse_bool(f, v); }},
      {"regularization.quadrature_order",
       [](RunConfig& c, auto& f, auto& v) { c.quadrature_order = parse_int(f, v); }},
      {"geometry.disks", [](RunConfig& c, auto& f, auto& v) { c.obstacles.disks = parse_disks(f, v); }},
      {"geometry.ellipse", [](RunConfig& c, auto& f, auto& v) { c.obstacles.ellipse = parse_ellipse(f, v); }},
      {"geometry.ellipse_segments",
       [](RunConfig& c, auto& f, auto& v) { c.obstacles.ellipse_segments = parse_int(f, v); }},
      {"newton.tolerance", [](RunConfig& c, auto& f, auto& v) { c.newton.tolerance = parse_double(f, v); }},
      {"newton.max_iter", [](RunConfig& c, auto& f, auto& v) { c.newton.max_iter = parse_int(f, v); }},
      {"newton.line_search", [](RunConfig& c, auto& f, auto& v) { c.newton.line_search = parse_bool(f, v); }},
      {"newton.pin_pressure", [](RunConfig& c, auto& f, auto& v) { c.newton.pin_pressure = parse_bool(f, v); }},
      {"newton.pin_dof", [](RunConfig& c, auto& f, auto& v) { c.newton.pin_dof = parse_int(f, v); }},
      {"study.kind",
       [](RunConfig& c, auto& f, auto& v) {
         c.study_kind =
             parse_enum<SweepKind>(f, v, {{"epsilon", SweepKind::EpsilonSweep}, {"mesh", SweepKind::MeshSweep}});
       }},
      {"study.values", [](RunConfig& c, auto& f, auto& v) { c.study_values = parse_numbers(f, v); }},
      {"study.target_edge", [](RunConfig& c, auto& f, auto& v) { c.study_edge = parse_double(f, v); }},
      {"study.smoothing_width", [](RunConfig& c, auto& f, auto& v) { c.study_smoothing = parse_double(f, v); }},
      {"study.smoothing_per_edge",
       [](RunConfig& c, auto& f, auto& v) { c.study_smoothing_per_edge = parse_double(f, v); }},
      {"study.reference",
       [](RunConfig& c, auto& f, auto& v) {
         c.study_reference = parse_enum<ReferenceMode>(
             f, v, {{"shared", ReferenceMode::SharedMesh}, {"fine", ReferenceMode::FineMesh}});
       }},
      {"study.reference_edge",
       [](RunConfig& c, auto& f, auto& v) { c.study_reference_edge = parse_double(f, v); }},
      {"optimize.rho", [](RunConfig& c, auto& f, auto& v) { c.opt.rho = parse_double(f, v); }},
      {"optimize.iterations", [](RunConfig& c, auto& f, auto& v) { c.opt.max_iterations = parse_int(f, v); }},
      {"optimize.initial_step", [](RunConfig& c, auto& f, auto& v) { c.opt.initial_step = parse_double(f, v); }},
      {"optimize.armijo_c", [](RunConfig& c, auto& f, auto& v) { c.opt.armijo_c = parse_double(f, v); }},
      {"optimize.backtrack_factor",
       [](RunConfig& c, auto& f, auto& v) { c.opt.backtrack_factor = parse_double(f, v); }},
      {"optimize.max_backtracks", [](RunConfig& c, auto& f, auto& v) { c.opt.max_backtracks = parse_int(f, v); }},
      {"optimize.step_growth", [](RunConfig& c, auto& f, auto& v) { c.opt.step_growth = parse_double(f, v); }},
      {"optimize.snapshot_every", [](RunConfig& c, auto& f, auto& v) { c.opt.snapshot_every = parse_int(f, v); }},
      {"optimize.stagnation_tol", [](RunConfig& c, auto& f, auto& v) { c.opt.stagnation_tol = parse_double(f, v); }},
      {"optimize.stagnation_window",
       [](RunConfig& c, auto& f, auto& v) { c.opt.stagnation_window = parse_int(f, v); }},
      {"optimize.cost",
       [](RunConfig& c, auto& f, auto& v) {
         c.cost = parse_enum<CostKind>(f, v, {{"energy", CostKind::DissipatedEnergy}, {"tracking", CostKind::Tracking}});
       }},
      {"target.disks", [](RunConfig& c, auto& f, auto& v) { c.target.disks = parse_disks(f, v); }},
      {"target.ellipse", [](RunConfig& c, auto& f, auto& v) { c.target.ellipse = parse_ellipse(f, v); }},
  };
  return table;
}

VectorField vector_field(const Polynomial& x, const Polynomial& y) {
  if (x.empty() && y.empty()) return nullptr;
  return [x, y](Vec2 p) { return Vec2{x(p), y(p)}; };
}

// --- output helpers ---------------------------------------------------------------

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream out;
  f(out);
  return out.str();
}

std::string mesh_text(const Mesh& m) {
  return to_text([&](std::ostream& o) { write_mesh(o, m); });
}

class Diagnostics {
 public:
  void add(const std::string& name, double value) { rows_.emplace_back(name, fmt(value)); }
  void add(const std::string& name, int value) { rows_.emplace_back(name, std::to_string(value)); }
  std::string text() const {
    std::string s = "quantity,value\n";
    for (const auto& [k, v] : rows_) s += k + ',' + v + '\n';
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

Mesh build_mesh(const RunConfig& c, double edge, bool conform, const ShapeSpec& shapes) {
  DomainSpec spec = channel_domain(edge, conform ? shapes.mesh_obstacles() : std::vector<ObstacleShape>{},
                                   c.arc_segments);
  return generate_mesh(spec, conform);
}

AssemblyConfig assembly_for(const RunConfig& c, const Mesh& mesh) {
  AssemblyConfig a = c.assembly();
  if (a.smoothing.width == 0.0) a.smoothing.width = mean_edge_length(mesh);
  return a;
}

std::vector<double> flat(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// --- commands ---------------------------------------------------------------------

void solve_reference_cmd(const RunConfig& c, ArtifactWriter& w, std::ostream& log) {
  if (c.obstacles.empty()) throw ConfigError("geometry: solve-reference needs at least one obstacle");
  const Mesh mesh = build_mesh(c, c.target_edge, true, c.obstacles);
  const Submesh fluid = extract_submesh(mesh, Region::Fluid);
  const SpaceLayout layout = build_spaces(fluid.mesh);
  const AssemblyConfig a = assembly_for(c, mesh);
  const auto [state, report] = solve_reference_flux_constrained(layout, a, c.newton);
  log << "solve-reference: " << fluid.mesh.num_triangles() << " fluid triangles, " << report.iterations
      << " Newton iterations\n";

  Diagnostics d;
  d.add("fluid_triangles", fluid.mesh.num_triangles());
  d.add("fluid_vertices", fluid.mesh.num_vertices());
  d.add("newton_iterations", report.iterations);
  d.add("final_residual", report.residuals.empty() ? 0.0 : report.residuals.back());
  const auto y = flat(state.Y);
  for (const Label l : fluid.mesh.labels())
    if (l.is_obstacle() || l == Label::gamma(1)) d.add("flux_" + l.name(), boundary_flux(fluid.mesh, y, l));
  for (std::size_t i = 0; i < state.multipliers.size(); ++i)
    d.add("multiplier_" + std::to_string(i + 1), state.multipliers[i]);
  d.add("div_norm_omega", compute_norm(fluid.mesh, state.Y, all_triangles(fluid.mesh), NormKind::DivL2));

  w.write("fluid_mesh.txt", mesh_text(fluid.mesh));
  w.write("reference_state.csv", to_text([&](std::ostream& o) { write_state_csv(o, layout, state); }));
  w.write("reference_newton.csv", to_text([&](std::ostream& o) { write_report_csv(o, report); }));
  w.write("reference.vtk", to_text([&](std::ostream& o) {
            write_vtk(o, fluid.mesh, {velocity_field(fluid.mesh, state.Y), scalar_field("pressure", state.P)},
                      "penflow reference solution");
          }));
  w.write("diagnostics.csv", d.text());
}

void solve_penalized_cmd(const RunConfig& c, ArtifactWriter& w, std::ostream& log) {
  if (c.obstacles.empty()) throw ConfigError("geometry: solve-penalized needs at least one obstacle");
  const Mesh mesh = build_mesh(c, c.target_edge, c.conform, c.obstacles);
  const AssemblyConfig a = assembly_for(c, mesh);
  const LevelField g = LevelField::interpolate(mesh, c.obstacles.level());
  const PenalizedSolution s = solve_penalized(mesh, a, g, c.newton);
  log << "solve-penalized: " << mesh.num_triangles() << " triangles, " << s.report.iterations
      << " Newton iterations\n";

  Diagnostics d;
  d.add("triangles", mesh.num_triangles());
  d.add("vertices", mesh.num_vertices());
  d.add("newton_iterations", s.report.iterations);
  d.add("final_residual", s.report.residuals.empty() ? 0.0 : s.report.residuals.back());
  d.add("smoothing_width", a.smoothing.width);
  const auto y = flat(s.state.Y);
  d.add("flux_Gamma1", boundary_flux(mesh, y, Label::gamma(1)));
  d.add("div_norm_D", compute_norm(mesh, s.state.Y, all_triangles(mesh), NormKind::DivL2));
  if (c.conform) {
    for (const Label l : mesh.labels())
      if (l.is_obstacle()) d.add("flux_" + l.name(), boundary_flux(mesh, y, l));
    d.add("div_norm_omega", compute_norm(mesh, s.state.Y, triangles_in(mesh, Region::Fluid), NormKind::DivL2));
  }

  w.write("mesh.txt", mesh_text(mesh));
  w.write("level.csv", to_text([&](std::ostream& o) { write_level_csv(o, g); }));
  w.write("penalized_state.csv", to_text([&](std::ostream& o) { write_state_csv(o, s.layout, s.state); }));
  w.write("penalized_newton.csv", to_text([&](std::ostream& o) { write_report_csv(o, s.report); }));
  w.write("penalized.vtk", to_text([&](std::ostream& o) {
            write_vtk(o, mesh,
                      {velocity_field(mesh, s.state.Y), scalar_field("pressure", s.state.P),
                       scalar_field("g", g.values)},
                      "penflow penalized solution");
          }));
  w.write("diagnostics.csv", d.text());
}

void error_study_cmd(const RunConfig& c, ArtifactWriter& w, std::ostream& log) {
  if (c.obstacles.empty()) throw ConfigError("geometry: error-study needs at least one obstacle");
  StudyConfig sc;
  sc.domain = channel_domain(c.study_edge, c.obstacles.mesh_obstacles(), c.arc_segments);
  sc.level = c.obstacles.level();
  sc.base = c.assembly();
  sc.newton = c.newton;
  sc.reference = c.study_reference;
  sc.reference_edge = c.study_reference_edge;
  sc.smoothing_per_edge = c.study_smoothing_per_edge;
  if (c.study_kind == SweepKind::EpsilonSweep) {
    if (!(c.study_smoothing > 0.0)) throw ConfigError("study.smoothing_width: must be > 0 for an epsilon sweep");
    sc.base.smoothing.width = c.study_smoothing;
  }
  const auto records = run_sweep(c.study_kind, c.study_values, sc);
  const double l2 = sweep_slope(records, c.study_kind, false);
  const double h1 = sweep_slope(records, c.study_kind, true);
  log << "error-study: L2 slope " << fmt(l2) << ", H1 slope " << fmt(h1) << '\n';
  w.write("sweep.csv", to_text([&](std::ostream& o) { write_sweep_csv(o, records); }));
  w.write("sweep.svg", to_text([&](std::ostream& o) { write_sweep_svg(o, records, c.study_kind); }));
  w.write("slopes.csv", "kind,l2_slope,h1_slope\n" +
                            std::string(c.study_kind == SweepKind::EpsilonSweep ? "epsilon" : "mesh") + ',' +
                            fmt(l2) + ',' + fmt(h1) + '\n');
}

void optimize_cmd(const RunConfig& c, ArtifactWriter& w, std::ostream& log) {
  if (c.obstacles.empty()) throw ConfigError("geometry: optimize needs an initial obstacle");
  const Mesh mesh = build_mesh(c, c.target_edge, false, c.obstacles);
  const SpaceLayout layout = build_spaces(mesh);
  const AssemblyConfig a = assembly_for(c, mesh);
  CostSpec spec{c.cost, std::nullopt};
  if (c.cost == CostKind::Tracking) {
    if (c.target.empty()) throw ConfigError("target: tracking cost needs a target geometry");
    spec.target = initial_state(LevelField::interpolate(mesh, c.target.level()), layout, a, c.newton).Y;
  }
  const LevelField G0 = LevelField::interpolate(mesh, c.obstacles.level());
  const OptResult r = optimize(G0, spec, c.opt, layout, a, c.newton);
  log << "optimize: J_h " << fmt(r.history.front().J_h) << " -> " << fmt(r.history.back().J_h) << " in "
      << r.history.back().iteration << " iterations\n";

  w.write("mesh.txt", mesh_text(mesh));
  w.write("history.csv", to_text([&](std::ostream& o) { write_history_csv(o, r.history); }));
  std::string adm = "iteration,boundary_sign_ok,obstacle_inside,obstacle_triangles,zero_set_distance,"
                    "min_gradient_near_zero,violations\n";
  for (const Snapshot& s : r.snapshots) {
    std::ostringstream tag;
    tag << std::setw(6) << std::setfill('0') << s.iteration;
    w.write("snapshots/level_" + tag.str() + ".csv", to_text([&](std::ostream& o) { write_level_csv(o, s.G); }));
    w.write("snapshots/level_" + tag.str() + ".vtk",
            to_text([&](std::ostream& o) { write_vtk(o, mesh, {scalar_field("g", s.G.values)}, "penflow level"); }));
    const auto& q = s.admissibility;
    adm += std::to_string(s.iteration) + ',' + (q.boundary_sign_ok ? "1" : "0") + ',' +
           (q.obstacle_inside ? "1" : "0") + ',' + std::to_string(q.obstacle_triangles) + ',' +
           fmt(q.zero_set_distance) + ',' + fmt(q.min_gradient_near_zero) + ',' +
           std::to_string(q.violations.size()) + '\n';
  }
  w.write("snapshots.csv", adm);
  const MixedState final_state{r.X.Y, r.X.P, {}};
  w.write("final_state.csv", to_text([&](std::ostream& o) { write_state_csv(o, layout, final_state); }));
  w.write("final_level.csv", to_text([&](std::ostream& o) { write_level_csv(o, LevelField{flat(r.X.G)}); }));
  w.write("final.vtk", to_text([&](std::ostream& o) {
            write_vtk(o, mesh,
                      {velocity_field(mesh, r.X.Y), scalar_field("pressure", r.X.P), scalar_field("g", r.X.G)},
                      "penflow optimized state");
          }));
}

}  // namespace

// --- configuration ------------------------------------------------------------------

double Polynomial::operator()(Vec2 p) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.c * std::pow(p.x, t.px) * std::pow(p.y, t.py);
  return s;
}

LevelFunction ShapeSpec::level() const {
  if (ellipse) return ellipse_level(ellipse->center, ellipse->a, ellipse->b);
  std::vector<Vec2> centers;
  std::vector<double> radii;
  for (const auto& d : disks) {
    centers.push_back(d.center);
    radii.push_back(d.radius);
  }
  return compose_disks(std::move(centers), std::move(radii));
}

std::vector<ObstacleShape> ShapeSpec::mesh_obstacles() const {
  std::vector<ObstacleShape> out;
  if (ellipse) {
    out.push_back(ellipse_polygon(ellipse->center, ellipse->a, ellipse->b, ellipse_segments));
    return out;
  }
  for (const auto& d : disks) out.push_back(Disk{d.center, d.radius});
  return out;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(target_edge > 0.0, "mesh.target_edge: must be > 0");
  require(arc_segments >= 3, "mesh.arc_segments: must be >= 3");
  require(nu > 0.0, "physics.nu: must be > 0");
  require(epsilon >= 0.0, "regularization.epsilon: must be >= 0");
  require(smoothing_width >= 0.0, "regularization.smoothing_width: must be >= 0");
  require(quadrature_order >= 5, "regularization.quadrature_order: must be >= 5");
  for (const auto& d : obstacles.disks) require(d.radius > 0.0, "geometry.disks: radius must be > 0");
  for (const auto& d : target.disks) require(d.radius > 0.0, "target.disks: radius must be > 0");
  if (obstacles.ellipse) require(obstacles.ellipse->a > 0.0 && obstacles.ellipse->b > 0.0, "geometry.ellipse: semi-axes must be > 0");
  if (target.ellipse) require(target.ellipse->a > 0.0 && target.ellipse->b > 0.0, "target.ellipse: semi-axes must be > 0");
  require(obstacles.ellipse_segments >= 8, "geometry.ellipse_segments: must be >= 8");
  require(newton.tolerance > 0.0, "newton.tolerance: must be > 0");
  require(newton.max_iter >= 1, "newton.max_iter: must be >= 1");
  require(!study_values.empty(), "study.values: must not be empty");
  for (double v : study_values) require(v > 0.0, "study.values: entries must be > 0");
  require(study_edge > 0.0, "study.target_edge: must be > 0");
  require(study_smoothing >= 0.0, "study.smoothing_width: must be >= 0");
  require(study_smoothing_per_edge > 0.0, "study.smoothing_per_edge: must be > 0");
  if (study_reference_edge) require(*study_reference_edge > 0.0, "study.reference_edge: must be > 0");
  try {
    opt.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("optimize.") + e.what());
  }
}

AssemblyConfig RunConfig::assembly() const {
  AssemblyConfig a;
  a.nu = nu;
  a.epsilon = epsilon;
  a.smoothing.width = smoothing_width;
  a.quadrature_order = quadrature_order;
  a.divergence = divergence;
  a.uniform_heaviside = uniform_heaviside;
  a.traction = vector_field(traction_x, traction_y);
  a.force = vector_field(force_x, force_y);
  return a;
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  c.traction_x.terms = {{100.0, 0, 1}};
  if (name == "sec31") {
    c.obstacles.disks = {{{0.5, 0.25}, 0.15}, {{0.75, 0.0}, 0.15}};
    return c;
  }
  if (name == "test1" || name == "test2") {
    c.target_edge = 0.05;
    c.conform = false;
    c.epsilon = 0.01;
    c.divergence = DivergenceForm::PenalizedB;
    c.opt.snapshot_every = 25;
    if (name == "test1") {
      c.obstacles.disks = {{{-0.2, 0.2}, 0.1}, {{-0.2, -0.2}, 0.1}};
      c.opt.rho = 0.8;
      c.opt.max_iterations = 200;
    } else {
      c.obstacles.disks = {{{-0.2, 0.2}, 0.15}, {{-0.2, -0.2}, 0.15}};
      c.cost = CostKind::Tracking;
      c.target.ellipse = EllipseSpec{{-0.2, 0.0}, 0.2, 0.4};
      c.opt.rho = 0.02;
      c.opt.max_iterations = 500;
    }
    return c;
  }
  throw ConfigError("preset: unknown preset '" + std::string(name) + "' (expected sec31, test1 or test2)");
}

void apply_ini(RunConfig& config, std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string field = section + '.' + key;
      const auto it = setters().find(field);
      if (it == setters().end()) throw ConfigError(field + ": unknown setting");
      it->second(config, field, node.get_value<std::string>());
    }
  }
}

// --- artifacts ----------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

ArtifactWriter::ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
  const fs::path target = dir_ / name;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  entries_.emplace_back(name, sha256_hex(content));
}

void ArtifactWriter::finish() {
  auto sorted = entries_;
  std::sort(sorted.begin(), sorted.end());
  std::string manifest;
  for (const auto& [name, hash] : sorted) manifest += hash + "  " + name + '\n';
  write("manifest.sha256", manifest);
  entries_.pop_back();
}

bool verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.sha256", std::ios::binary);
  if (!in) return false;
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.size() < 67 || line.compare(64, 2, "  ") != 0) return false;
    std::ifstream f(dir / line.substr(66), std::ios::binary);
    if (!f) return false;
    std::ostringstream buf;
    buf << f.rdbuf();
    if (sha256_hex(buf.str()) != line.substr(0, 64)) return false;
    any = true;
  }
  return any;
}

// --- dispatch -----------------------------------------------------------------------

int run(std::string_view command, const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  static const std::map<std::string, std::function<void(const RunConfig&, ArtifactWriter&, std::ostream&)>, std::less<>>
      commands = {{"solve-reference", solve_reference_cmd},
                  {"solve-penalized", solve_penalized_cmd},
                  {"error-study", error_study_cmd},
                  {"optimize", optimize_cmd}};
  const auto cmd = commands.find(command);
  if (cmd == commands.end()) {
    log << "error: unknown command '" << command << "'\n";
    return ConfigFailure;
  }
  std::optional<ArtifactWriter> writer;
  try {
    config.validate();
    writer.emplace(out_dir);
    cmd->second(config, *writer, log);
    writer->finish();
    return Ok;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << '\n';
    const NewtonReport& rep = e.report();
    log << "newton report: iterations " << rep.iterations << ", converged " << (rep.converged ? "yes" : "no")
        << ", tolerance " << fmt(rep.tolerance) << '\n';
    try {
      if (writer) {
        writer->write("newton_report.csv", to_text([&](std::ostream& o) { write_report_csv(o, rep); }));
        writer->finish();
      }
    } catch (const Error& io) {
      log << "error: " << io.what() << '\n';
    }
    return SolverFailure;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return IoFailure;
  } catch (const fs::filesystem_error& e) {
    log << "I/O error: " << e.what() << '\n';
    return IoFailure;
  } catch (const Error& e) {
    log << "configuration error: " << e.what() << '\n';
    return ConfigFailure;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Penalized Navier-Stokes solver, error studies and topology optimization"};
  app.require_subcommand(1);
  std::string config_path, preset_name, out_dir = "out";
  int seed = 0;
  const std::vector<std::string> names{"solve-reference", "solve-penalized", "error-study", "optimize"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--preset", preset_name, "base settings")->check(CLI::IsMember({"sec31", "test1", "test2"}));
    sub->add_option("--seed", seed, "reserved; no randomness is used");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : ConfigFailure;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    config = preset_name.empty() ? preset(command == "optimize" ? "test1" : "sec31") : preset(preset_name);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "I/O error: cannot read '" << config_path << "'\n";
        return IoFailure;
      }
      apply_ini(config, in);
    }
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return ConfigFailure;
  }
  return run(command, config, out_dir, std::cerr);
}

}  // namespace penflow::cli
