#include "penflow/error_study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "penflow/errors.hpp"

namespace penflow {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Bucketed point location on a triangle mesh.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh) : mesh_(&mesh) {
    lo_ = hi_ = mesh.vertices.front();
    for (Vec2 p : mesh.vertices) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
    const int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_triangles()))));
    nx_ = ny_ = n;
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles[t];
      Vec2 a = mesh.vertices[tri[0]], b = a;
      for (int v : tri) {
        a = {std::min(a.x, mesh.vertices[v].x), std::min(a.y, mesh.vertices[v].y)};
        b = {std::max(b.x, mesh.vertices[v].x), std::max(b.y, mesh.vertices[v].y)};
      }
      const auto [i0, j0] = cell(a);
      const auto [i1, j1] = cell(b);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) cells_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
  }

  /// Containing triangle and barycentric coordinates; points slightly outside
  /// the mesh (polygonization differences) snap to the best nearby triangle.
  std::pair<int, std::array<double, 3>> locate(Vec2 p) const {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_l{};
    auto consider = [&](int t) {
      const auto l = barycentric(t, p);
      const double score = std::min({l[0], l[1], l[2]});
      if (score > best_score) {
        best_score = score;
        best = t;
        best_l = l;
      }
    };
    const auto [ci, cj] = cell(p);
    for (int r = 0; r <= std::max(nx_, ny_); ++r) {
      for (int i = ci - r; i <= ci + r; ++i)
        for (int j = cj - r; j <= cj + r; ++j) {
          if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
          if (std::max(std::abs(i - ci), std::abs(j - cj)) != r) continue;
          for (int t : cells_[static_cast<std::size_t>(j) * nx_ + i]) consider(t);
        }
      if (best_score >= -1e-12 || (best >= 0 && r >= 1)) break;
    }
    if (best_score < 0.0) {
      // Clamp to the triangle so evaluation is an extension from its closure.
      for (double& x : best_l) x = std::max(x, 0.0);
      const double s = best_l[0] + best_l[1] + best_l[2];
      for (double& x : best_l) x /= s;
    }
    return {best, best_l};
  }

 private:
  std::pair<int, int> cell(Vec2 p) const {
    const int i = std::clamp(static_cast<int>((p.x - lo_.x) / (hi_.x - lo_.x) * nx_), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>((p.y - lo_.y) / (hi_.y - lo_.y) * ny_), 0, ny_ - 1);
    return {i, j};
  }
  std::array<double, 3> barycentric(int t, Vec2 p) const {
    const auto& tri = mesh_->triangles[t];
    const Vec2 a = mesh_->vertices[tri[0]], b = mesh_->vertices[tri[1]], c = mesh_->vertices[tri[2]];
    const double d = orient(a, b, c);
    const double l1 = orient(a, p, c) / d, l2 = orient(a, b, p) / d;
    return {1.0 - l1 - l2, l1, l2};
  }

  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
};

struct PointValue {
  Vec2 y;
  std::array<Vec2, 2> grad;
  double p;
};

PointValue evaluate(const Mesh& mesh, const Vector& Y, const Vector& P, int t, const std::array<double, 3>& l) {
  const auto& tri = mesh.triangles[t];
  const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
  const double det = orient(p0, p1, p2);
  const std::array<Vec2, 3> gl{Vec2{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                               Vec2{(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                               Vec2{(p0.y - p1.y) / det, (p1.x - p0.x) / det}};
  const std::array<double, 4> N{l[0], l[1], l[2], 27.0 * l[0] * l[1] * l[2]};
  const std::array<Vec2, 4> dN{gl[0], gl[1], gl[2],
                               27.0 * (l[1] * l[2] * gl[0] + l[0] * l[2] * gl[1] + l[0] * l[1] * gl[2])};
  const int n1 = mesh.num_vertices() + mesh.num_triangles();
  const std::array<int, 4> dofs{tri[0], tri[1], tri[2], mesh.num_vertices() + t};
  PointValue v{{0.0, 0.0}, {Vec2{}, Vec2{}}, 0.0};
  for (int k = 0; k < 4; ++k) {
    const double a = Y[dofs[k]], b = Y[n1 + dofs[k]];
    v.y += Vec2{a * N[k], b * N[k]};
    v.grad[0] += a * dN[k];
    v.grad[1] += b * dN[k];
  }
  for (int k = 0; k < 3; ++k) v.p += P[tri[k]] * l[k];
  return v;
}

struct Reference {
  Submesh fluid;
  SpaceLayout layout;
  MixedState state;
  NewtonReport report;
  double l2, h1, p_l2, div;
};

Reference solve_reference(const Mesh& conforming, const AssemblyConfig& cfg, const NewtonOptions& newton) {
  Reference r;
  r.fluid = extract_submesh(conforming, Region::Fluid);
  r.layout = build_spaces(r.fluid.mesh);
  std::tie(r.state, r.report) = solve_reference_flux_constrained(r.layout, cfg, newton);
  const auto all = all_triangles(r.fluid.mesh);
  r.l2 = compute_norm(r.fluid.mesh, r.state.Y, all, NormKind::L2);
  r.h1 = compute_norm(r.fluid.mesh, r.state.Y, all, NormKind::H1);
  r.p_l2 = compute_scalar_l2(r.fluid.mesh, r.state.P, all);
  r.div = compute_norm(r.fluid.mesh, r.state.Y, all, NormKind::DivL2);
  return r;
}

ErrorRecord shared_mesh_errors(const Reference& ref, const Mesh& mesh, const PenalizedSolution& pen) {
  ErrorRecord rec;
  const Mesh& w = ref.fluid.mesh;
  const auto all = all_triangles(w);
  const Vector y = restrict_velocity(ref.fluid, mesh.num_vertices(), pen.layout.N1, pen.state.Y);
  const Vector p = restrict_pressure(ref.fluid, pen.state.P);
  const Vector dy = ref.state.Y - y;
  rec.l2_rel = compute_norm(w, dy, all, NormKind::L2) / ref.l2;
  rec.h1_rel = compute_norm(w, dy, all, NormKind::H1) / ref.h1;
  rec.p_l2_rel = compute_scalar_l2(w, ref.state.P - p, all) / ref.p_l2;
  rec.div_norm_omega = compute_norm(w, y, all, NormKind::DivL2);
  return rec;
}

ErrorRecord fine_mesh_errors(const Reference& ref, const Mesh& mesh, const PenalizedSolution& pen) {
  const Mesh& w = ref.fluid.mesh;
  const PointLocator locator(mesh);
  const auto rule = triangle_rule(8);
  double e0 = 0.0, e1 = 0.0, ep = 0.0, div = 0.0;
  const Vector zero_p = Vector::Zero(w.num_vertices());
  for (int t = 0; t < w.num_triangles(); ++t) {
    const auto& tri = w.triangles[t];
    const double area = w.triangle_area(t);
    for (const auto& qp : rule) {
      const Vec2 x = qp.lambda[0] * w.vertices[tri[0]] + qp.lambda[1] * w.vertices[tri[1]] +
                     qp.lambda[2] * w.vertices[tri[2]];
      const PointValue r = evaluate(w, ref.state.Y, ref.state.P, t, qp.lambda);
      const auto [ct, cl] = locator.locate(x);
      const PointValue c = evaluate(mesh, pen.state.Y, pen.state.P, ct, cl);
      const Vec2 dy = r.y - c.y;
      const Vec2 g0 = r.grad[0] - c.grad[0], g1 = r.grad[1] - c.grad[1];
      const double wq = qp.weight * area;
      e0 += wq * dot(dy, dy);
      e1 += wq * (dot(g0, g0) + dot(g1, g1));
      ep += wq * (r.p - c.p) * (r.p - c.p);
      const double d = c.grad[0].x + c.grad[1].y;
      div += wq * d * d;
    }
  }
  ErrorRecord rec;
  rec.l2_rel = std::sqrt(e0) / ref.l2;
  rec.h1_rel = std::sqrt(e0 + e1) / ref.h1;
  rec.p_l2_rel = std::sqrt(ep) / ref.p_l2;
  rec.div_norm_omega = std::sqrt(div);
  return rec;
}

}  // namespace

PenalizedSolution solve_penalized(const Mesh& mesh, const AssemblyConfig& config, const LevelField& g,
                                  const NewtonOptions& newton) {
  PenalizedSolution s;
  s.layout = build_spaces(mesh);
  const Geometry geo = Geometry::from_level(g);
  const MixedState init = solve_stokes(s.layout, config, geo, newton);
  std::tie(s.state, s.report) = solve_navier_stokes(s.layout, config, geo, init, newton);
  return s;
}

Vector restrict_velocity(const Submesh& sub, int parent_vertices, int parent_n1, const Vector& Y) {
  const int nv = sub.mesh.num_vertices(), nt = sub.mesh.num_triangles(), n1 = nv + nt;
  Vector out(2 * n1);
  for (int c = 0; c < 2; ++c) {
    for (int v = 0; v < nv; ++v) out[c * n1 + v] = Y[c * parent_n1 + sub.vertex_parent[v]];
    for (int t = 0; t < nt; ++t) out[c * n1 + nv + t] = Y[c * parent_n1 + parent_vertices + sub.triangle_parent[t]];
  }
  return out;
}

Vector restrict_pressure(const Submesh& sub, const Vector& P) {
  Vector out(sub.mesh.num_vertices());
  for (int v = 0; v < sub.mesh.num_vertices(); ++v) out[v] = P[sub.vertex_parent[v]];
  return out;
}

std::vector<ErrorRecord> run_sweep(SweepKind kind, const std::vector<double>& values, const StudyConfig& config) {
  if (values.empty()) throw ConfigError("run_sweep: no sweep values");
  if (!config.level) throw ConfigError("run_sweep: level function missing");
  for (double v : values)
    if (!(v > 0.0)) throw ConfigError("run_sweep: sweep values must be positive");

  auto mesh_at = [&](double edge) {
    DomainSpec spec = config.domain;
    spec.target_edge = edge;
    return generate_mesh(spec, true);
  };

  std::optional<Mesh> fine_mesh;
  std::optional<Reference> fine_ref;
  if (config.reference == ReferenceMode::FineMesh) {
    const double smallest = kind == SweepKind::MeshSweep ? *std::min_element(values.begin(), values.end())
                                                         : config.domain.target_edge;
    const double edge = config.reference_edge.value_or(0.5 * smallest);
    fine_mesh = mesh_at(edge);
    fine_ref = solve_reference(*fine_mesh, config.base, config.newton);
  }

  std::optional<Mesh> fixed_mesh;
  std::optional<Reference> fixed_ref;
  if (kind == SweepKind::EpsilonSweep) {
    fixed_mesh = mesh_at(config.domain.target_edge);
    if (!fine_ref) fixed_ref = solve_reference(*fixed_mesh, config.base, config.newton);
  }

  std::vector<ErrorRecord> out;
  for (double value : values) {
    AssemblyConfig cfg = config.base;
    Mesh mesh = kind == SweepKind::EpsilonSweep ? *fixed_mesh : mesh_at(value);
    const double mean_edge = mean_edge_length(mesh);
    if (kind == SweepKind::EpsilonSweep) {
      cfg.epsilon = value;
    } else {
      cfg.smoothing.width = config.smoothing_per_edge * mean_edge;
    }
    try {
      std::optional<Reference> local;
      const Reference* ref = fine_ref ? &*fine_ref : fixed_ref ? &*fixed_ref : nullptr;
      if (!ref) {
        local = solve_reference(mesh, cfg, config.newton);
        ref = &*local;
      }
      const PenalizedSolution pen = solve_penalized(mesh, cfg, LevelField::interpolate(mesh, config.level), config.newton);
      ErrorRecord rec = fine_ref ? fine_mesh_errors(*ref, mesh, pen) : shared_mesh_errors(*ref, mesh, pen);
      rec.epsilon = cfg.epsilon;
      rec.mesh_size = mean_edge;
      rec.smoothing_width = cfg.smoothing.width;
      rec.triangles = mesh.num_triangles();
      rec.newton_iters = pen.report.iterations;
      rec.reference_iters = ref->report.iterations;
      rec.reference_div_norm = ref->div;
      out.push_back(rec);
    } catch (const SolverError& e) {
      const std::string which = kind == SweepKind::EpsilonSweep ? "epsilon = " : "target edge = ";
      throw SolverError("sweep point " + which + fmt(value) + ": " + e.what(), e.report());
    }
  }
  return out;
}

double regression_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw DegenerateInputError("regression needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw DegenerateInputError("regression with all x values equal");
  return sxy / sxx;
}

double sweep_slope(const std::vector<ErrorRecord>& records, SweepKind kind, bool h1) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : records) {
    const double x = kind == SweepKind::EpsilonSweep ? r.epsilon : r.mesh_size;
    pts.emplace_back(std::log10(x), std::log10(h1 ? r.h1_rel : r.l2_rel));
  }
  return regression_slope(pts);
}

void write_sweep_csv(std::ostream& out, const std::vector<ErrorRecord>& records) {
  out << "epsilon,mesh_size,smoothing_width,triangles,l2_rel,h1_rel,p_l2_rel,div_norm_omega,reference_div_norm,"
         "newton_iters,reference_iters\n";
  for (const auto& r : records) {
    out << fmt(r.epsilon) << ',' << fmt(r.mesh_size) << ',' << fmt(r.smoothing_width) << ',' << r.triangles << ','
        << fmt(r.l2_rel) << ',' << fmt(r.h1_rel) << ',' << fmt(r.p_l2_rel) << ',' << fmt(r.div_norm_omega) << ','
        << fmt(r.reference_div_norm) << ',' << r.newton_iters << ',' << r.reference_iters << '\n';
  }
}

void write_sweep_svg(std::ostream& out, const std::vector<ErrorRecord>& records, SweepKind kind) {
  if (records.empty()) throw ConfigError("write_sweep_svg: no records");
  const double W = 640, H = 420, left = 70, right = 20, top = 30, bottom = 50;
  std::vector<double> xs, ys;
  for (const auto& r : records) {
    xs.push_back(std::log10(kind == SweepKind::EpsilonSweep ? r.epsilon : r.mesh_size));
    ys.push_back(std::log10(r.l2_rel));
    ys.push_back(std::log10(r.h1_rel));
  }
  double x0 = std::floor(*std::min_element(xs.begin(), xs.end()));
  double x1 = std::ceil(*std::max_element(xs.begin(), xs.end()));
  double y0 = std::floor(*std::min_element(ys.begin(), ys.end()));
  double y1 = std::ceil(*std::max_element(ys.begin(), ys.end()));
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s << "<line x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x1) << "\" y2=\"" << py(y0) << "\"/>\n";
  s << "<line x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x0) << "\" y2=\"" << py(y1) << "\"/>\n";
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int k = static_cast<int>(x0); k <= static_cast<int>(x1); ++k) {
    s << "<line x1=\"" << px(k) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(k) << "\" y2=\"" << py(y0) + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << px(k) << "\" y=\"" << py(y0) + 20 << "\" text-anchor=\"middle\">1e" << k << "</text>\n";
  }
  for (int k = static_cast<int>(y0); k <= static_cast<int>(y1); ++k) {
    s << "<line x1=\"" << px(x0) - 5 << "\" y1=\"" << py(k) << "\" x2=\"" << px(x0) << "\" y2=\"" << py(k)
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << px(x0) - 8 << "\" y=\"" << py(k) + 4 << "\" text-anchor=\"end\">1e" << k << "</text>\n";
  }
  s << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
    << (kind == SweepKind::EpsilonSweep ? "epsilon" : "mesh size") << "</text>\n";
  const char* colors[2] = {"#1f77b4", "#d62728"};
  const char* names[2] = {"L2", "H1"};
  for (int e = 0; e < 2; ++e) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < records.size(); ++i) pts.emplace_back(xs[i], ys[2 * i + e]);
    for (const auto& [x, y] : pts)
      s << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\"" << colors[e] << "\"/>\n";
    if (pts.size() >= 2 && xs.front() != xs.back()) {
      const double slope = regression_slope(pts);
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
      }
      mx /= pts.size();
      my /= pts.size();
      const double xa = *std::min_element(xs.begin(), xs.end()), xb = *std::max_element(xs.begin(), xs.end());
      s << "<line x1=\"" << px(xa) << "\" y1=\"" << py(my + slope * (xa - mx)) << "\" x2=\"" << px(xb) << "\" y2=\""
        << py(my + slope * (xb - mx)) << "\" stroke=\"" << colors[e] << "\" stroke-width=\"1.5\"/>\n";
      s << "<text x=\"" << left + 10 << "\" y=\"" << top + 15 * (e + 1) << "\" fill=\"" << colors[e] << "\">"
        << names[e] << " slope " << std::setprecision(3) << slope << std::setprecision(2) << "</text>\n";
    }
  }
  s << "</g>\n</svg>\n";
  out << s.str();
}

}  // namespace penflow
