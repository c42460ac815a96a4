#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "penflow/cli.hpp"
#include "penflow/errors.hpp"
#include "penflow/vtk.hpp"

using namespace penflow;
using namespace penflow::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("penflow_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig coarse(std::string_view name, const std::string& ini = "") {
  RunConfig c = preset(name);
  std::istringstream in("[mesh]\ntarget_edge = 0.1\n" + ini);
  apply_ini(c, in);
  return c;
}

}  // namespace

TEST_CASE("polynomial coefficient tables") {
  RunConfig c;
  std::istringstream in("[physics]\ntraction_x = 100 0 1; -2 2 0\nforce_y = 3 1 1\n");
  apply_ini(c, in);
  REQUIRE(c.traction_x.terms.size() == 2);
  CHECK(c.traction_x({0.5, 0.25}) == doctest::Approx(100 * 0.25 - 2 * 0.25));
  CHECK(c.force_y({2.0, 3.0}) == doctest::Approx(18.0));
  const AssemblyConfig a = c.assembly();
  REQUIRE(a.traction);
  CHECK(a.traction({0.0, 0.5}).x == doctest::Approx(50.0));
  CHECK(a.traction({0.0, 0.5}).y == 0.0);
  REQUIRE(a.force);
  CHECK(a.force({1.0, 1.0}).x == 0.0);
}

TEST_CASE("presets") {
  const RunConfig s = preset("sec31");
  CHECK(s.obstacles.disks.size() == 2);
  CHECK(s.epsilon == 0.025);
  CHECK(s.divergence == DivergenceForm::PlainB);
  CHECK(s.traction_x({0.0, 0.3}) == doctest::Approx(30.0));
  const RunConfig t1 = preset("test1");
  CHECK(t1.opt.rho == 0.8);
  CHECK(t1.epsilon == 0.01);
  CHECK(t1.obstacles.disks[0].radius == 0.1);
  CHECK(t1.cost == CostKind::DissipatedEnergy);
  const RunConfig t2 = preset("test2");
  CHECK(t2.opt.rho == 0.02);
  CHECK(t2.cost == CostKind::Tracking);
  REQUIRE(t2.target.ellipse);
  CHECK(t2.target.ellipse->b == 0.4);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("configuration errors name the field") {
  auto message = [](const std::string& ini) {
    RunConfig c;
    std::istringstream in(ini);
    try {
      apply_ini(c, in);
      c.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[physics]\nnu = -1\n").find("physics.nu") != std::string::npos);
  CHECK(message("[physics]\nnu = abc\n").find("physics.nu") != std::string::npos);
  CHECK(message("[physics]\nmu = 1\n").find("physics.mu") != std::string::npos);
  CHECK(message("[regularization]\nepsilon = -0.1\n").find("regularization.epsilon") != std::string::npos);
  CHECK(message("[optimize]\nrho = -1\n").find("optimize.") != std::string::npos);
  CHECK(message("[geometry]\ndisks = 0 0\n").find("geometry.disks") != std::string::npos);
  CHECK(message("[regularization]\ndivergence = weird\n").find("plain") != std::string::npos);
  CHECK(message("[study]\nkind = mesh\nvalues = 0.1 0.05\n").empty());
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("VTK output") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.regions = {Region::Fluid, Region::Obstacle};
  Vector Y = Vector::Zero(2 * 6);
  Y[1] = 2.0;
  Y[6 + 1] = -1.0;
  std::ostringstream out;
  write_vtk(out, m, {velocity_field(m, Y), scalar_field("p", std::vector<double>{0, 1, 2, 3})});
  const std::string s = out.str();
  CHECK(s.rfind("# vtk DataFile Version 2.0\n", 0) == 0);
  CHECK(s.find("DATASET UNSTRUCTURED_GRID\nPOINTS 4 double\n") != std::string::npos);
  CHECK(s.find("CELLS 2 8\n3 0 1 2\n3 0 2 3\n") != std::string::npos);
  CHECK(s.find("CELL_TYPES 2\n5\n5\n") != std::string::npos);
  CHECK(s.find("VECTORS velocity double\n0 0 0\n2 -1 0\n") != std::string::npos);
  CHECK(s.find("SCALARS p double 1\nLOOKUP_TABLE default\n0\n1\n2\n3\n") != std::string::npos);
  CHECK_THROWS_AS(write_vtk(out, m, {scalar_field("p", std::vector<double>{1})}), MeshError);
}

TEST_CASE("solve commands write verified, reproducible artifacts") {
  std::ostringstream log;
  const fs::path a = scratch("pen_a"), b = scratch("pen_b");
  const RunConfig c = coarse("sec31");
  REQUIRE(run("solve-penalized", c, a, log) == Ok);
  REQUIRE(run("solve-penalized", c, b, log) == Ok);
  CHECK(verify_manifest(a));
  for (const char* f : {"mesh.txt", "level.csv", "penalized_state.csv", "penalized.vtk", "diagnostics.csv",
                        "manifest.sha256"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string diag = slurp(a / "diagnostics.csv");
  CHECK(diag.find("flux_Obstacle(1)") != std::string::npos);
  CHECK(diag.find("div_norm_omega") != std::string::npos);
  {
    std::ofstream tamper(a / "level.csv", std::ios::app);
    tamper << "1\n";
  }
  CHECK_FALSE(verify_manifest(a));

  const fs::path r = scratch("ref");
  REQUIRE(run("solve-reference", c, r, log) == Ok);
  CHECK(verify_manifest(r));
  CHECK(slurp(r / "diagnostics.csv").find("multiplier_2") != std::string::npos);
  for (const auto& p : {a, b, r}) fs::remove_all(p);
}

TEST_CASE("error-study command") {
  std::ostringstream log;
  const fs::path out = scratch("study");
  const RunConfig c = coarse("sec31", "[study]\ntarget_edge = 0.1\nvalues = 0.5 0.1\n");
  REQUIRE(run("error-study", c, out, log) == Ok);
  CHECK(verify_manifest(out));
  CHECK(slurp(out / "sweep.svg").find("L2 slope") != std::string::npos);
  CHECK(slurp(out / "slopes.csv").rfind("kind,l2_slope,h1_slope\nepsilon,", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("optimize command") {
  std::ostringstream log;
  const fs::path out = scratch("opt");
  const RunConfig c = coarse("test2", "[optimize]\niterations = 4\nsnapshot_every = 2\n");
  REQUIRE(run("optimize", c, out, log) == Ok);
  CHECK(verify_manifest(out));
  const std::string history = slurp(out / "history.csv");
  CHECK(std::count(history.begin(), history.end(), '\n') == 6);
  for (const char* f : {"snapshots/level_000000.csv", "snapshots/level_000002.vtk", "snapshots/level_000004.csv",
                        "final.vtk", "final_state.csv", "snapshots.csv"})
    CHECK(fs::exists(out / f));
  fs::remove_all(out);
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  RunConfig bad = coarse("sec31");
  bad.nu = 0.0;
  CHECK(run("solve-penalized", bad, scratch("bad"), log) == ConfigFailure);
  CHECK(log.str().find("physics.nu") != std::string::npos);
  CHECK(run("no-such-command", coarse("sec31"), scratch("bad"), log) == ConfigFailure);

  RunConfig stiff = coarse("sec31", "[newton]\nmax_iter = 1\n");
  const fs::path out = scratch("newton");
  CHECK(run("solve-penalized", stiff, out, log) == SolverFailure);
  CHECK(slurp(out / "newton_report.csv").rfind("iteration,residual_max_norm\n", 0) == 0);
  CHECK(verify_manifest(out));
  fs::remove_all(out);

  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  CHECK(run("solve-penalized", coarse("sec31"), blocker / "sub", log) == IoFailure);
  fs::remove_all(blocker);
}
