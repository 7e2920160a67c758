#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "nsshape/mesh_io.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "nsshape");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = nsshape::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("hausdorff of a boundary with itself is zero") {
  const auto dir = scratch("cli_hausdorff");
  const auto a = (dir / "a.csv").string();
  nsshape::io::write_polyline_file(a, geom::discretize_boundary(geom::Circle{{0, 0}, 1.0}, 0.2));
  const auto r = invoke({"hausdorff", a, a});
  CHECK(r.code == 0);
  CHECK(r.out == "0\n");
}

TEST_CASE("hausdorff between two circles") {
  const auto dir = scratch("cli_hausdorff2");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  nsshape::io::write_polyline_file(a, geom::discretize_boundary(geom::Circle{{0, 0}, 1.0}, 0.1));
  nsshape::io::write_polyline_file(b, geom::discretize_boundary(geom::Circle{{0, 0}, 1.5}, 0.1));
  const auto r = invoke({"hausdorff", a, b});
  REQUIRE(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
  CHECK(invoke({"mesh", "--no-such-flag"}).code == 1);
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"optimize", "--mode", "sideways"}).code == 1);
  const auto help = invoke({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("sweep") != std::string::npos);
}

TEST_CASE("validation and parse errors exit with 1") {
  const auto dir = scratch("cli_bad");
  const auto bad = write_config(dir, R"({"nu": -1})");
  const auto r = invoke({"--config", bad.string(), "--out", (dir / "out").string(), "mesh"});
  CHECK(r.code == 1);
  CHECK(r.err.find("nu") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{\n\"nu\": 1,,\n}";
  const auto p = invoke({"--config", (dir / "broken.json").string(), "mesh"});
  CHECK(p.code == 1);
  CHECK(p.err.find("line 2") != std::string::npos);

  const auto t = invoke({"--out", (dir / "out").string(), "optimize", "--mode", "transient"});
  CHECK(t.code == 1);
}

TEST_CASE("mesh writes the initial domain") {
  const auto dir = scratch("cli_mesh");
  const auto cfg = write_config(dir, R"({"h": 0.4})");
  const auto r = invoke({"--config", cfg.string(), "--out", (dir / "out").string(), "mesh"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("vertices ") == 0);
  CHECK(fs::exists(dir / "out" / "initial.mesh"));
  CHECK(fs::exists(dir / "out" / "initial_boundary.csv"));
  CHECK(fs::exists(dir / "out" / "initial_mesh.vtk"));
  const auto mesh = nsshape::io::read_mesh_file((dir / "out" / "initial.mesh").string());
  CHECK(geom::mesh_quality(mesh).min_angle_deg >= 20.0);
}

TEST_CASE("transient optimization writes its run directory") {
  const auto dir = scratch("cli_optimize");
  const auto cfg = write_config(dir, R"({"h": 0.4, "max_iters": 2})");
  const auto out = dir / "out";
  const auto r = invoke({"--config", cfg.string(), "--out", out.string(), "optimize", "--mode", "transient", "--T",
                         "1", "--dump-fields"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("status ") == 0);
  CHECK(fs::exists(out / "ud" / "ud_field.txt"));
  CHECK(fs::exists(out / "T_1" / "trace.csv"));
  CHECK(fs::exists(out / "T_1" / "boundary_0000.csv"));
  CHECK(fs::exists(out / "T_1" / "final.mesh"));
  CHECK(fs::exists(out / "T_1" / "status.txt"));
  CHECK(fs::exists(out / "T_1" / "state_0005.vtk"));

  const auto s = invoke({"--config", cfg.string(), "--out", out.string(), "optimize"});
  REQUIRE(s.code == 0);
  CHECK(fs::exists(out / "stationary" / "trace.csv"));
  CHECK_FALSE(fs::exists(out / "stationary" / "final_adjoint.vtk"));
}

TEST_CASE("udgen and solve-stationary") {
  const auto dir = scratch("cli_ud");
  const auto cfg = write_config(dir, R"({"h": 0.4})");
  const auto out = (dir / "out").string();
  const auto u = invoke({"--config", cfg.string(), "--out", out, "udgen"});
  REQUIRE(u.code == 0);
  CHECK(u.out.find("uD_l2_omega ") == 0);
  CHECK(std::stod(u.out.substr(12)) > 0.0);
  const auto s = invoke({"--config", cfg.string(), "--out", out, "solve-stationary"});
  REQUIRE(s.code == 0);
  CHECK(s.out.find("J_s ") == 0);
  CHECK(fs::exists(dir / "out" / "stationary_state.vtk"));
}
