#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "nsshape/errors.hpp"
#include "nsshape/experiments.hpp"

using namespace testing;
namespace ex = nsshape::exp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string validation_field(const std::string& text) {
  try {
    ex::parse_config(text);
  } catch (const nsshape::ValidationError& e) {
    return e.field();
  }
  return "";
}

double ud_norm(const ex::ProblemConfig& cfg, const ex::DesiredVelocity& ud) {
  const fem::ObservationTarget zero(ud.field.space, cfg.omega, [](Vec2) { return Vec2{}; });
  return std::sqrt(zero.misfit(ud.field.velocity));
}

// Small problem for end-to-end runs.
ex::ProblemConfig small_config(const std::string& extra = "") {
  return ex::parse_config(R"({"h": 0.4, "max_iters": 2, "workers": 1)" + extra + "}");
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty input gives the defaults") {
    for (const char* text : {"", "{}", "  \n"}) {
      const auto c = ex::parse_config(text);
      CHECK(c.nu == 1.0);
      CHECK(c.gamma == 1.0);
      CHECK(c.h == 0.1);
      CHECK(c.dt == 0.2);
      CHECK(c.T_list == std::vector<double>{1, 2, 4, 8, 16, 32, 64, 128});
      CHECK(c.eps_robin == 0.05);
      CHECK(c.alpha == 1.0);
      CHECK(c.tol == 1e-6);
      CHECK(c.max_iters == 100);
      CHECK(c.holdall_radius == 6.0);
      CHECK(c.max_backtracks == 12);
      CHECK(c.uD.nu_gen == 0.2);
      CHECK(c.uD.radius_gen == 2.0);
      CHECK(std::holds_alternative<geom::Ellipse>(c.initial_domain));
      CHECK(std::get<geom::Ellipse>(c.initial_domain).semi_y == 3.0);
      CHECK(std::get<geom::Circle>(c.omega).radius == 1.0);
      CHECK(c.explicit_keys.empty());
    }
  }

  TEST_CASE("horizon must be a multiple of dt") {
    CHECK(validation_field(R"({"dt": 0.3, "T_list": [1]})") == "T_list");
    CHECK(validation_field(R"({"T_list": [1, 1]})") == "T_list");
    CHECK(validation_field(R"({"T_list": []})") == "T_list");
  }

  TEST_CASE("invalid values name their field") {
    CHECK(validation_field(R"({"nu": -1})") == "nu");
    CHECK(validation_field(R"({"gamma": -0.5})") == "gamma");
    CHECK(validation_field(R"({"h": "fine"})") == "h");
    CHECK(validation_field(R"({"max_iters": 2.5})") == "max_iters");
    CHECK(validation_field(R"({"newton": {"damping": 2}})") == "newton.damping");
    CHECK(validation_field(R"({"omega": {"kind": "circle", "center": [0, 0], "radius": -1}})") == "omega");
    CHECK(validation_field(R"({"omega": {"kind": "square"}})") == "omega.kind");
    CHECK(validation_field(R"({"u0": "stokes"})") == "u0");
  }

  TEST_CASE("unknown keys are rejected") {
    CHECK(validation_field(R"({"bogus": 1})") == "bogus");
    CHECK(validation_field(R"({"newton": {"tolerance": 1e-8}})") == "newton.tolerance");
  }

  TEST_CASE("malformed JSON reports the line") {
    try {
      ex::parse_config("{\n  \"nu\": 1,\n  \"h\": ,\n}", "case.json");
      FAIL("expected a parse error");
    } catch (const nsshape::ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("case.json") != std::string::npos);
      CHECK(msg.find("line 3") != std::string::npos);
      CHECK(msg.find("\"h\": ,") != std::string::npos);
    }
  }

  TEST_CASE("shapes, forcing and scalar horizon") {
    const auto c = ex::parse_config(R"({
      "T_list": 4,
      "omega": {"kind": "ellipse", "center": [0.1, 0], "semi_axis_x": 1, "semi_axis_y": 0.8},
      "initial_domain": {"kind": "polyline", "points": [[-3, -3], [3, -3], [3, 3], [-3, 3]]},
      "f": {"x": [[0.1, 0, 3]], "y": [[-0.1, 3, 0]]},
      "uD": {"nu_gen": 0.5, "h_gen": 0.3},
      "line_search": {"max_backtracks": 4, "omega_margin": 0.1}
    })");
    CHECK(c.T_list == std::vector<double>{4});
    CHECK(std::get<geom::Ellipse>(c.omega).center.x == 0.1);
    CHECK(std::get<geom::Polyline>(c.initial_domain).points.size() == 4);
    CHECK(c.uD.nu_gen == 0.5);
    CHECK(c.uD_mesh_size() == 0.3);
    CHECK(c.max_backtracks == 4);
    CHECK(c.omega_margin == 0.1);
    const auto f = c.f.function();
    for (const Vec2 p : {Vec2{0.3, -1.2}, Vec2{1.7, 0.4}}) {
      CHECK(f(p).x == doctest::Approx(cubic_forcing(p).x).epsilon(1e-15));
      CHECK(f(p).y == doctest::Approx(cubic_forcing(p).y).epsilon(1e-15));
    }
    CHECK(c.explicit_keys.count("T_list") == 1);
  }

  TEST_CASE("desk scale only touches keys left unset") {
    auto a = ex::parse_config("");
    ex::apply_desk_scale(a);
    CHECK(a.h == 0.2);
    CHECK(a.T_list == std::vector<double>{1, 2, 4, 8, 16, 32});
    auto b = ex::parse_config(R"({"h": 0.15, "T_list": [2, 64]})");
    ex::apply_desk_scale(b);
    CHECK(b.h == 0.15);
    CHECK(b.T_list == std::vector<double>{2, 64});
  }

  TEST_CASE("config files") {
    const auto dir = scratch("config_file");
    std::ofstream(dir / "c.json") << R"({"nu": 2})";
    CHECK(ex::load_config(dir / "c.json").nu == 2.0);
    CHECK_THROWS_AS(ex::load_config(dir / "missing.json"), nsshape::ParseError);
  }
}

TEST_SUITE("desired velocity") {
  TEST_CASE("forcing scale acts linearly") {
    auto cfg = ex::parse_config(R"({"h": 0.4})");
    const auto base = ex::generate_desired_velocity(cfg);
    CHECK(ud_norm(cfg, base) > 0.0);

    cfg.uD.f.scale = 0.0;
    const auto zero = ex::generate_desired_velocity(cfg);
    CHECK(ud_norm(cfg, zero) == 0.0);

    cfg.uD.f.scale = 2.0;
    const auto twice = ex::generate_desired_velocity(cfg);
    for (std::size_t i = 0; i < base.field.velocity.size(); ++i)
      CHECK(std::abs(twice.field.velocity[i] - 2.0 * base.field.velocity[i]) <= 1e-10);
  }

  TEST_CASE("stored fields are reused only for the same recipe") {
    const auto dir = scratch("ud_cache");
    auto cfg = ex::parse_config(R"({"h": 0.4})");
    const auto first = ex::obtain_desired_velocity(dir, cfg);
    const long solves = ex::desired_velocity_solve_count();
    const auto again = ex::obtain_desired_velocity(dir, cfg);
    CHECK(ex::desired_velocity_solve_count() == solves);
    CHECK(again.field.velocity == first.field.velocity);
    CHECK(fs::exists(dir / "ud.vtk"));

    // The optimization mesh size changes, but the u_D recipe does not.
    auto finer = cfg;
    finer.h = 0.3;
    finer.uD.h_gen = 0.4;
    CHECK(ex::load_desired_velocity(dir, finer).has_value());

    auto other = cfg;
    other.uD.nu_gen = 0.3;
    CHECK_FALSE(ex::load_desired_velocity(dir, other).has_value());
    (void)ex::obtain_desired_velocity(dir, other);
    CHECK(ex::desired_velocity_solve_count() == solves + 1);
  }

  TEST_CASE("evaluation outside the generation disk is zero") {
    const auto cfg = ex::parse_config(R"({"h": 0.4})");
    const auto ud = ex::generate_desired_velocity(cfg);
    const auto eval = ud.evaluator();
    const Vec2 far = eval({2.5, 0.0});
    CHECK(far.x == 0.0);
    CHECK(far.y == 0.0);
    CHECK(geom::norm(eval({0.5, 0.2})) > 0.0);
  }
}

TEST_SUITE("runs") {
  TEST_CASE("tolerance of one stops after the first accepted step") {
    const auto cfg = small_config(R"(, "tol": 1)");
    const auto ud = ex::generate_desired_velocity(cfg);
    const auto dir = scratch("tol_one");
    const auto run = ex::run_stationary(cfg, ud, dir, false);
    CHECK(run.result.trace.records.size() == 2);
    CHECK(run.result.trace.status == "converged");
    CHECK(slurp(dir / "status.txt") == "converged\n");
    CHECK(fs::exists(dir / "boundary_0001.csv"));
    CHECK(fs::exists(dir / "final_state.vtk"));
    CHECK_FALSE(fs::exists(dir / "final_adjoint.vtk"));
  }

  TEST_CASE("transient runs are deterministic") {
    const auto cfg = small_config();
    const auto ud = ex::generate_desired_velocity(cfg);
    const auto a = scratch("det_a"), b = scratch("det_b");
    ex::run_transient(cfg, ud, 0.6, a, false);
    ex::run_transient(cfg, ud, 0.6, b, true);
    const std::string trace = slurp(a / "trace.csv");
    CHECK(trace.rfind("iter,J,tau_eff,backtracks,n_vertices,min_angle\n", 0) == 0);
    CHECK(trace == slurp(b / "trace.csv"));
    CHECK(fs::exists(b / "state_0003.vtk"));
    CHECK_FALSE(fs::exists(a / "state_0003.vtk"));
  }
}

TEST_SUITE("sweep") {
  TEST_CASE("log-log slope over the largest horizons") {
    std::vector<ex::GapRow> rows;
    for (double T : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      ex::GapRow r;
      r.T = T;
      r.gap = T <= 2.0 ? 1.0 : 0.3 * std::pow(T, -0.7);
      rows.push_back(r);
    }
    CHECK(ex::loglog_slope(rows) == doctest::Approx(-0.7).epsilon(1e-12));
    rows[5].gap = 0.0;
    rows[1].gap = 0.3 * std::pow(2.0, -0.7);
    CHECK(ex::loglog_slope(rows) == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(std::isnan(ex::loglog_slope({rows[0]})));
  }

  TEST_CASE("gap table layout") {
    const auto dir = scratch("gap_table");
    ex::GapRow r;
    r.T = 0.2;
    r.J_T = 0.1;
    r.J_s = 0.05;
    r.gap = 0.05;
    r.hausdorff = 0.25;
    r.iters = 3;
    r.status = "failed: a, b";
    r.wall_time_s = std::numeric_limits<double>::quiet_NaN();
    ex::write_gap_table(dir / "g.csv", {r});
    const std::string text = slurp(dir / "g.csv");
    CHECK(text.rfind("T,J_T,J_s,gap,hausdorff,iters,status,wall_time_s\n", 0) == 0);
    CHECK(text.find("0.20000000000000001,") != std::string::npos);
    CHECK(text.find("failed: a; b") != std::string::npos);
  }

  TEST_CASE("horizon names") {
    CHECK(ex::format_T(1.0) == "1");
    CHECK(ex::format_T(128.0) == "128");
    CHECK(ex::format_T(0.2) == "0.20000000000000001");
  }

  TEST_CASE("reduced sweep writes one finite row per horizon") {
    const auto cfg = small_config(R"(, "T_list": [0.4, 0.2])");
    const auto dir = scratch("sweep_small");
    const auto ud = ex::obtain_desired_velocity(dir / "ud", cfg);
    const long solves = ex::desired_velocity_solve_count();
    const auto res = ex::run_sweep(cfg, ud, dir);
    CHECK(ex::desired_velocity_solve_count() == solves);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].T == 0.2);
    CHECK(res.rows[1].T == 0.4);
    for (const auto& r : res.rows) {
      CHECK(std::isfinite(r.J_T));
      CHECK(std::isfinite(r.hausdorff));
      CHECK(r.J_s == res.J_s);
      CHECK(r.gap == doctest::Approx(std::abs(r.J_T - r.J_s)).epsilon(1e-15));
      CHECK(std::isnan(r.wall_time_s));
    }
    CHECK(fs::exists(dir / "stationary" / "trace.csv"));
    CHECK(fs::exists(dir / ("T_" + ex::format_T(0.2)) / "trace.csv"));
    CHECK(fs::exists(dir / "sweep_summary.json"));
    const std::string table = slurp(dir / "gap_table.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  }
}
