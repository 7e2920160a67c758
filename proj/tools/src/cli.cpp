#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "nsshape/errors.hpp"
#include "nsshape/experiments.hpp"
#include "nsshape/field_io.hpp"
#include "nsshape/mesh_io.hpp"

namespace nsshape::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  bool dump_fields = false;
  bool paper_scale = false;
  std::string mode = "stationary";
  double T = 1.0;
  bool T_given = false;
  std::string hausdorff_a, hausdorff_b;
};

exp::ProblemConfig config_from(const Options& o) {
  exp::ProblemConfig c = o.config.empty() ? exp::parse_config("") : exp::load_config(o.config);
  if (!o.paper_scale) exp::apply_desk_scale(c);
  return c;
}

int cmd_mesh(const Options& o, std::ostream& out) {
  const auto cfg = config_from(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  const auto mesh = exp::initial_mesh(cfg);
  io::write_mesh_file((dir / "initial.mesh").string(), mesh);
  io::write_polyline_file((dir / "initial_boundary.csv").string(), geom::boundary_polyline(mesh));
  io::write_vtk((dir / "initial_mesh.vtk").string(), mesh, {});
  const auto q = geom::mesh_quality(mesh);
  out << "vertices " << mesh.vertex_count() << "\ntriangles " << mesh.triangle_count() << "\nmin_angle "
      << io::format_double(q.min_angle_deg) << '\n';
  return 0;
}

int cmd_udgen(const Options& o, std::ostream& out) {
  const auto cfg = config_from(o);
  const auto ud = exp::generate_desired_velocity(cfg);
  exp::save_desired_velocity(fs::path(o.out) / "ud", cfg, ud);
  const fem::ObservationTarget zero(ud.field.space, cfg.omega, [](geom::Vec2) { return geom::Vec2{}; });
  out << "uD_l2_omega " << io::format_double(std::sqrt(zero.misfit(ud.field.velocity))) << '\n';
  return 0;
}

int cmd_solve_stationary(const Options& o, std::ostream& out) {
  const auto cfg = config_from(o);
  const fs::path dir = o.out;
  const auto ud = exp::obtain_desired_velocity(dir / "ud", cfg);
  const auto problem = exp::make_problem(cfg, ud);
  const auto space = fem::build_space(exp::initial_mesh(cfg));
  const auto res = stationary::solve_navier_stokes_newton(space, problem.f, cfg.nu, cfg.gamma, cfg.newton);
  const fem::ObservationTarget target(space, cfg.omega, problem.target);
  const double J = cfg.nu * target.misfit(res.field.velocity);
  io::write_flow_vtk((dir / "stationary_state.vtk").string(), res.field);
  out << "J_s " << io::format_double(J) << "\nnewton_iterations " << res.ratios.size() << "\nlast_ratio "
      << io::format_double(res.ratios.back()) << '\n';
  return 0;
}

int cmd_optimize(const Options& o, std::ostream& out) {
  const auto cfg = config_from(o);
  const fs::path dir = o.out;
  const auto ud = exp::obtain_desired_velocity(dir / "ud", cfg);
  if (o.mode == "stationary") {
    const auto run = exp::run_stationary(cfg, ud, dir / "stationary", o.dump_fields);
    out << "status " << run.result.trace.status << "\nJ " << io::format_double(run.J_s) << "\niterations "
        << run.result.trace.records.size() - 1 << '\n';
    return 0;
  }
  if (!o.T_given) throw ValidationError("T", "--T is required with --mode transient");
  const auto res = exp::run_transient(cfg, ud, o.T, dir / ("T_" + exp::format_T(o.T)), o.dump_fields);
  out << "status " << res.trace.status << "\nJ " << io::format_double(res.J) << "\niterations "
      << res.trace.records.size() - 1 << '\n';
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto cfg = config_from(o);
  const fs::path dir = o.out;
  const auto ud = exp::obtain_desired_velocity(dir / "ud", cfg);
  const auto res = exp::run_sweep(cfg, ud, dir);
  out << "J_s " << io::format_double(res.J_s) << '\n';
  for (const auto& r : res.rows)
    out << "T " << exp::format_T(r.T) << " gap " << io::format_double(r.gap) << " hausdorff "
        << io::format_double(r.hausdorff) << " status " << r.status << '\n';
  out << "slope " << io::format_double(res.slope) << '\n';
  return 0;
}

int cmd_hausdorff(const Options& o, std::ostream& out) {
  const auto a = io::read_polyline_file(o.hausdorff_a);
  const auto b = io::read_polyline_file(o.hausdorff_b);
  out << io::format_double(geom::hausdorff_distance(a, b)) << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Navier-Stokes shape optimization toolkit"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--dump-fields", o.dump_fields, "write VTK field dumps");
  app.add_flag("--paper-scale", o.paper_scale, "keep h = 0.1 and T up to 128 (multi-hour)");

  auto* mesh = app.add_subcommand("mesh", "mesh the initial domain");
  auto* udgen = app.add_subcommand("udgen", "generate and store the desired velocity");
  auto* solve = app.add_subcommand("solve-stationary", "Newton solve on the initial domain");
  auto* optimize = app.add_subcommand("optimize", "run one shape optimization");
  optimize->add_option("--mode", o.mode)->check(CLI::IsMember({"stationary", "transient"}));
  optimize->add_option("--T", o.T, "terminal time (transient mode)");
  auto* sweep = app.add_subcommand("sweep", "stationary run plus the terminal-time sweep");
  auto* hd = app.add_subcommand("hausdorff", "Hausdorff distance between two boundary CSV files");
  hd->add_option("A", o.hausdorff_a)->required();
  hd->add_option("B", o.hausdorff_b)->required();
  for (auto* sub : {mesh, udgen, solve, optimize, sweep, hd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }
  o.T_given = optimize->count("--T") > 0;

  try {
    if (*mesh) return cmd_mesh(o, out);
    if (*udgen) return cmd_udgen(o, out);
    if (*solve) return cmd_solve_stationary(o, out);
    if (*optimize) return cmd_optimize(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*hd) return cmd_hausdorff(o, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidShapeError& e) {
    err << "invalid shape: " << e.what() << '\n';
    return 1;
  } catch (const SingularSystemError& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const NonConvergenceError& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace nsshape::cli
