#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsshape/shape_opt.hpp"

namespace nsshape::exp {

/// Forcing term: a named builtin times `scale`, or a polynomial per component
/// (terms c * x^i * y^j).
struct ForcingSpec {
  std::string builtin = "cubic";  // "cubic", "zero" or "" for polynomial
  double scale = 1.0;
  std::vector<std::array<double, 3>> poly_x;
  std::vector<std::array<double, 3>> poly_y;

  fem::VectorFunction function() const;
};

struct DesiredVelocityRecipe {
  double nu_gen = 0.2;
  double radius_gen = 2.0;
  std::optional<double> h_gen;  // defaults to the config's h
  ForcingSpec f;
};

struct ProblemConfig {
  double nu = 1.0;
  double gamma = 1.0;
  ForcingSpec f;
  geom::ShapeSpec omega = geom::Circle{{0.0, 0.0}, 1.0};
  geom::ShapeSpec initial_domain = geom::Ellipse{{0.0, 0.0}, 2.0, 3.0};
  double holdall_radius = 6.0;
  double h = 0.1;
  double dt = 0.2;
  std::vector<double> T_list{1, 2, 4, 8, 16, 32, 64, 128};
  double eps_robin = 0.05;
  double alpha = 1.0;
  double tol = 1e-6;
  int max_iters = 100;
  stationary::NewtonSettings newton;
  std::string u0 = "zero";
  DesiredVelocityRecipe uD;
  int max_backtracks = 12;
  double omega_margin = 0.05;
  int containment_samples = 256;
  int workers = 0;  // 0 = hardware concurrency
  bool record_wall_time = false;

  /// Keys present in the source file (dotted paths such as "uD.nu_gen").
  std::set<std::string> explicit_keys;

  void validate() const;
  double uD_mesh_size() const { return uD.h_gen.value_or(h); }
};

/// Parses JSON text. Missing keys take the scenario defaults; unknown keys are rejected.
ProblemConfig parse_config(const std::string& text, const std::string& source = "<config>");
ProblemConfig load_config(const std::filesystem::path& path);

/// Coarse CI resolution: h = 0.2 and T in {1, ..., 32}, except for keys set explicitly.
void apply_desk_scale(ProblemConfig& config);

/// Stokes solution on the generation disk, with its own mesh.
struct DesiredVelocity {
  fem::FlowField field;
  /// Fresh cross-mesh evaluator (one per thread).
  fem::VectorFunction evaluator() const { return fem::cross_mesh_evaluator(field); }
};

DesiredVelocity generate_desired_velocity(const ProblemConfig& config);
/// Number of generation solves performed in this process.
long desired_velocity_solve_count();

void save_desired_velocity(const std::filesystem::path& dir, const ProblemConfig& config, const DesiredVelocity& ud);
/// Loads the stored field when its recipe matches the config; nullopt otherwise.
std::optional<DesiredVelocity> load_desired_velocity(const std::filesystem::path& dir, const ProblemConfig& config);
/// Load from `dir` if present and matching, else generate and persist there.
DesiredVelocity obtain_desired_velocity(const std::filesystem::path& dir, const ProblemConfig& config);

geom::Mesh initial_mesh(const ProblemConfig& config);
shape::FlowProblem make_problem(const ProblemConfig& config, const DesiredVelocity& ud);
shape::OptimizationSettings make_settings(const ProblemConfig& config);

void write_trace_csv(const std::filesystem::path& path, const shape::OptimizationTrace& trace);
/// trace.csv, boundary_####.csv (one per record), final.mesh and status.txt.
void write_run_outputs(const std::filesystem::path& dir, const shape::OptimizationResult& result);

struct StationaryRun {
  shape::OptimizationResult result;
  double J_s = 0.0;
  geom::Polyline boundary;
};

StationaryRun run_stationary(const ProblemConfig& config, const DesiredVelocity& ud,
                             const std::filesystem::path& out_dir, bool dump_fields = false);

shape::OptimizationResult run_transient(const ProblemConfig& config, const DesiredVelocity& ud, double T,
                                        const std::filesystem::path& out_dir, bool dump_fields = false);

struct GapRow {
  double T = 0.0;
  double J_T = 0.0;
  double J_s = 0.0;
  double gap = 0.0;
  double hausdorff = 0.0;
  int iters = 0;
  std::string status;
  double wall_time_s = 0.0;
};

struct SweepResult {
  std::vector<GapRow> rows;  // ascending in T
  double J_s = 0.0;
  double slope = 0.0;        // NaN when fewer than two usable rows
};

/// Least squares slope of log(gap) against log(T) over the largest `count` rows with positive gaps.
double loglog_slope(const std::vector<GapRow>& rows, std::size_t count = 4);

void write_gap_table(const std::filesystem::path& path, const std::vector<GapRow>& rows);

/// Stationary run first, then one transient optimization per T on a worker pool.
/// The coordinator writes every file: stationary/, T_<T>/, gap_table.csv, sweep_summary.json.
SweepResult run_sweep(const ProblemConfig& config, const DesiredVelocity& ud, const std::filesystem::path& out_dir);

/// Text used for T in directory names and tables.
std::string format_T(double T);

}  // namespace nsshape::exp
