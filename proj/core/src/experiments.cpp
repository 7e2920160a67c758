#include "nsshape/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nsshape/errors.hpp"
#include "nsshape/field_io.hpp"
#include "nsshape/mesh_io.hpp"

namespace nsshape::exp {

namespace fs = std::filesystem;
using json = nlohmann::json;
using geom::Vec2;
using io::format_double;

namespace {

std::atomic<long> g_generation_solves{0};

double monomial(double c, double i, double j, Vec2 x) { return c * std::pow(x.x, i) * std::pow(x.y, j); }

// ---------------------------------------------------------------- parsing

class Reader {
 public:
  explicit Reader(std::set<std::string>& seen) : seen_(seen) {}

  // Rejects keys of `obj` (at `prefix`) not listed in `allowed`.
  static void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ValidationError(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!known) throw ValidationError(join(prefix, key), "unknown key");
    }
  }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  const json* find(const json& obj, const std::string& prefix, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    seen_.insert(join(prefix, key));
    return &*it;
  }

  void number(const json& obj, const std::string& prefix, const char* key, double& out) {
    if (const json* v = find(obj, prefix, key)) out = as_number(*v, join(prefix, key));
  }

  void integer(const json& obj, const std::string& prefix, const char* key, int& out) {
    if (const json* v = find(obj, prefix, key)) {
      const double d = as_number(*v, join(prefix, key));
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ValidationError(join(prefix, key), "expected an integer");
      out = static_cast<int>(d);
    }
  }

  void boolean(const json& obj, const std::string& prefix, const char* key, bool& out) {
    if (const json* v = find(obj, prefix, key)) {
      if (!v->is_boolean()) throw ValidationError(join(prefix, key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const json& obj, const std::string& prefix, const char* key, std::string& out) {
    if (const json* v = find(obj, prefix, key)) {
      if (!v->is_string()) throw ValidationError(join(prefix, key), "expected a string");
      out = v->get<std::string>();
    }
  }

  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ValidationError(field, "expected a number");
    return v.get<double>();
  }

  static Vec2 as_point(const json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 2) throw ValidationError(field, "expected [x, y]");
    return {as_number(v[0], field), as_number(v[1], field)};
  }

  geom::ShapeSpec shape(const json& v, const std::string& field) {
    if (!v.is_object()) throw ValidationError(field, "expected a shape object");
    const auto kind_it = v.find("kind");
    if (kind_it == v.end() || !kind_it->is_string()) throw ValidationError(field + ".kind", "missing shape kind");
    const std::string kind = kind_it->get<std::string>();
    auto center = [&]() {
      const auto it = v.find("center");
      return it == v.end() ? Vec2{} : as_point(*it, field + ".center");
    };
    auto req = [&](const char* key) {
      const auto it = v.find(key);
      if (it == v.end()) throw ValidationError(field + "." + key, "missing");
      return as_number(*it, field + "." + key);
    };
    geom::ShapeSpec out;
    if (kind == "circle") {
      check_keys(v, field, {"kind", "center", "radius"});
      out = geom::Circle{center(), req("radius")};
    } else if (kind == "ellipse") {
      check_keys(v, field, {"kind", "center", "semi_axis_x", "semi_axis_y"});
      out = geom::Ellipse{center(), req("semi_axis_x"), req("semi_axis_y")};
    } else if (kind == "polyline") {
      check_keys(v, field, {"kind", "points"});
      const auto it = v.find("points");
      if (it == v.end() || !it->is_array()) throw ValidationError(field + ".points", "expected a list of points");
      geom::Polyline p;
      for (const auto& q : *it) p.points.push_back(as_point(q, field + ".points"));
      out = p;
    } else {
      throw ValidationError(field + ".kind", "unknown shape kind '" + kind + "'");
    }
    try {
      geom::validate(out);
    } catch (const InvalidShapeError& e) {
      throw ValidationError(field, e.what());
    }
    return out;
  }

  ForcingSpec forcing(const json& v, const std::string& field) {
    ForcingSpec f;
    if (v.is_string()) {
      f.builtin = v.get<std::string>();
    } else if (v.is_object()) {
      if (v.contains("builtin")) {
        check_keys(v, field, {"builtin", "scale"});
        if (!v["builtin"].is_string()) throw ValidationError(field + ".builtin", "expected a string");
        f.builtin = v["builtin"].get<std::string>();
        if (v.contains("scale")) f.scale = as_number(v["scale"], field + ".scale");
      } else {
        check_keys(v, field, {"x", "y"});
        f.builtin.clear();
        if (v.contains("x")) f.poly_x = terms(v["x"], field + ".x");
        if (v.contains("y")) f.poly_y = terms(v["y"], field + ".y");
      }
    } else {
      throw ValidationError(field, "expected a builtin name or an object");
    }
    if (!f.builtin.empty() && f.builtin != "cubic" && f.builtin != "zero")
      throw ValidationError(field, "unknown builtin forcing '" + f.builtin + "'");
    if (!std::isfinite(f.scale)) throw ValidationError(field + ".scale", "must be finite");
    return f;
  }

  static std::vector<std::array<double, 3>> terms(const json& v, const std::string& field) {
    if (!v.is_array()) throw ValidationError(field, "expected a list of [c, i, j] terms");
    std::vector<std::array<double, 3>> out;
    for (const auto& t : v) {
      if (!t.is_array() || t.size() != 3) throw ValidationError(field, "expected [c, i, j]");
      std::array<double, 3> term{as_number(t[0], field), as_number(t[1], field), as_number(t[2], field)};
      for (int k = 1; k < 3; ++k)
        if (term[k] < 0 || term[k] != std::floor(term[k]))
          throw ValidationError(field, "exponents must be nonnegative integers");
      out.push_back(term);
    }
    return out;
  }

 private:
  std::set<std::string>& seen_;
};

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, start = 0;
  const std::size_t stop = std::min(byte, text.size());
  for (std::size_t i = 0; i + 1 < stop; ++i)
    if (text[i] == '\n') {
      ++line;
      start = i + 1;
    }
  std::size_t end = text.find('\n', start);
  if (end == std::string::npos) end = text.size();
  const std::size_t column = stop > start ? stop - start : 1;
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
         text.substr(start, end - start);
}

json forcing_json(const ForcingSpec& f) {
  if (!f.builtin.empty()) return {{"builtin", f.builtin}, {"scale", f.scale}};
  return {{"x", f.poly_x}, {"y", f.poly_y}};
}

json recipe_json(const ProblemConfig& c) {
  return {{"nu_gen", c.uD.nu_gen}, {"radius_gen", c.uD.radius_gen}, {"h_gen", c.uD_mesh_size()}, {"f", forcing_json(c.uD.f)}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string boundary_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "boundary_%04zu.csv", k);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- config

fem::VectorFunction ForcingSpec::function() const {
  const double s = scale;
  if (builtin == "zero" || (builtin == "cubic" && s == 0.0)) return [](Vec2) { return Vec2{0.0, 0.0}; };
  if (builtin == "cubic") return [s](Vec2 x) { return Vec2{0.1 * s * x.y * x.y * x.y, -0.1 * s * x.x * x.x * x.x}; };
  return [px = poly_x, py = poly_y](Vec2 x) {
    Vec2 out{0.0, 0.0};
    for (const auto& t : px) out.x += monomial(t[0], t[1], t[2], x);
    for (const auto& t : py) out.y += monomial(t[0], t[1], t[2], x);
    return out;
  };
}

void ProblemConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be positive");
  };
  positive(nu, "nu");
  positive(h, "h");
  positive(dt, "dt");
  positive(eps_robin, "eps_robin");
  positive(alpha, "alpha");
  positive(tol, "tol");
  positive(holdall_radius, "holdall_radius");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma", "must be nonnegative");
  if (max_iters < 0) throw ValidationError("max_iters", "must be nonnegative");
  if (max_backtracks < 0) throw ValidationError("line_search.max_backtracks", "must be nonnegative");
  if (!(omega_margin >= 0.0)) throw ValidationError("line_search.omega_margin", "must be nonnegative");
  if (containment_samples < 3) throw ValidationError("line_search.containment_samples", "must be at least 3");
  if (workers < 0) throw ValidationError("workers", "must be nonnegative");
  if (u0 != "zero") throw ValidationError("u0", "only the builtin 'zero' is supported");
  positive(uD.nu_gen, "uD.nu_gen");
  positive(uD.radius_gen, "uD.radius_gen");
  if (uD.h_gen) positive(*uD.h_gen, "uD.h_gen");
  newton.validate();
  if (T_list.empty()) throw ValidationError("T_list", "must not be empty");
  for (double T : T_list) {
    try {
      (void)transient::TimeGrid::make(T, dt);
    } catch (const ValidationError& e) {
      throw ValidationError("T_list", e.what());
    }
  }
  for (std::size_t i = 0; i < T_list.size(); ++i)
    for (std::size_t j = i + 1; j < T_list.size(); ++j)
      if (T_list[i] == T_list[j]) throw ValidationError("T_list", "duplicate terminal time " + format_T(T_list[i]));
  for (const auto* shape : {&omega, &initial_domain}) {
    try {
      geom::validate(*shape);
    } catch (const InvalidShapeError& e) {
      throw ValidationError(shape == &omega ? "omega" : "initial_domain", e.what());
    }
  }
}

ProblemConfig parse_config(const std::string& text, const std::string& source) {
  ProblemConfig c;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
  if (blank) {
    c.validate();
    return c;
  }
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + line_context(text, e.byte) + " (" + e.what() + ")");
  }
  Reader::check_keys(root, "",
                     {"nu", "gamma", "f", "omega", "initial_domain", "holdall_radius", "h", "dt", "T_list", "eps_robin",
                      "alpha", "tol", "max_iters", "newton", "u0", "uD", "line_search", "workers", "record_wall_time"});
  Reader r(c.explicit_keys);
  r.number(root, "", "nu", c.nu);
  r.number(root, "", "gamma", c.gamma);
  if (const json* v = r.find(root, "", "f")) c.f = r.forcing(*v, "f");
  if (const json* v = r.find(root, "", "omega")) c.omega = r.shape(*v, "omega");
  if (const json* v = r.find(root, "", "initial_domain")) c.initial_domain = r.shape(*v, "initial_domain");
  r.number(root, "", "holdall_radius", c.holdall_radius);
  r.number(root, "", "h", c.h);
  r.number(root, "", "dt", c.dt);
  if (const json* v = r.find(root, "", "T_list")) {
    if (v->is_number()) {
      c.T_list = {v->get<double>()};
    } else if (v->is_array()) {
      c.T_list.clear();
      for (const auto& t : *v) c.T_list.push_back(Reader::as_number(t, "T_list"));
    } else {
      throw ValidationError("T_list", "expected a list of numbers");
    }
  }
  r.number(root, "", "eps_robin", c.eps_robin);
  r.number(root, "", "alpha", c.alpha);
  r.number(root, "", "tol", c.tol);
  r.integer(root, "", "max_iters", c.max_iters);
  if (const json* v = r.find(root, "", "newton")) {
    Reader::check_keys(*v, "newton", {"tol", "max_iter", "damping"});
    r.number(*v, "newton", "tol", c.newton.tol);
    r.integer(*v, "newton", "max_iter", c.newton.max_iter);
    r.number(*v, "newton", "damping", c.newton.damping);
  }
  r.string(root, "", "u0", c.u0);
  if (const json* v = r.find(root, "", "uD")) {
    Reader::check_keys(*v, "uD", {"nu_gen", "radius_gen", "h_gen", "f"});
    r.number(*v, "uD", "nu_gen", c.uD.nu_gen);
    r.number(*v, "uD", "radius_gen", c.uD.radius_gen);
    double hg = 0.0;
    if (v->contains("h_gen")) {
      r.number(*v, "uD", "h_gen", hg);
      c.uD.h_gen = hg;
    }
    if (const json* fv = r.find(*v, "uD", "f")) c.uD.f = r.forcing(*fv, "uD.f");
  }
  if (const json* v = r.find(root, "", "line_search")) {
    Reader::check_keys(*v, "line_search", {"max_backtracks", "omega_margin", "containment_samples"});
    r.integer(*v, "line_search", "max_backtracks", c.max_backtracks);
    r.number(*v, "line_search", "omega_margin", c.omega_margin);
    r.integer(*v, "line_search", "containment_samples", c.containment_samples);
  }
  r.integer(root, "", "workers", c.workers);
  r.boolean(root, "", "record_wall_time", c.record_wall_time);
  c.validate();
  return c;
}

ProblemConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_desk_scale(ProblemConfig& config) {
  if (!config.explicit_keys.count("h")) config.h = 0.2;
  if (!config.explicit_keys.count("T_list")) config.T_list = {1, 2, 4, 8, 16, 32};
  config.validate();
}

// ---------------------------------------------------------------- desired velocity

DesiredVelocity generate_desired_velocity(const ProblemConfig& config) {
  config.validate();
  const double h = config.uD_mesh_size();
  const geom::Circle disk{{0.0, 0.0}, config.uD.radius_gen};
  const auto loops = shape::observation_loops(config.omega, h);
  auto mesh = geom::triangulate(geom::discretize_boundary(disk, h), h, loops);
  const auto space = fem::build_space(std::move(mesh));
  ++g_generation_solves;
  return {stationary::solve_stokes(space, config.uD.f.function(), config.uD.nu_gen)};
}

long desired_velocity_solve_count() { return g_generation_solves.load(); }

void save_desired_velocity(const fs::path& dir, const ProblemConfig& config, const DesiredVelocity& ud) {
  ensure_dir(dir);
  io::write_mesh_file((dir / "ud_mesh.txt").string(), ud.field.space->mesh());
  io::write_flow_coefficients((dir / "ud_field.txt").string(), ud.field);
  std::ofstream os(dir / "ud_recipe.json");
  os << recipe_json(config).dump(2) << '\n';
  io::write_flow_vtk((dir / "ud.vtk").string(), ud.field, "uD_");
}

std::optional<DesiredVelocity> load_desired_velocity(const fs::path& dir, const ProblemConfig& config) {
  std::ifstream is(dir / "ud_recipe.json");
  if (!is) return std::nullopt;
  json stored;
  try {
    is >> stored;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (stored != recipe_json(config)) return std::nullopt;
  auto space = fem::build_space(io::read_mesh_file((dir / "ud_mesh.txt").string()));
  return DesiredVelocity{io::read_flow_coefficients((dir / "ud_field.txt").string(), std::move(space))};
}

DesiredVelocity obtain_desired_velocity(const fs::path& dir, const ProblemConfig& config) {
  if (auto stored = load_desired_velocity(dir, config)) return std::move(*stored);
  auto ud = generate_desired_velocity(config);
  save_desired_velocity(dir, config, ud);
  return ud;
}

// ---------------------------------------------------------------- scenario

geom::Mesh initial_mesh(const ProblemConfig& config) {
  const auto loops = shape::observation_loops(config.omega, config.h);
  return geom::triangulate(geom::discretize_boundary(config.initial_domain, config.h), config.h, loops);
}

shape::FlowProblem make_problem(const ProblemConfig& config, const DesiredVelocity& ud) {
  shape::FlowProblem p;
  p.nu = config.nu;
  p.gamma = config.gamma;
  p.f = config.f.function();
  p.u0 = {};
  p.omega = config.omega;
  p.target = ud.evaluator();
  return p;
}

shape::OptimizationSettings make_settings(const ProblemConfig& config) {
  shape::OptimizationSettings s;
  s.eps = config.eps_robin;
  s.tol = config.tol;
  s.max_iters = config.max_iters;
  s.newton = config.newton;
  s.line_search.alpha = config.alpha;
  s.line_search.max_backtracks = config.max_backtracks;
  s.line_search.h = config.h;
  s.line_search.omega_margin = config.omega_margin;
  s.line_search.containment_samples = static_cast<std::size_t>(config.containment_samples);
  s.line_search.holdall_radius = config.holdall_radius;
  return s;
}

// ---------------------------------------------------------------- outputs

std::string format_T(double T) {
  if (T == std::round(T) && std::abs(T) < 1e15) return std::to_string(static_cast<long long>(T));
  return format_double(T);
}

void write_trace_csv(const fs::path& path, const shape::OptimizationTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "iter,J,tau_eff,backtracks,n_vertices,min_angle\n";
  for (const auto& r : trace.records)
    os << r.iter << ',' << format_double(r.J) << ',' << format_double(r.tau_eff) << ',' << r.backtracks << ','
       << r.n_vertices << ',' << format_double(r.min_angle) << '\n';
}

void write_run_outputs(const fs::path& dir, const shape::OptimizationResult& result) {
  ensure_dir(dir);
  write_trace_csv(dir / "trace.csv", result.trace);
  for (std::size_t k = 0; k < result.boundaries.size(); ++k)
    io::write_polyline_file((dir / boundary_name(k)).string(), result.boundaries[k]);
  io::write_mesh_file((dir / "final.mesh").string(), result.mesh);
  std::ofstream os(dir / "status.txt");
  os << result.trace.status << '\n';
  if (!result.trace.detail.empty()) os << result.trace.detail << '\n';
}

StationaryRun run_stationary(const ProblemConfig& config, const DesiredVelocity& ud, const fs::path& out_dir,
                             bool dump_fields) {
  const auto problem = make_problem(config, ud);
  StationaryRun run;
  run.result = shape::optimize_stationary(problem, initial_mesh(config), make_settings(config));
  run.J_s = run.result.J;
  run.boundary = geom::boundary_polyline(run.result.mesh);
  write_run_outputs(out_dir, run.result);

  const auto space = fem::build_space(run.result.mesh);
  const auto state =
      stationary::solve_navier_stokes_newton(space, problem.f, problem.nu, problem.gamma, config.newton).field;
  io::write_flow_vtk((out_dir / "final_state.vtk").string(), state);
  if (dump_fields) {
    const fem::ObservationTarget target(space, problem.omega, problem.target);
    const auto z = stationary::solve_stationary_adjoint(space, state, target, problem.nu, problem.gamma);
    io::write_flow_vtk((out_dir / "final_adjoint.vtk").string(), z, "adjoint_");
  }
  return run;
}

shape::OptimizationResult run_transient(const ProblemConfig& config, const DesiredVelocity& ud, double T,
                                        const fs::path& out_dir, bool dump_fields) {
  const auto grid = transient::TimeGrid::make(T, config.dt);
  const auto problem = make_problem(config, ud);
  auto result = shape::optimize_transient(problem, initial_mesh(config), grid, make_settings(config));
  write_run_outputs(out_dir, result);
  if (dump_fields) {
    const auto space = fem::build_space(result.mesh);
    const auto traj = transient::solve_forward(space, problem.u0, problem.f, problem.nu, problem.gamma, grid);
    char name[32];
    for (std::size_t n = 0; n < traj.fields.size(); ++n) {
      std::snprintf(name, sizeof name, "state_%04zu.vtk", n);
      io::write_flow_vtk((out_dir / name).string(), traj.fields[n]);
    }
  }
  return result;
}

// ---------------------------------------------------------------- sweep

double loglog_slope(const std::vector<GapRow>& rows, std::size_t count) {
  std::vector<const GapRow*> usable;
  for (const auto& r : rows)
    if (std::isfinite(r.gap) && r.gap > 0.0 && r.T > 0.0) usable.push_back(&r);
  std::sort(usable.begin(), usable.end(), [](const GapRow* a, const GapRow* b) { return a->T < b->T; });
  if (usable.size() > count) usable.erase(usable.begin(), usable.end() - static_cast<std::ptrdiff_t>(count));
  if (usable.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (const auto* r : usable) {
    mx += std::log(r->T);
    my += std::log(r->gap);
  }
  mx /= static_cast<double>(usable.size());
  my /= static_cast<double>(usable.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto* r : usable) {
    const double dx = std::log(r->T) - mx;
    sxy += dx * (std::log(r->gap) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void write_gap_table(const fs::path& path, const std::vector<GapRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "T,J_T,J_s,gap,hausdorff,iters,status,wall_time_s\n";
  for (const auto& r : rows)
    os << format_double(r.T) << ',' << format_double(r.J_T) << ',' << format_double(r.J_s) << ','
       << format_double(r.gap) << ',' << format_double(r.hausdorff) << ',' << r.iters << ',' << csv_safe(r.status)
       << ',' << format_double(r.wall_time_s) << '\n';
}

SweepResult run_sweep(const ProblemConfig& config, const DesiredVelocity& ud, const fs::path& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  using clock = std::chrono::steady_clock;

  const StationaryRun stat = run_stationary(config, ud, out_dir / "stationary");

  std::vector<double> Ts = config.T_list;
  std::sort(Ts.begin(), Ts.end());

  struct Job {
    std::optional<shape::OptimizationResult> result;
    std::string error;
    double seconds = 0.0;
  };
  std::vector<Job> jobs(Ts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < Ts.size(); i = next++) {
      const auto start = clock::now();
      try {
        const auto grid = transient::TimeGrid::make(Ts[i], config.dt);
        const auto problem = make_problem(config, ud);
        jobs[i].result = shape::optimize_transient(problem, initial_mesh(config), grid, make_settings(config));
      } catch (const std::exception& e) {
        jobs[i].error = e.what();
      }
      jobs[i].seconds = std::chrono::duration<double>(clock::now() - start).count();
    }
  };
  unsigned n_workers = config.workers > 0 ? static_cast<unsigned>(config.workers) : std::thread::hardware_concurrency();
  n_workers = std::clamp<unsigned>(n_workers, 1u, static_cast<unsigned>(Ts.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  SweepResult out;
  out.J_s = stat.J_s;
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    GapRow row;
    row.T = Ts[i];
    row.J_s = stat.J_s;
    row.wall_time_s = config.record_wall_time ? jobs[i].seconds : nan;
    if (jobs[i].result) {
      const auto& res = *jobs[i].result;
      write_run_outputs(out_dir / ("T_" + format_T(Ts[i])), res);
      row.J_T = res.J;
      row.gap = std::abs(res.J - stat.J_s);
      row.hausdorff = geom::hausdorff_distance(geom::boundary_polyline(res.mesh), stat.boundary);
      row.iters = static_cast<int>(res.trace.records.size()) - 1;
      row.status = res.trace.status;
    } else {
      row.J_T = row.gap = row.hausdorff = nan;
      row.status = "failed: " + jobs[i].error;
    }
    out.rows.push_back(row);
  }
  out.slope = loglog_slope(out.rows);

  write_gap_table(out_dir / "gap_table.csv", out.rows);
  std::ofstream os(out_dir / "sweep_summary.json");
  os << "{\n  \"J_s\": " << format_double(out.J_s) << ",\n  \"stationary_status\": \"" << stat.result.trace.status
     << "\",\n  \"stationary_iters\": " << stat.result.trace.records.size() - 1
     << ",\n  \"loglog_slope_largest_4\": " << (std::isfinite(out.slope) ? format_double(out.slope) : "null")
     << "\n}\n";
  return out;
}

}  // namespace nsshape::exp
