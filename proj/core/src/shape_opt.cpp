#include "nsshape/shape_opt.hpp"

#include <cmath>

#include "nsshape/errors.hpp"

namespace nsshape::shape {

using linalg::SparseMatrix;

namespace {

using Face = fem::TaylorHoodSpace::BoundaryFace;

// Barycentric coordinates of the point a + s (b - a) on a boundary face.
std::array<double, 3> face_bary(const fem::TaylorHoodSpace& space, const Face& f, double s) {
  const auto& tri = space.mesh().triangles[static_cast<std::size_t>(f.element)];
  std::array<double, 3> b{0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    if (tri[i] == f.a) b[i] = 1.0 - s;
    if (tri[i] == f.b) b[i] = s;
  }
  return b;
}

Vec2 face_normal(const fem::TaylorHoodSpace& space, const Face& f) {
  const Vec2 d = space.node_position(f.b) - space.node_position(f.a);
  return Vec2{d.y, -d.x} * (1.0 / geom::norm(d));
}

// Quadratic trace basis on a face at parameter s for nodes (a, mid, b).
std::array<double, 3> trace_basis(double s) {
  return {(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)};
}

BoundaryScalarField normal_derivative_product(const FlowField& u, const FlowField& w, double nu) {
  if (u.space != w.space) throw std::invalid_argument("shape gradient: fields live on different spaces");
  const auto& space = *u.space;
  const auto& line = fem::edge_gauss3();
  BoundaryScalarField out = BoundaryScalarField::zero(u.space);
  const auto& faces = space.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const Vec2 n = face_normal(space, faces[k]);
    for (int q = 0; q < 3; ++q) {
      const auto bary = face_bary(space, faces[k], line.nodes[static_cast<std::size_t>(q)]);
      const auto gu = u.velocity_gradient(faces[k].element, bary);
      const auto gw = w.velocity_gradient(faces[k].element, bary);
      const Vec2 du{geom::dot(gu[0], n), geom::dot(gu[1], n)};
      const Vec2 dw{geom::dot(gw[0], n), geom::dot(gw[1], n)};
      out.values[k][static_cast<std::size_t>(q)] = nu * geom::dot(du, dw);
    }
  }
  return out;
}

}  // namespace

BoundaryScalarField BoundaryScalarField::zero(SpacePtr space) {
  BoundaryScalarField f;
  f.values.assign(space->boundary_faces().size(), {0.0, 0.0, 0.0});
  f.space = std::move(space);
  return f;
}

Vec2 BoundaryScalarField::point(std::size_t k, int q) const {
  const auto& f = space->boundary_faces()[k];
  const double s = fem::edge_gauss3().nodes[static_cast<std::size_t>(q)];
  const Vec2 a = space->node_position(f.a), b = space->node_position(f.b);
  return a + s * (b - a);
}

Vec2 BoundaryScalarField::normal(std::size_t k) const { return face_normal(*space, space->boundary_faces()[k]); }

double BoundaryScalarField::l2_norm() const {
  const auto& line = fem::edge_gauss3();
  double sum = 0.0;
  const auto& faces = space->boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const double len = geom::distance(space->node_position(faces[k].a), space->node_position(faces[k].b));
    for (int q = 0; q < 3; ++q) sum += line.weights[static_cast<std::size_t>(q)] * len * values[k][q] * values[k][q];
  }
  return std::sqrt(sum);
}

BoundaryScalarField shape_gradient_stationary(const FlowField& v, const FlowField& z, double nu) {
  return normal_derivative_product(v, z, nu);
}

BoundaryScalarField shape_gradient_kernel_time(const FlowField& u, const FlowField& w, double nu) {
  return normal_derivative_product(u, w, nu);
}

std::vector<Vec2> DeformationField::vertex_values() const {
  const int nv = space->vertex_count(), nn = space->node_count();
  std::vector<Vec2> out(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i)
    out[static_cast<std::size_t>(i)] = {coefficients[static_cast<std::size_t>(i)],
                                        coefficients[static_cast<std::size_t>(nn + i)]};
  return out;
}

double DeformationField::boundary_l2_norm() const {
  const auto& line = fem::edge_gauss3();
  const int nn = space->node_count();
  double sum = 0.0;
  for (const auto& f : space->boundary_faces()) {
    const double len = geom::distance(space->node_position(f.a), space->node_position(f.b));
    const std::array<int, 3> nodes{f.a, f.mid_node, f.b};
    for (std::size_t q = 0; q < line.nodes.size(); ++q) {
      const auto l = trace_basis(line.nodes[q]);
      Vec2 v{0.0, 0.0};
      for (int i = 0; i < 3; ++i)
        v += l[i] * Vec2{coefficients[static_cast<std::size_t>(nodes[i])],
                         coefficients[static_cast<std::size_t>(nn + nodes[i])]};
      sum += line.weights[q] * len * geom::dot(v, v);
    }
  }
  return std::sqrt(sum);
}

RobinSolver::RobinSolver(SpacePtr space, double eps) : space_(std::move(space)) {
  if (!(eps > 0.0)) throw ValidationError("eps_robin", "must be positive");
  matrix_ = fem::assemble_scalar_stiffness(*space_).scaled(eps).add(fem::assemble_boundary_mass(*space_));
  lu_ = std::make_unique<linalg::LuFactorization>(matrix_);
}

DeformationField RobinSolver::solve(const BoundaryScalarField& g) const {
  const auto& line = fem::edge_gauss3();
  const int nn = space_->node_count();
  std::array<std::vector<double>, 2> rhs;
  rhs[0].assign(static_cast<std::size_t>(nn), 0.0);
  rhs[1].assign(static_cast<std::size_t>(nn), 0.0);
  const auto& faces = space_->boundary_faces();
  if (g.values.size() != faces.size()) throw std::invalid_argument("RobinSolver: boundary field size mismatch");
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const double len = geom::distance(space_->node_position(f.a), space_->node_position(f.b));
    const Vec2 n = face_normal(*space_, f);
    const std::array<int, 3> nodes{f.a, f.mid_node, f.b};
    for (std::size_t q = 0; q < 3; ++q) {
      const auto l = trace_basis(line.nodes[q]);
      const double w = -line.weights[q] * len * g.values[k][q];
      for (int i = 0; i < 3; ++i) {
        rhs[0][static_cast<std::size_t>(nodes[i])] += w * n.x * l[i];
        rhs[1][static_cast<std::size_t>(nodes[i])] += w * n.y * l[i];
      }
    }
  }
  DeformationField out{space_, std::vector<double>(static_cast<std::size_t>(2 * nn), 0.0)};
  last_residual_ = 0.0;
  for (int c = 0; c < 2; ++c) {
    const auto x = lu_->solve(rhs[c]);
    std::copy(x.begin(), x.end(), out.coefficients.begin() + c * nn);
    const double bn = linalg::norm2(rhs[c]);
    if (bn > 0.0) {
      auto r = linalg::spmv(matrix_, x);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rhs[c][i];
      last_residual_ = std::max(last_residual_, linalg::norm2(r) / bn);
    }
  }
  return out;
}

DeformationField average_deformation(std::span<const DeformationField> fields, int N) {
  if (N < 1 || fields.size() != static_cast<std::size_t>(N + 1))
    throw std::invalid_argument("average_deformation: expected N + 1 fields");
  DeformationField out{fields.front().space, std::vector<double>(fields.front().coefficients.size(), 0.0)};
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (fields[k].coefficients.size() != out.coefficients.size())
      throw std::invalid_argument("average_deformation: fields of different size");
    const double w = (k == 0 || k + 1 == fields.size()) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < out.coefficients.size(); ++i) out.coefficients[i] += w * fields[k].coefficients[i];
  }
  for (double& c : out.coefficients) c /= N;
  return out;
}

double boundary_pairing(const BoundaryScalarField& g, const DeformationField& theta) {
  const auto& line = fem::edge_gauss3();
  const auto& space = *theta.space;
  const int nn = space.node_count();
  const auto& faces = space.boundary_faces();
  if (g.values.size() != faces.size()) throw std::invalid_argument("boundary_pairing: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const double len = geom::distance(space.node_position(f.a), space.node_position(f.b));
    const Vec2 n = face_normal(space, f);
    const std::array<int, 3> nodes{f.a, f.mid_node, f.b};
    for (std::size_t q = 0; q < 3; ++q) {
      const auto l = trace_basis(line.nodes[q]);
      Vec2 v{0.0, 0.0};
      for (int i = 0; i < 3; ++i)
        v += l[i] * Vec2{theta.coefficients[static_cast<std::size_t>(nodes[i])],
                         theta.coefficients[static_cast<std::size_t>(nn + nodes[i])]};
      sum += line.weights[q] * len * g.values[k][q] * geom::dot(v, n);
    }
  }
  return sum;
}

std::vector<geom::Polyline> observation_loops(const geom::ShapeSpec& omega, double h) {
  return {geom::discretize_boundary(omega, h)};
}

std::optional<geom::Mesh> deformed_candidate(const geom::Mesh& mesh, std::span<const Vec2> displacement, double step,
                                             const geom::ShapeSpec& omega, const LineSearchSettings& settings,
                                             std::string* reason) {
  auto reject = [&](const char* why) -> std::optional<geom::Mesh> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  const geom::Mesh moved = geom::deform_mesh(mesh, displacement, step);
  const geom::Polyline boundary = geom::boundary_polyline(moved);
  for (const Vec2& p : boundary.points)
    if (geom::norm(p) >= settings.holdall_radius) return reject("leaves the hold-all");
  if (!geom::is_simple(boundary)) return reject("self-intersecting boundary");
  if (!geom::contains_region(boundary, omega, settings.containment_samples, settings.omega_margin))
    return reject("observation region not contained");
  try {
    const auto loops = observation_loops(omega, settings.h);
    geom::Mesh fresh = geom::remesh(boundary, settings.h, loops);
    const auto q = geom::mesh_quality(fresh);
    if (!(q.min_area > 0.0) || q.min_angle_deg < 20.0) return reject("remesh quality");
    return fresh;
  } catch (const InvalidShapeError&) {
    return reject("remesh failed");
  }
}

LineSearchResult line_search_step(const geom::Mesh& mesh, const DeformationField& theta, double J_current,
                                  const Evaluator& evaluate, const geom::ShapeSpec& omega,
                                  const LineSearchSettings& settings) {
  LineSearchResult out;
  const double norm = theta.boundary_l2_norm();
  if (!(norm > 0.0)) {
    out.last_rejection = "zero deformation";
    return out;
  }
  out.tau = settings.alpha * J_current / norm;
  const auto disp = theta.vertex_values();
  for (int i = 0; i <= settings.max_backtracks; ++i) {
    out.backtracks = i;
    const double step = out.tau * std::pow(0.5, i);
    auto cand = deformed_candidate(mesh, disp, step, omega, settings, &out.last_rejection);
    if (!cand) continue;
    Evaluation ev;
    try {
      ev = evaluate(std::make_shared<const geom::Mesh>(std::move(*cand)));
    } catch (const SingularSystemError&) {
      out.last_rejection = "singular state system";
      continue;
    } catch (const NonConvergenceError&) {
      out.last_rejection = "Newton did not converge";
      continue;
    }
    if (ev.J < J_current) {
      out.accepted = true;
      out.tau_eff = step;
      out.evaluation = std::move(ev);
      return out;
    }
    out.last_rejection = "no decrease";
  }
  return out;
}

namespace {

struct StationaryState {
  FlowField v;
  std::shared_ptr<fem::ObservationTarget> target;
};

struct TransientState {
  transient::Trajectory forward;
  std::shared_ptr<fem::ObservationTarget> target;
};

IterationRecord make_record(int iter, const Evaluation& ev, double tau_eff, int backtracks) {
  const auto q = geom::mesh_quality(ev.space->mesh());
  return {iter, ev.J, tau_eff, backtracks, ev.space->vertex_count(), q.min_angle_deg};
}

// Shared descent loop; `direction` builds the deformation from the current evaluation.
OptimizationResult descent_loop(const geom::Mesh& initial, const Evaluator& evaluate,
                                const std::function<DeformationField(const Evaluation&)>& direction,
                                const geom::ShapeSpec& omega, const OptimizationSettings& settings,
                                const IterationCallback& on_iter) {
  if (settings.max_iters < 0) throw ValidationError("max_iters", "must be nonnegative");
  OptimizationResult result;
  Evaluation current = evaluate(std::make_shared<const geom::Mesh>(initial));
  auto push = [&](const IterationRecord& rec, const Evaluation& ev) {
    result.trace.records.push_back(rec);
    result.boundaries.push_back(geom::boundary_polyline(ev.space->mesh()));
    if (on_iter) on_iter(rec);
  };
  push(make_record(0, current, 0.0, 0), current);
  result.trace.status = "max_iters";

  for (int k = 1; k <= settings.max_iters; ++k) {
    if (!(current.J > 0.0)) {
      result.trace.status = "converged";
      break;
    }
    const DeformationField theta = direction(current);
    auto ls = line_search_step(current.space->mesh(), theta, current.J, evaluate, omega, settings.line_search);
    if (!ls.accepted) {
      result.trace.status = "stalled";
      result.trace.detail = ls.last_rejection;
      break;
    }
    const double previous = current.J;
    current = std::move(ls.evaluation);
    push(make_record(k, current, ls.tau_eff, ls.backtracks), current);
    if (std::abs(current.J - previous) / current.J < settings.tol) {
      result.trace.status = "converged";
      break;
    }
  }
  result.mesh = current.space->mesh();
  result.J = current.J;
  return result;
}

}  // namespace

double stationary_objective(const FlowProblem& problem, const SpacePtr& space, const stationary::NewtonSettings& newton) {
  const auto res = stationary::solve_navier_stokes_newton(space, problem.f, problem.nu, problem.gamma, newton);
  const fem::ObservationTarget target(space, problem.omega, problem.target);
  return problem.nu * target.misfit(res.field.velocity);
}

OptimizationResult optimize_stationary(const FlowProblem& problem, const geom::Mesh& initial,
                                       const OptimizationSettings& settings, const IterationCallback& on_iter) {
  const Evaluator evaluate = [&](std::shared_ptr<const geom::Mesh> mesh) {
    Evaluation ev;
    ev.space = fem::build_space(std::move(mesh));
    auto state = std::make_shared<StationaryState>();
    state->v = stationary::solve_navier_stokes_newton(ev.space, problem.f, problem.nu, problem.gamma, settings.newton)
                   .field;
    state->target = std::make_shared<fem::ObservationTarget>(ev.space, problem.omega, problem.target);
    ev.J = problem.nu * state->target->misfit(state->v.velocity);
    ev.state = std::shared_ptr<const StationaryState>(state);
    return ev;
  };
  const auto direction = [&](const Evaluation& ev) {
    const auto& st = *std::any_cast<std::shared_ptr<const StationaryState>>(ev.state);
    const FlowField z = stationary::solve_stationary_adjoint(ev.space, st.v, *st.target, problem.nu, problem.gamma);
    const RobinSolver robin(ev.space, settings.eps);
    return robin.solve(shape_gradient_stationary(st.v, z, problem.nu));
  };
  return descent_loop(initial, evaluate, direction, problem.omega, settings, on_iter);
}

OptimizationResult optimize_transient(const FlowProblem& problem, const geom::Mesh& initial,
                                      const transient::TimeGrid& grid, const OptimizationSettings& settings,
                                      const IterationCallback& on_iter) {
  const Evaluator evaluate = [&](std::shared_ptr<const geom::Mesh> mesh) {
    Evaluation ev;
    ev.space = fem::build_space(std::move(mesh));
    auto state = std::make_shared<TransientState>();
    state->forward = transient::solve_forward(ev.space, problem.u0, problem.f, problem.nu, problem.gamma, grid);
    state->target = std::make_shared<fem::ObservationTarget>(ev.space, problem.omega, problem.target);
    ev.J = transient::evaluate_time_objective(state->forward, *state->target, problem.nu);
    ev.state = std::shared_ptr<const TransientState>(state);
    return ev;
  };
  const auto direction = [&](const Evaluation& ev) {
    const auto& st = *std::any_cast<std::shared_ptr<const TransientState>>(ev.state);
    const auto adjoint = transient::solve_adjoint_backward(ev.space, st.forward, *st.target, problem.nu, problem.gamma);
    const RobinSolver robin(ev.space, settings.eps);
    std::vector<DeformationField> per_step;
    per_step.reserve(st.forward.fields.size());
    for (std::size_t n = 0; n < st.forward.fields.size(); ++n)
      per_step.push_back(
          robin.solve(shape_gradient_kernel_time(st.forward.fields[n], adjoint.fields[n], problem.nu)));
    return average_deformation(per_step, grid.N);
  };
  return descent_loop(initial, evaluate, direction, problem.omega, settings, on_iter);
}

}  // namespace nsshape::shape
