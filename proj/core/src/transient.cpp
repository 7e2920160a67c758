#include "nsshape/transient.hpp"

#include <cmath>

#include "nsshape/errors.hpp"

namespace nsshape::transient {

using linalg::SparseMatrix;

TimeGrid TimeGrid::make(double T, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  if (!(T > 0.0)) throw ValidationError("T", "must be positive");
  const double ratio = T / dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError("T", "T = " + std::to_string(T) + " is not an integer multiple of dt = " + std::to_string(dt));
  return {T, dt, static_cast<int>(n)};
}

Vec2 upwind_foot(Vec2 x, const FlowField& a, geom::PointLocator& locator, double gamma, double dt) {
  return upwind_foot(x, fem::interpolate_velocity(a, x, locator), gamma, dt);
}

std::vector<double> composed_load(const FlowField& u, const FlowField& a, double shift, geom::PointLocator& locator) {
  const fem::TaylorHoodSpace& space = *u.space;
  const auto& rule = fem::gauss7();
  const int nn = space.node_count();
  std::vector<double> out(static_cast<std::size_t>(2 * nn), 0.0);
  for (int t = 0; t < space.element_count(); ++t) {
    const fem::ElementGeometry geo(space.mesh(), t);
    const auto& nodes = space.element_nodes(t);
    for (const auto& q : rule) {
      const Vec2 x = geo.map(q.bary);
      Vec2 value{0.0, 0.0};
      if (shift == 0.0) {
        value = u.velocity_in_element(t, q.bary);
      } else {
        const Vec2 foot = x - shift * a.velocity_in_element(t, q.bary);
        if (const auto loc = locator.locate(foot, t)) value = u.velocity_in_element(loc->element, loc->barycentric);
      }
      const auto phi = fem::P2Basis::values(q.bary);
      const double w = q.weight * geo.area;
      for (int i = 0; i < 6; ++i) {
        out[static_cast<std::size_t>(nodes[i])] += w * value.x * phi[i];
        out[static_cast<std::size_t>(nn + nodes[i])] += w * value.y * phi[i];
      }
    }
  }
  return out;
}

namespace {

SparseMatrix time_block(const fem::TaylorHoodSpace& space, double nu, double dt) {
  return fem::assemble_stiffness(space, nu).add(fem::assemble_mass(space), 1.0 / dt);
}

std::vector<double> zeros_for(const std::vector<int>& dofs) { return std::vector<double>(dofs.size(), 0.0); }

FlowField unpack(const SpacePtr& space, const std::vector<double>& x) {
  FlowField out = FlowField::zero(space);
  const std::size_t nvel = out.velocity.size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nvel), out.velocity.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(nvel), x.end(), out.pressure.begin());
  return out;
}

std::vector<double> saddle_rhs(const fem::TaylorHoodSpace& space, const std::vector<double>& vel) {
  std::vector<double> rhs(static_cast<std::size_t>(space.velocity_dofs() + space.pressure_dofs()), 0.0);
  std::copy(vel.begin(), vel.end(), rhs.begin());
  return rhs;
}

}  // namespace

ForwardStepper::ForwardStepper(SpacePtr space, double nu, double gamma, double dt, std::vector<double> load)
    : space_(std::move(space)), gamma_(gamma), dt_(dt), load_(std::move(load)),
      constraints_(fem::saddle_constraints(*space_)), locator_(space_->mesh()) {
  const SparseMatrix a = linalg::saddle_point(time_block(*space_, nu, dt), fem::assemble_divergence(*space_));
  const std::vector<double> dummy(static_cast<std::size_t>(a.rows()), 0.0);
  const auto sys = fem::apply_dirichlet(a, dummy, constraints_, zeros_for(constraints_));
  lu_ = std::make_unique<linalg::LuFactorization>(sys.matrix);
}

FlowField ForwardStepper::step(const FlowField& previous) {
  auto rhs = composed_load(previous, previous, gamma_ * dt_, locator_);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / dt_ + load_[i];
  auto full = saddle_rhs(*space_, rhs);
  for (int d : constraints_) full[static_cast<std::size_t>(d)] = 0.0;
  return unpack(space_, lu_->solve(full));
}

FlowField step_forward(const FlowField& previous, const VectorFunction& f, double nu, double gamma, double dt) {
  ForwardStepper stepper(previous.space, nu, gamma, dt, fem::assemble_load(*previous.space, f));
  return stepper.step(previous);
}

FlowField project_initial(const SpacePtr& space, const VectorFunction& u0) {
  FlowField out = FlowField::zero(space);
  if (!u0) return out;
  const auto& dofs = space->dirichlet_dofs();
  const auto sys = fem::apply_dirichlet(fem::assemble_mass(*space), fem::assemble_load(*space, u0), dofs, zeros_for(dofs));
  out.velocity = linalg::solve_direct(sys.matrix, sys.rhs);
  return out;
}

Trajectory solve_forward(const SpacePtr& space, const VectorFunction& u0, const VectorFunction& f, double nu,
                         double gamma, const TimeGrid& grid) {
  Trajectory traj{grid, {}};
  traj.fields.reserve(static_cast<std::size_t>(grid.N + 1));
  traj.fields.push_back(project_initial(space, u0));
  ForwardStepper stepper(space, nu, gamma, grid.dt, fem::assemble_load(*space, f));
  for (int n = 1; n <= grid.N; ++n) traj.fields.push_back(stepper.step(traj.fields.back()));
  return traj;
}

Trajectory solve_adjoint_backward_loads(const SpacePtr& space, const Trajectory& forward,
                                        const std::vector<std::vector<double>>& loads, double nu, double gamma) {
  const TimeGrid& grid = forward.grid;
  const double dt = grid.dt;
  Trajectory adj{grid, std::vector<FlowField>(static_cast<std::size_t>(grid.N + 1))};
  adj.fields[static_cast<std::size_t>(grid.N)] = FlowField::zero(space);

  const SparseMatrix base = time_block(*space, nu, dt);
  const SparseMatrix b = fem::assemble_divergence(*space);
  const auto constraints = fem::saddle_constraints(*space);
  const auto zeros = zeros_for(constraints);
  geom::PointLocator locator(space->mesh());
  std::unique_ptr<linalg::LuFactorization> lu;

  for (int n = grid.N - 1; n >= 0; --n) {
    const FlowField& un = forward.fields[static_cast<std::size_t>(n)];
    const FlowField& un1 = forward.fields[static_cast<std::size_t>(n + 1)];
    const FlowField& wn1 = adj.fields[static_cast<std::size_t>(n + 1)];

    SparseMatrix k = base;
    if (gamma != 0.0) k = k.add(fem::assemble_convection_adjoint(*space, un.velocity), gamma);
    auto rhs = composed_load(wn1, un1, -gamma * dt, locator);
    const auto& src = loads[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / dt + src[i];

    const auto sys = fem::apply_dirichlet(linalg::saddle_point(k, b), saddle_rhs(*space, rhs), constraints, zeros);
    if (lu) {
      lu->refactor(sys.matrix);
    } else {
      lu = std::make_unique<linalg::LuFactorization>(sys.matrix);
    }
    adj.fields[static_cast<std::size_t>(n)] = unpack(space, lu->solve(sys.rhs));
  }
  return adj;
}

Trajectory solve_adjoint_backward(const SpacePtr& space, const Trajectory& forward,
                                  const fem::ObservationTarget& target, double nu, double gamma) {
  std::vector<std::vector<double>> loads;
  loads.reserve(forward.fields.size());
  for (int n = 0; n < forward.grid.N; ++n)
    loads.push_back(target.misfit_load(forward.fields[static_cast<std::size_t>(n)].velocity));
  return solve_adjoint_backward_loads(space, forward, loads, nu, gamma);
}

double trapezoid_average(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("trapezoid_average: need at least two values");
  const std::size_t n = values.size() - 1;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k < n; ++k) sum += values[k];
  return sum / static_cast<double>(n);
}

double evaluate_time_objective(const Trajectory& forward, const fem::ObservationTarget& target, double nu) {
  std::vector<double> e;
  e.reserve(forward.fields.size());
  for (const auto& f : forward.fields) e.push_back(target.misfit(f.velocity));
  return nu * trapezoid_average(e);
}

}  // namespace nsshape::transient
