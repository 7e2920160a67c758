#include "nsshape/stationary.hpp"

#include <cmath>
#include <string>

#include "nsshape/errors.hpp"

namespace nsshape::stationary {

using linalg::SparseMatrix;

void NewtonSettings::validate() const {
  if (!(tol > 0.0)) throw ValidationError("newton.tol", "must be positive");
  if (max_iter < 1) throw ValidationError("newton.max_iter", "must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("newton.damping", "must lie in (0, 1]");
}

namespace {

FlowField split(const SpacePtr& space, const std::vector<double>& x) {
  FlowField out = FlowField::zero(space);
  const std::size_t nvel = out.velocity.size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nvel), out.velocity.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(nvel), x.end(), out.pressure.begin());
  return out;
}

std::vector<double> padded(const fem::TaylorHoodSpace& space, std::span<const double> vel) {
  std::vector<double> rhs(static_cast<std::size_t>(space.velocity_dofs() + space.pressure_dofs()), 0.0);
  std::copy(vel.begin(), vel.end(), rhs.begin());
  return rhs;
}

fem::ConstrainedSystem constrain(const fem::TaylorHoodSpace& space, const SparseMatrix& a, std::span<const double> rhs) {
  const auto dofs = fem::saddle_constraints(space);
  const std::vector<double> zeros(dofs.size(), 0.0);
  return fem::apply_dirichlet(a, rhs, dofs, zeros);
}

}  // namespace

FlowField solve_saddle(const SpacePtr& space, const SparseMatrix& k, std::span<const double> rhs) {
  const SparseMatrix b = fem::assemble_divergence(*space);
  const auto sys = constrain(*space, linalg::saddle_point(k, b), padded(*space, rhs));
  return split(space, linalg::solve_direct(sys.matrix, sys.rhs));
}

FlowField solve_stokes_load(const SpacePtr& space, std::span<const double> load, double nu) {
  return solve_saddle(space, fem::assemble_stiffness(*space, nu), load);
}

FlowField solve_stokes(const SpacePtr& space, const VectorFunction& f, double nu) {
  if (!(nu > 0.0)) throw ValidationError("nu", "must be positive");
  return solve_stokes_load(space, fem::assemble_load(*space, f), nu);
}

SparseMatrix newton_velocity_block(const fem::TaylorHoodSpace& space, std::span<const double> v, double nu,
                                   double gamma, const fem::TriangleRule& rule) {
  SparseMatrix k = fem::assemble_stiffness(space, nu);
  if (gamma != 0.0) {
    k = k.add(fem::assemble_convection(space, v, rule), gamma);
    k = k.add(fem::assemble_convection_linearized(space, v, rule), gamma);
  }
  return k;
}

SparseMatrix newton_jacobian(const fem::TaylorHoodSpace& space, std::span<const double> v, double nu, double gamma) {
  return linalg::saddle_point(newton_velocity_block(space, v, nu, gamma), fem::assemble_divergence(space));
}

std::vector<double> newton_residual(const fem::TaylorHoodSpace& space, const FlowField& state, const VectorFunction& f,
                                    double nu, double gamma, const fem::TriangleRule& rule) {
  SparseMatrix k = fem::assemble_stiffness(space, nu);
  if (gamma != 0.0) k = k.add(fem::assemble_convection(space, state.velocity, rule), gamma);
  const SparseMatrix b = fem::assemble_divergence(space);
  std::vector<double> r = linalg::spmv(k, state.velocity);
  const auto bt_q = linalg::spmv_transpose(b, state.pressure);
  const auto load = fem::assemble_load(space, f, rule);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += bt_q[i] - load[i];
  const auto div = linalg::spmv(b, state.velocity);
  r.insert(r.end(), div.begin(), div.end());
  return r;
}

double v_norm(const fem::TaylorHoodSpace& space, std::span<const double> velocity) {
  const SparseMatrix a = fem::assemble_stiffness(space, 1.0);
  return std::sqrt(std::max(0.0, linalg::dot(velocity, linalg::spmv(a, velocity))));
}

NewtonResult solve_navier_stokes_newton(const SpacePtr& space, const VectorFunction& f, double nu, double gamma,
                                        const NewtonSettings& settings) {
  settings.validate();
  if (!(nu > 0.0)) throw ValidationError("nu", "must be positive");
  if (gamma < 0.0) throw ValidationError("gamma", "must be nonnegative");

  NewtonResult result{solve_stokes(space, f, nu), {}};
  FlowField& state = result.field;
  const SparseMatrix a1 = fem::assemble_stiffness(*space, 1.0);
  auto seminorm = [&](std::span<const double> x) { return std::sqrt(std::max(0.0, linalg::dot(x, linalg::spmv(a1, x)))); };

  std::unique_ptr<linalg::LuFactorization> lu;
  for (int it = 0; it < settings.max_iter; ++it) {
    auto residual = newton_residual(*space, state, f, nu, gamma);
    for (double& r : residual) r = -r;
    const auto sys = constrain(*space, newton_jacobian(*space, state.velocity, nu, gamma), residual);
    if (lu) {
      lu->refactor(sys.matrix);
    } else {
      lu = std::make_unique<linalg::LuFactorization>(sys.matrix);
    }
    const auto delta = lu->solve(sys.rhs);

    const std::size_t nvel = state.velocity.size();
    for (std::size_t i = 0; i < nvel; ++i) state.velocity[i] += settings.damping * delta[i];
    for (std::size_t i = 0; i < state.pressure.size(); ++i) state.pressure[i] += settings.damping * delta[nvel + i];

    const double dv = settings.damping * seminorm(std::span<const double>(delta).first(nvel));
    const double vn = seminorm(state.velocity);
    const double ratio = vn > 0.0 ? dv / vn : dv;
    result.ratios.push_back(ratio);
    if (ratio < settings.tol) return result;
  }
  throw NonConvergenceError("Newton iteration did not converge in " + std::to_string(settings.max_iter) +
                                " iterations (last ratio " + std::to_string(result.ratios.back()) + ")",
                            result.ratios.back());
}

FlowField solve_stationary_adjoint(const SpacePtr& space, const FlowField& v, const fem::ObservationTarget& target,
                                   double nu, double gamma) {
  const SparseMatrix jt = newton_jacobian(*space, v.velocity, nu, gamma).transpose();
  const auto sys = constrain(*space, jt, padded(*space, target.misfit_load(v.velocity)));
  return split(space, linalg::solve_direct(sys.matrix, sys.rhs));
}

}  // namespace nsshape::stationary
