#pragma once

#include <vector>

#include "nsshape/fem.hpp"

namespace nsshape::stationary {

using fem::FlowField;
using fem::SpacePtr;
using fem::VectorFunction;

struct NewtonSettings {
  double tol = 1e-10;     // on ||dv||_V / ||v||_V
  int max_iter = 25;
  double damping = 1.0;   // in (0, 1]

  void validate() const;
};

struct NewtonResult {
  FlowField field;
  std::vector<double> ratios;  // one per Newton update
};

/// Solves [[K, B^T], [B, 0]] (v, q) = (rhs, 0) with homogeneous Dirichlet
/// velocity and pressure dof 0 pinned.
FlowField solve_saddle(const SpacePtr& space, const linalg::SparseMatrix& k, std::span<const double> rhs);

FlowField solve_stokes(const SpacePtr& space, const VectorFunction& f, double nu);
/// Stokes solve with an already assembled velocity load.
FlowField solve_stokes_load(const SpacePtr& space, std::span<const double> load, double nu);

/// Velocity block of the Newton Jacobian: nu A + gamma (N(v) + L(v)).
linalg::SparseMatrix newton_velocity_block(const fem::TaylorHoodSpace& space, std::span<const double> v, double nu,
                                           double gamma, const fem::TriangleRule& rule = fem::gauss7());
/// Full (unconstrained) Jacobian of the stationary residual at v.
linalg::SparseMatrix newton_jacobian(const fem::TaylorHoodSpace& space, std::span<const double> v, double nu,
                                     double gamma);

/// Residual [nu A v + gamma N(v) v + B^T q - F ; B v].
std::vector<double> newton_residual(const fem::TaylorHoodSpace& space, const FlowField& state, const VectorFunction& f,
                                    double nu, double gamma, const fem::TriangleRule& rule = fem::gauss7());

/// Newton iteration started from the Stokes solution. Throws
/// NonConvergenceError after max_iter updates.
NewtonResult solve_navier_stokes_newton(const SpacePtr& space, const VectorFunction& f, double nu, double gamma,
                                        const NewtonSettings& settings = {});

/// Adjoint (z, pi): transpose of the Newton Jacobian at v with load 2 (v - u_D, phi) on the observation region.
FlowField solve_stationary_adjoint(const SpacePtr& space, const FlowField& v, const fem::ObservationTarget& target,
                                   double nu, double gamma);

/// H1-seminorm of a velocity coefficient vector.
double v_norm(const fem::TaylorHoodSpace& space, std::span<const double> velocity);

}  // namespace nsshape::stationary
