#pragma once

#include <memory>
#include <vector>

#include "nsshape/fem.hpp"

namespace nsshape::transient {

using fem::FlowField;
using fem::SpacePtr;
using fem::VectorFunction;
using geom::Vec2;

struct TimeGrid {
  double T = 1.0;
  double dt = 0.2;
  int N = 5;

  /// Throws ValidationError unless T / dt is an integer within 1e-9.
  static TimeGrid make(double T, double dt);
  double time(int n) const { return n * dt; }
};

struct Trajectory {
  TimeGrid grid;
  std::vector<FlowField> fields;  // indices 0..N
};

/// x - gamma * a * dt (characteristic foot one step back).
inline Vec2 upwind_foot(Vec2 x, Vec2 a, double gamma, double dt) { return x - (gamma * dt) * a; }
/// x + gamma * a * dt.
inline Vec2 downwind_foot(Vec2 x, Vec2 a, double gamma, double dt) { return x + (gamma * dt) * a; }

/// Foot of x under the velocity field `a` (zero outside the mesh).
Vec2 upwind_foot(Vec2 x, const FlowField& a, geom::PointLocator& locator, double gamma, double dt);

/// Load (u o X, phi) where X(x) = x - shift * a(x), evaluated at the volume
/// quadrature points. `u` and `a` share one space.
std::vector<double> composed_load(const FlowField& u, const FlowField& a, double shift, geom::PointLocator& locator);

/// Forward Lagrange-Galerkin stepper: the matrix M/dt + nu A is factored once.
class ForwardStepper {
 public:
  ForwardStepper(SpacePtr space, double nu, double gamma, double dt, std::vector<double> load);
  FlowField step(const FlowField& previous);

 private:
  SpacePtr space_;
  double gamma_, dt_;
  std::vector<double> load_;
  std::unique_ptr<linalg::LuFactorization> lu_;
  std::vector<int> constraints_;
  geom::PointLocator locator_;
};

FlowField step_forward(const FlowField& previous, const VectorFunction& f, double nu, double gamma, double dt);

/// L2 projection of u0 onto the discretely constrained velocity space.
FlowField project_initial(const SpacePtr& space, const VectorFunction& u0);

/// N forward steps from the projection of u0 (zero when u0 is empty).
Trajectory solve_forward(const SpacePtr& space, const VectorFunction& u0, const VectorFunction& f, double nu,
                         double gamma, const TimeGrid& grid);

/// Backward downwind scheme with terminal condition w^N = 0.
Trajectory solve_adjoint_backward(const SpacePtr& space, const Trajectory& forward,
                                  const fem::ObservationTarget& target, double nu, double gamma);
/// Same scheme with an explicit velocity load per step (index 0..N-1), for synthetic tests.
Trajectory solve_adjoint_backward_loads(const SpacePtr& space, const Trajectory& forward,
                                        const std::vector<std::vector<double>>& loads, double nu, double gamma);

/// nu * trapezoidal time average of ||u^k - u_D||^2 over the observation region.
double evaluate_time_objective(const Trajectory& forward, const fem::ObservationTarget& target, double nu);

/// Trapezoidal average of per-step values: (1/N)(e_0/2 + e_1 + ... + e_N/2).
double trapezoid_average(std::span<const double> values);

}  // namespace nsshape::transient
