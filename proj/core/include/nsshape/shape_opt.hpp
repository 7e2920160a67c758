#pragma once

#include <any>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsshape/fem.hpp"
#include "nsshape/stationary.hpp"
#include "nsshape/transient.hpp"

namespace nsshape::shape {

using fem::FlowField;
using fem::SpacePtr;
using fem::VectorFunction;
using geom::Vec2;

/// Values of a density at the 3 Gauss points of every boundary face, in the
/// order of `TaylorHoodSpace::boundary_faces()`.
struct BoundaryScalarField {
  SpacePtr space;
  std::vector<std::array<double, 3>> values;

  static BoundaryScalarField zero(SpacePtr space);
  /// Point on face k at Gauss point q, and the face's outward unit normal.
  Vec2 point(std::size_t k, int q) const;
  Vec2 normal(std::size_t k) const;
  double l2_norm() const;
};

/// Density nu * (dv/dn . dz/dn) from the one-sided gradients of the element adjacent to each face.
BoundaryScalarField shape_gradient_stationary(const FlowField& v, const FlowField& z, double nu);
/// The same density for one time level: K(u^n, w^n).
BoundaryScalarField shape_gradient_kernel_time(const FlowField& u, const FlowField& w, double nu);

/// P2 vector displacement; vertices carry the values used for mesh motion.
struct DeformationField {
  SpacePtr space;
  std::vector<double> coefficients;  // velocity layout

  std::vector<Vec2> vertex_values() const;
  double boundary_l2_norm() const;
};

/// Robin smoothing eps (grad theta, grad phi) + (theta, phi)_boundary = -(g n, phi)_boundary.
/// The scalar matrix is factored once and shared by both components.
class RobinSolver {
 public:
  RobinSolver(SpacePtr space, double eps);
  DeformationField solve(const BoundaryScalarField& g) const;
  /// Relative residual of the most recent solve (max over components).
  double last_residual() const { return last_residual_; }

 private:
  SpacePtr space_;
  linalg::SparseMatrix matrix_;
  std::unique_ptr<linalg::LuFactorization> lu_;
  mutable double last_residual_ = 0.0;
};

/// (1/N)(theta_0/2 + theta_1 + ... + theta_N/2).
DeformationField average_deformation(std::span<const DeformationField> fields, int N);

/// Shape derivative in Hadamard form: integral over the boundary of g (theta . n).
double boundary_pairing(const BoundaryScalarField& g, const DeformationField& theta);

/// Objective evaluated on a candidate domain. `state` is opaque data kept for the next iteration.
struct Evaluation {
  SpacePtr space;
  double J = 0.0;
  std::any state;
};
using Evaluator = std::function<Evaluation(std::shared_ptr<const geom::Mesh>)>;

struct LineSearchSettings {
  double alpha = 1.0;
  int max_backtracks = 12;
  double h = 0.1;
  double omega_margin = 0.05;
  std::size_t containment_samples = 256;
  double holdall_radius = 6.0;
};

struct LineSearchResult {
  bool accepted = false;
  int backtracks = 0;      // i of the accepted step (or attempts made)
  double tau = 0.0;        // initial step alpha J / ||theta||
  double tau_eff = 0.0;    // 0.5^i tau
  Evaluation evaluation;
  std::string last_rejection;
};

/// Backtracking on T_i(x) = x + 0.5^i tau theta(x) followed by a remesh at spacing h.
LineSearchResult line_search_step(const geom::Mesh& mesh, const DeformationField& theta, double J_current,
                                  const Evaluator& evaluate, const geom::ShapeSpec& omega,
                                  const LineSearchSettings& settings);

/// Deformed and remeshed candidate, or nullopt (with a reason) when infeasible.
std::optional<geom::Mesh> deformed_candidate(const geom::Mesh& mesh, std::span<const Vec2> displacement, double step,
                                             const geom::ShapeSpec& omega, const LineSearchSettings& settings,
                                             std::string* reason = nullptr);

struct FlowProblem {
  double nu = 1.0;
  double gamma = 1.0;
  VectorFunction f;
  VectorFunction u0;  // empty means zero
  geom::ShapeSpec omega = geom::Circle{{0.0, 0.0}, 1.0};
  VectorFunction target;  // u_D
};

struct OptimizationSettings {
  double eps = 0.05;
  double tol = 1e-6;
  int max_iters = 100;
  LineSearchSettings line_search;
  stationary::NewtonSettings newton;
};

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double tau_eff = 0.0;
  int backtracks = 0;
  int n_vertices = 0;
  double min_angle = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> records;
  std::string status;  // "converged", "max_iters" or "stalled"
  std::string detail;  // last line-search rejection when stalled
};

struct OptimizationResult {
  OptimizationTrace trace;
  std::vector<geom::Polyline> boundaries;  // one per record
  geom::Mesh mesh;                         // final mesh
  double J = 0.0;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Internal constraint loops for meshing: the boundary of the observation region.
std::vector<geom::Polyline> observation_loops(const geom::ShapeSpec& omega, double h);

OptimizationResult optimize_stationary(const FlowProblem& problem, const geom::Mesh& initial,
                                       const OptimizationSettings& settings, const IterationCallback& on_iter = {});
OptimizationResult optimize_transient(const FlowProblem& problem, const geom::Mesh& initial,
                                      const transient::TimeGrid& grid, const OptimizationSettings& settings,
                                      const IterationCallback& on_iter = {});

/// Objective J_s = nu ||v - u_D||^2 on one mesh (Newton solve included).
double stationary_objective(const FlowProblem& problem, const SpacePtr& space,
                            const stationary::NewtonSettings& newton = {});

}  // namespace nsshape::shape
