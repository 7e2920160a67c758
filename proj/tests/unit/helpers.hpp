#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "nsshape/fem.hpp"
#include "nsshape/geometry.hpp"
#include "nsshape/shape_opt.hpp"
#include "nsshape/stationary.hpp"
#include "nsshape/transient.hpp"

namespace testing {

using nsshape::geom::Vec2;
namespace geom = nsshape::geom;
namespace fem = nsshape::fem;

inline constexpr double pi = std::numbers::pi;

inline geom::Polyline unit_square() { return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, true}; }

inline geom::Mesh square_mesh(int n) { return geom::rectangle_mesh({0, 0}, {1, 1}, n, n); }

inline geom::Mesh disk_mesh(double r, double h) {
  return geom::triangulate(geom::discretize_boundary(geom::Circle{{0, 0}, r}, h), h);
}

/// Disk with the unit circle inserted as an interior constraint.
inline geom::Mesh disk_mesh_with_omega(double r, double h) {
  const auto loop = geom::discretize_boundary(geom::Circle{{0, 0}, 1.0}, h);
  return geom::triangulate(geom::discretize_boundary(geom::Circle{{0, 0}, r}, h), h, std::span(&loop, 1));
}

inline Vec2 cubic_forcing(Vec2 x) { return {0.1 * x.y * x.y * x.y, -0.1 * x.x * x.x * x.x}; }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Scratch directory for file-producing tests.
inline std::filesystem::path scratch(const std::string& name) {
  const char* base = std::getenv("NSSHAPE_TEST_TMP");
  std::filesystem::path dir = base ? base : std::filesystem::temp_directory_path() / "nsshape_tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Manufactured solenoidal field vanishing on the unit-square boundary, with
// pressure cos(pi x) cos(pi y).
inline Vec2 mms_velocity(Vec2 p) {
  const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
  return {sx * sx * std::sin(2 * pi * p.y), -std::sin(2 * pi * p.x) * sy * sy};
}

inline std::array<Vec2, 2> mms_gradient(Vec2 p) {
  const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
  const double s2x = std::sin(2 * pi * p.x), s2y = std::sin(2 * pi * p.y);
  const double c2x = std::cos(2 * pi * p.x), c2y = std::cos(2 * pi * p.y);
  return {Vec2{pi * s2x * s2y, 2 * pi * sx * sx * c2y}, Vec2{-2 * pi * c2x * sy * sy, -pi * s2x * s2y}};
}

inline Vec2 mms_forcing(Vec2 p, double nu, double gamma) {
  const double x = p.x, y = p.y;
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  const double s2x = std::sin(2 * pi * x), s2y = std::sin(2 * pi * y);
  const double c2x = std::cos(2 * pi * x), c2y = std::cos(2 * pi * y);
  // u1 = sx^2 s2y: u1_xx = 2 pi^2 c2x s2y, u1_yy = -4 pi^2 sx^2 s2y
  const double lap1 = 2 * pi * pi * c2x * s2y - 4 * pi * pi * sx * sx * s2y;
  // u2 = -s2x sy^2: u2_xx = 4 pi^2 s2x sy^2, u2_yy = -2 pi^2 s2x c2y
  const double lap2 = 4 * pi * pi * s2x * sy * sy - 2 * pi * pi * s2x * c2y;
  const Vec2 u = mms_velocity(p);
  const auto g = mms_gradient(p);
  const Vec2 conv{u.x * g[0].x + u.y * g[0].y, u.x * g[1].x + u.y * g[1].y};
  const Vec2 grad_p{-pi * std::sin(pi * x) * std::cos(pi * y), -pi * std::cos(pi * x) * std::sin(pi * y)};
  return {-nu * lap1 + gamma * conv.x + grad_p.x, -nu * lap2 + gamma * conv.y + grad_p.y};
}

/// Random Dirichlet-compatible velocity vector.
inline std::vector<double> random_velocity(const fem::TaylorHoodSpace& space, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(space.velocity_dofs()));
  for (double& x : v) x = u(rng);
  for (int d : space.dirichlet_dofs()) v[static_cast<std::size_t>(d)] = 0.0;
  return v;
}

/// Implicit Euler Stokes step assembled from scratch:
/// (M/dt + nu A) u + B^T p = M u_prev / dt + load.
inline fem::FlowField euler_step(const fem::SpacePtr& s, std::span<const double> prev, std::span<const double> load,
                                 double nu, double dt) {
  namespace linalg = nsshape::linalg;
  const auto mass = fem::assemble_mass(*s);
  const auto k = mass.scaled(1.0 / dt).add(fem::assemble_stiffness(*s, nu));
  auto rhs = linalg::spmv(mass, prev);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / dt + load[i];
  return nsshape::stationary::solve_saddle(s, k, rhs);
}

/// L2 norm of an analytic field over the mesh, with a degree-10 rule.
inline double l2_norm(const geom::Mesh& mesh, const fem::VectorFunction& f) {
  const auto rule = fem::collapsed_gauss(6);
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry geo(mesh, static_cast<int>(t));
    for (const auto& q : rule) {
      const Vec2 v = f(geo.map(q.bary));
      sum += q.weight * geo.area * (v.x * v.x + v.y * v.y);
    }
  }
  return std::sqrt(sum);
}

/// Largest ratio, over n >= 1, of ||u^n||^2 + nu dt sum_{k<=n} ||u^k||_V^2
/// to ||u^0||^2 + (t_n / nu) ||f||^2.
inline double energy_ratio(const nsshape::transient::Trajectory& traj, double f_norm, double nu) {
  const auto& space = *traj.fields.front().space;
  const double u0 = fem::norms(space, traj.fields.front().velocity).l2;
  double dissipated = 0.0, worst = 0.0;
  for (std::size_t n = 1; n < traj.fields.size(); ++n) {
    const auto& v = traj.fields[n].velocity;
    dissipated += nu * traj.grid.dt * std::pow(nsshape::stationary::v_norm(space, v), 2);
    const double lhs = std::pow(fem::norms(space, v).l2, 2) + dissipated;
    const double rhs = u0 * u0 + traj.grid.time(static_cast<int>(n)) / nu * f_norm * f_norm;
    worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

/// Stationary reference scenario on the 2 x 3 ellipse: state, adjoint and
/// boundary gradient density, with u_D the nu = 0.2 Stokes flow on the disk of radius 2.
struct StationaryFixture {
  geom::ShapeSpec omega = geom::Circle{{0, 0}, 1.0};
  nsshape::shape::FlowProblem problem;
  geom::Mesh mesh;
  fem::SpacePtr space;
  fem::FlowField v, z;
  nsshape::shape::BoundaryScalarField g;
  double J = 0.0;

  explicit StationaryFixture(double h) {
    namespace st = nsshape::stationary;
    const auto loops = nsshape::shape::observation_loops(omega, h);
    const auto ud_mesh = geom::triangulate(geom::discretize_boundary(geom::Circle{{0, 0}, 2.0}, h), h, loops);
    const auto ud = st::solve_stokes(fem::build_space(ud_mesh), cubic_forcing, 0.2);
    problem.f = cubic_forcing;
    problem.omega = omega;
    problem.target = fem::cross_mesh_evaluator(ud);
    mesh = geom::triangulate(geom::discretize_boundary(geom::Ellipse{{0, 0}, 2.0, 3.0}, h), h, loops);
    space = fem::build_space(mesh);
    v = st::solve_navier_stokes_newton(space, cubic_forcing, 1.0, 1.0).field;
    const fem::ObservationTarget target(space, omega, problem.target);
    J = target.misfit(v.velocity);
    z = st::solve_stationary_adjoint(space, v, target, 1.0, 1.0);
    g = nsshape::shape::shape_gradient_stationary(v, z, 1.0);
  }

  /// Smooth radial field with random even angular modes. It vanishes for
  /// r <= 1.3, so the observation region stays fixed and the dropped
  /// observation-region term of the shape derivative plays no role.
  nsshape::shape::DeformationField smooth_field(unsigned seed) const {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::array<double, 5> c{};
    for (double& x : c) x = u(rng);
    const fem::VectorFunction f = [c](Vec2 p) {
      const double r = geom::norm(p), a = std::atan2(p.y, p.x);
      const double t = std::clamp((r - 1.3) / 0.5, 0.0, 1.0);
      const double m = c[0] + c[1] * std::cos(2 * a) + c[2] * std::sin(2 * a) + c[3] * std::cos(4 * a) +
                       c[4] * std::sin(4 * a);
      return (t * t * (3 - 2 * t) * m / r) * p;
    };
    return {space, fem::interpolate_nodal(*space, f)};
  }

  /// Relative gap between the Hadamard derivative and the forward difference at step tau.
  double fd_error(const nsshape::shape::DeformationField& theta, double tau) const {
    const double dJ = nsshape::shape::boundary_pairing(g, theta);
    const auto moved = fem::build_space(geom::deform_mesh(mesh, theta.vertex_values(), tau));
    const double fd = (nsshape::shape::stationary_objective(problem, moved) - J) / tau;
    return std::abs(fd - dJ) / std::abs(dJ);
  }
};

}  // namespace testing
