#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle_values.hpp"
#include "nsshape/errors.hpp"
#include "nsshape/stationary.hpp"

using namespace testing;
namespace linalg = nsshape::linalg;
namespace st = nsshape::stationary;

namespace {

struct Errors {
  double l2, h1;
};

Errors mms_errors(int n, double gamma) {
  const auto s = fem::build_space(square_mesh(n));
  const fem::VectorFunction f = [gamma](Vec2 p) { return mms_forcing(p, 1.0, gamma); };
  const auto v = gamma == 0.0 ? st::solve_stokes(s, f, 1.0) : st::solve_navier_stokes_newton(s, f, 1.0, gamma).field;
  const auto e = fem::velocity_error(*s, v.velocity, mms_velocity, mms_gradient);
  return {e.l2, e.h1_semi};
}

void check_orders(double gamma) {
  const Errors e8 = mms_errors(8, gamma), e16 = mms_errors(16, gamma), e32 = mms_errors(32, gamma);
  CHECK(std::log2(e8.l2 / e16.l2) >= 2.7);
  CHECK(std::log2(e16.l2 / e32.l2) >= 2.7);
  CHECK(std::log2(e8.h1 / e16.h1) >= 1.8);
  CHECK(std::log2(e16.h1 / e32.h1) >= 1.8);
}

std::vector<double> stacked(const fem::FlowField& f) {
  std::vector<double> x(f.velocity);
  x.insert(x.end(), f.pressure.begin(), f.pressure.end());
  return x;
}

struct ReferenceScenario {
  fem::SpacePtr space;
  geom::ShapeSpec omega = geom::Circle{{0, 0}, 1.0};
  st::NewtonResult newton;

  explicit ReferenceScenario(double h) : space(fem::build_space(disk_mesh_with_omega(2.0, h))) {
    newton = st::solve_navier_stokes_newton(space, cubic_forcing, 1.0, 1.0);
  }
};

const fem::VectorFunction kTarget = [](Vec2 p) { return Vec2{0.02 * p.y, -0.03 * p.x}; };

}  // namespace

TEST_SUITE("solve_stokes") {
  TEST_CASE("zero forcing gives the zero field") {
    const auto s = fem::build_space(disk_mesh(1.0, 0.3));
    const auto v = st::solve_stokes(s, [](Vec2) { return Vec2{}; }, 1.0);
    for (double x : v.velocity) CHECK(x == 0.0);
  }

  TEST_CASE("manufactured solution converges at the expected rates") { check_orders(0.0); }

  TEST_CASE("discrete divergence vanishes") {
    const auto s = fem::build_space(square_mesh(8));
    const auto v = st::solve_stokes(s, [](Vec2 p) { return mms_forcing(p, 1.0, 0.0); }, 1.0);
    CHECK(linalg::norm2(linalg::spmv(fem::assemble_divergence(*s), v.velocity)) <= 1e-9);
  }

  TEST_CASE("energy identity") {
    const auto s = fem::build_space(disk_mesh(2.0, 0.2));
    const double nu = 0.7;
    const auto v = st::solve_stokes(s, cubic_forcing, nu);
    const double lhs = nu * std::pow(st::v_norm(*s, v.velocity), 2);
    CHECK(rel_diff(lhs, linalg::dot(fem::assemble_load(*s, cubic_forcing), v.velocity)) <= 1e-8);
  }

  TEST_CASE("nonpositive viscosity is rejected") {
    const auto s = fem::build_space(square_mesh(2));
    CHECK_THROWS_AS(st::solve_stokes(s, cubic_forcing, 0.0), nsshape::ValidationError);
  }
}

TEST_SUITE("manufactured forcing") {
  TEST_CASE("matches the symbolic oracle") {
    for (std::size_t k = 0; k < oracle::kForcingPoints.size(); ++k) {
      const Vec2 p{oracle::kForcingPoints[k][0], oracle::kForcingPoints[k][1]};
      const Vec2 stokes = mms_forcing(p, 1.0, 0.0), ns = mms_forcing(p, 1.0, 1.0);
      CHECK(std::abs(stokes.x - oracle::kStokesForcing[k][0]) <= 1e-11);
      CHECK(std::abs(stokes.y - oracle::kStokesForcing[k][1]) <= 1e-11);
      CHECK(std::abs(ns.x - oracle::kNavierStokesForcing[k][0]) <= 1e-11);
      CHECK(std::abs(ns.y - oracle::kNavierStokesForcing[k][1]) <= 1e-11);
    }
  }
}

TEST_SUITE("solve_navier_stokes_newton") {
  TEST_CASE("linear problem takes one step") {
    const auto s = fem::build_space(disk_mesh(2.0, 0.3));
    const auto res = st::solve_navier_stokes_newton(s, cubic_forcing, 1.0, 0.0);
    CHECK(res.ratios.size() == 1);
    const auto stokes = st::solve_stokes(s, cubic_forcing, 1.0);
    for (std::size_t i = 0; i < stokes.velocity.size(); ++i)
      CHECK(std::abs(res.field.velocity[i] - stokes.velocity[i]) <= 1e-14);
  }

  TEST_CASE("manufactured solution converges at the expected rates") { check_orders(1.0); }

  TEST_CASE("reference scenario converges quadratically") {
    const ReferenceScenario p(0.1);
    const auto& r = p.newton.ratios;
    CHECK(r.size() <= 8);
    CHECK(r.back() < 1e-10);
    REQUIRE(r.size() >= 2);
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] < r[k - 1]);
    CHECK(r[r.size() - 1] <= std::pow(r[r.size() - 2], 1.5));
  }

  TEST_CASE("converged state has a vanishing residual") {
    const ReferenceScenario p(0.25);
    auto res = st::newton_residual(*p.space, p.newton.field, cubic_forcing, 1.0, 1.0);
    for (int d : fem::saddle_constraints(*p.space)) res[static_cast<std::size_t>(d)] = 0.0;
    CHECK(linalg::norm2(res) <= 1e-9 * linalg::norm2(fem::assemble_load(*p.space, cubic_forcing)));
  }

  TEST_CASE("energy identity holds up to the discrete convection defect") {
    const ReferenceScenario p(0.2);
    const auto& v = p.newton.field.velocity;
    const double f_v = linalg::dot(fem::assemble_load(*p.space, cubic_forcing), v);
    const double conv = linalg::dot(v, linalg::spmv(fem::assemble_convection(*p.space, v), v));
    CHECK(rel_diff(std::pow(st::v_norm(*p.space, v), 2) + conv, f_v) <= 1e-8);
    CHECK(rel_diff(std::pow(st::v_norm(*p.space, v), 2), f_v) <= 1e-3);
  }

  TEST_CASE("iteration limit raises non-convergence") {
    const auto s = fem::build_space(disk_mesh(2.0, 0.3));
    st::NewtonSettings tight;
    tight.max_iter = 1;
    tight.tol = 1e-14;
    CHECK_THROWS_AS(st::solve_navier_stokes_newton(s, cubic_forcing, 1.0, 1.0, tight), nsshape::NonConvergenceError);
  }

  TEST_CASE("settings validation") {
    st::NewtonSettings bad;
    bad.damping = 0.0;
    CHECK_THROWS_AS(bad.validate(), nsshape::ValidationError);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(bad.validate(), nsshape::ValidationError);
    bad = {};
    bad.tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), nsshape::ValidationError);
  }
}

TEST_SUITE("solve_stationary_adjoint") {
  TEST_CASE("matching target gives a zero adjoint") {
    const ReferenceScenario p(0.3);
    const auto state = p.newton.field;
    const fem::ObservationTarget target(p.space, p.omega, fem::cross_mesh_evaluator(state));
    const auto z = st::solve_stationary_adjoint(p.space, state, target, 1.0, 1.0);
    CHECK(linalg::norm2(z.velocity) <= 1e-12);
  }

  TEST_CASE("Stokes limit agrees with a Stokes solve of the misfit load") {
    const auto space = fem::build_space(disk_mesh_with_omega(2.0, 0.25));
    const auto v = st::solve_stokes(space, cubic_forcing, 1.0);
    const fem::ObservationTarget target(space, geom::Circle{{0, 0}, 1.0}, kTarget);
    const auto z = st::solve_stationary_adjoint(space, v, target, 1.0, 0.0);
    const auto ref = st::solve_stokes_load(space, target.misfit_load(v.velocity), 1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < z.velocity.size(); ++i) err = std::max(err, std::abs(z.velocity[i] - ref.velocity[i]));
    double scale = 0.0;
    for (double x : ref.velocity) scale = std::max(scale, std::abs(x));
    CHECK(err <= 1e-10 * scale);
  }

  TEST_CASE("duality with the Newton Jacobian") {
    const ReferenceScenario p(0.25);
    const auto& v = p.newton.field;
    const fem::ObservationTarget target(p.space, p.omega, kTarget);
    const auto z = st::solve_stationary_adjoint(p.space, v, target, 1.0, 1.0);
    const auto jac = st::newton_jacobian(*p.space, v.velocity, 1.0, 1.0);
    const auto load = target.misfit_load(v.velocity);
    const auto zz = stacked(z);
    const auto constrained = fem::saddle_constraints(*p.space);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> phi(zz.size());
      for (double& x : phi) x = u(rng);
      for (int d : constrained) phi[static_cast<std::size_t>(d)] = 0.0;
      const double lhs = linalg::dot(linalg::spmv(jac, phi), zz);
      const double rhs = linalg::dot(std::span(phi).first(load.size()), load);
      CHECK(rel_diff(lhs, rhs) <= 1e-8);
    }
  }

  TEST_CASE("adjoint solves the transposed Jacobian system") {
    const ReferenceScenario p(0.4);
    const auto& v = p.newton.field;
    const fem::ObservationTarget target(p.space, p.omega, kTarget);
    const auto z = st::solve_stationary_adjoint(p.space, v, target, 1.0, 1.0);
    auto r = linalg::spmv_transpose(st::newton_jacobian(*p.space, v.velocity, 1.0, 1.0), stacked(z));
    const auto load = target.misfit_load(v.velocity);
    for (std::size_t i = 0; i < load.size(); ++i) r[i] -= load[i];
    for (int d : fem::saddle_constraints(*p.space)) r[static_cast<std::size_t>(d)] = 0.0;
    double m = 0.0, scale = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    for (double x : load) scale = std::max(scale, std::abs(x));
    CHECK(m <= 1e-12 * std::max(1.0, scale));
  }
}
