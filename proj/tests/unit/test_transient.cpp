#include "doctest.h"
#include "helpers.hpp"
#include "nsshape/errors.hpp"

using namespace testing;
namespace linalg = nsshape::linalg;
namespace st = nsshape::stationary;
namespace tr = nsshape::transient;

namespace {

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

const geom::ShapeSpec kOmega = geom::Circle{{0, 0}, 1.0};

}  // namespace

TEST_SUITE("upwind_foot") {
  TEST_CASE("closed-form feet") {
    const Vec2 x{0.3, -0.4};
    const Vec2 a = tr::upwind_foot(x, Vec2{}, 1.0, 0.2);
    CHECK(a.x == x.x);
    CHECK(a.y == x.y);
    const Vec2 b = tr::upwind_foot(x, Vec2{1.0, 0.0}, 1.0, 0.2);
    CHECK(b.x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(b.y == x.y);
    const Vec2 c = tr::upwind_foot(x, Vec2{5.0, -7.0}, 0.0, 0.2);
    CHECK(c.x == x.x);
    CHECK(c.y == x.y);
    const Vec2 d = tr::downwind_foot(x, Vec2{1.0, 0.0}, 1.0, 0.2);
    CHECK(d.x == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("field feet interpolate the velocity") {
    const auto s = fem::build_space(disk_mesh(1.0, 0.25));
    fem::FlowField a = fem::FlowField::zero(s);
    a.velocity = fem::interpolate_nodal(*s, [](Vec2 p) { return Vec2{p.y, -p.x}; });
    geom::PointLocator loc(s->mesh());
    const Vec2 f = tr::upwind_foot({0.5, 0.25}, a, loc, 1.0, 0.1);
    CHECK(f.x == doctest::Approx(0.475).epsilon(1e-12));
    CHECK(f.y == doctest::Approx(0.30).epsilon(1e-12));
  }
}

TEST_SUITE("TimeGrid") {
  TEST_CASE("step counts") {
    const auto g = tr::TimeGrid::make(1.0, 0.2);
    CHECK(g.N == 5);
    CHECK(std::abs(g.N * g.dt - g.T) <= 1e-12);
    CHECK(tr::TimeGrid::make(0.2, 0.2).N == 1);
    CHECK(tr::TimeGrid::make(32.0, 0.2).N == 160);
  }

  TEST_CASE("incompatible horizons are rejected") {
    CHECK_THROWS_AS(tr::TimeGrid::make(1.0, 0.3), nsshape::ValidationError);
    CHECK_THROWS_AS(tr::TimeGrid::make(0.1, 0.2), nsshape::ValidationError);
    CHECK_THROWS_AS(tr::TimeGrid::make(1.0, 0.0), nsshape::ValidationError);
  }
}

TEST_SUITE("step_forward") {
  TEST_CASE("zero data stays zero") {
    const auto s = fem::build_space(disk_mesh(1.0, 0.3));
    const auto u = tr::step_forward(fem::FlowField::zero(s), [](Vec2) { return Vec2{}; }, 1.0, 1.0, 0.2);
    CHECK(max_abs(u.velocity) == 0.0);
  }

  TEST_CASE("Stokes limit equals implicit Euler") {
    const auto s = fem::build_space(disk_mesh(2.0, 0.25));
    const double dt = 0.2, nu = 0.8;
    const auto load = fem::assemble_load(*s, cubic_forcing);
    auto prev = st::solve_stokes(s, [](Vec2 p) { return Vec2{p.y, p.x * p.x}; }, 1.0);
    tr::ForwardStepper stepper(s, nu, 0.0, dt, load);
    for (int n = 0; n < 3; ++n) {
      const auto lg = stepper.step(prev);
      const auto ie = euler_step(s, prev.velocity, load, nu, dt);
      CHECK(max_diff(lg.velocity, ie.velocity) <= 1e-12);
      CHECK(max_diff(lg.pressure, ie.pressure) <= 1e-12);
      prev = lg;
    }
  }

  TEST_CASE("long-time limit approaches the stationary solution") {
    const auto s = fem::build_space(disk_mesh(2.0, 0.25));
    const double dt = 0.2;
    tr::ForwardStepper stepper(s, 1.0, 1.0, dt, fem::assemble_load(*s, cubic_forcing));
    auto u = fem::FlowField::zero(s);
    double change = 1.0;
    for (int n = 0; n < 1000 && change >= 1e-8; ++n) {
      const auto next = stepper.step(u);
      std::vector<double> d(next.velocity);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= u.velocity[i];
      change = fem::norms(*s, d).l2 / dt;
      u = next;
    }
    REQUIRE(change < 1e-8);
    const auto steady = st::solve_navier_stokes_newton(s, cubic_forcing, 1.0, 1.0).field;
    std::vector<double> d(u.velocity);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= steady.velocity[i];
    CHECK(st::v_norm(*s, d) <= 0.02 * st::v_norm(*s, steady.velocity));
  }
}

TEST_SUITE("composed_load") {
  TEST_CASE("uniform translation of a quadratic field") {
    const auto s = fem::build_space(square_mesh(8));
    const Vec2 a{1.0, 0.5};
    const double shift = 0.02;
    const fem::VectorFunction g = [](Vec2 p) { return Vec2{p.x * p.x - p.y, 2.0 * p.x * p.y + 1.0}; };
    fem::FlowField u = fem::FlowField::zero(s), adv = fem::FlowField::zero(s);
    u.velocity = fem::interpolate_nodal(*s, g);
    adv.velocity = fem::interpolate_nodal(*s, [a](Vec2) { return a; });
    geom::PointLocator loc(s->mesh());
    const auto load = tr::composed_load(u, adv, shift, loc);
    const auto ref = fem::assemble_load(*s, [&](Vec2 p) { return g(p - shift * a); });
    int checked = 0;
    for (int n = 0; n < s->node_count(); ++n) {
      const Vec2 x = s->node_position(n);
      if (x.x < 0.2 || x.x > 0.8 || x.y < 0.2 || x.y > 0.8) continue;
      ++checked;
      for (int c = 0; c < 2; ++c) {
        const auto i = static_cast<std::size_t>(s->velocity_dof(n, c));
        CHECK(std::abs(load[i] - ref[i]) <= 1e-12);
      }
    }
    CHECK(checked > 20);
  }
}

TEST_SUITE("solve_forward") {
  TEST_CASE("trajectory length and zero data") {
    const auto s = fem::build_space(disk_mesh(1.0, 0.3));
    const auto traj = tr::solve_forward(s, {}, [](Vec2) { return Vec2{}; }, 1.0, 1.0, tr::TimeGrid::make(1.0, 0.2));
    CHECK(traj.fields.size() == 6);
    for (const auto& f : traj.fields) {
      CHECK(f.space == s);
      CHECK(max_abs(f.velocity) == 0.0);
    }
  }

  TEST_CASE("initial field is the projection of u0") {
    const auto s = fem::build_space(disk_mesh(1.0, 0.3));
    const auto u0 = tr::project_initial(s, [](Vec2) { return Vec2{}; });
    CHECK(max_abs(u0.velocity) == 0.0);
  }

  TEST_CASE("energy estimate for every tested step size") {
    const auto m = disk_mesh(2.0, 0.25);
    const auto s = fem::build_space(m);
    const double f_norm = l2_norm(m, cubic_forcing);
    for (double dt : {0.05, 0.1, 0.2, 0.4}) {
      CAPTURE(dt);
      const auto traj = tr::solve_forward(s, {}, cubic_forcing, 1.0, 1.0, tr::TimeGrid::make(4.0, dt));
      CHECK(energy_ratio(traj, f_norm, 1.0) <= 4.0);
    }
  }
}

TEST_SUITE("solve_adjoint_backward") {
  const auto s = fem::build_space(disk_mesh_with_omega(2.0, 0.3));
  const auto grid = tr::TimeGrid::make(1.0, 0.2);

  TEST_CASE("zero source and terminal data give a zero adjoint") {
    const auto fwd = tr::solve_forward(s, {}, cubic_forcing, 1.0, 1.0, grid);
    const std::vector<std::vector<double>> loads(5, std::vector<double>(static_cast<std::size_t>(s->velocity_dofs())));
    const auto adj = tr::solve_adjoint_backward_loads(s, fwd, loads, 1.0, 1.0);
    REQUIRE(adj.fields.size() == 6);
    for (const auto& w : adj.fields) CHECK(max_abs(w.velocity) == 0.0);
  }

  TEST_CASE("Stokes limit equals backward implicit Euler") {
    const double nu = 0.9;
    const auto fwd = tr::solve_forward(s, {}, cubic_forcing, nu, 0.0, grid);
    const fem::ObservationTarget target(s, kOmega, [](Vec2 p) { return Vec2{0.05 * p.y, 0.0}; });
    const auto adj = tr::solve_adjoint_backward(s, fwd, target, nu, 0.0);
    CHECK(max_abs(adj.fields.back().velocity) == 0.0);
    for (int n = grid.N - 1; n >= 0; --n) {
      const auto ref = euler_step(s, adj.fields[static_cast<std::size_t>(n + 1)].velocity,
                                  target.misfit_load(fwd.fields[static_cast<std::size_t>(n)].velocity), nu, grid.dt);
      CHECK(max_diff(adj.fields[static_cast<std::size_t>(n)].velocity, ref.velocity) <= 1e-12);
    }
  }

  TEST_CASE("adjoint is linear in the source") {
    const auto fwd = tr::solve_forward(s, {}, cubic_forcing, 1.0, 1.0, grid);
    std::mt19937 rng(21);
    std::vector<std::vector<double>> loads, doubled;
    for (int n = 0; n < grid.N; ++n) {
      loads.push_back(random_velocity(*s, rng));
      doubled.push_back(loads.back());
      for (double& x : doubled.back()) x *= 2.0;
    }
    const auto w1 = tr::solve_adjoint_backward_loads(s, fwd, loads, 1.0, 1.0);
    const auto w2 = tr::solve_adjoint_backward_loads(s, fwd, doubled, 1.0, 1.0);
    for (std::size_t n = 0; n < w1.fields.size(); ++n) {
      std::vector<double> d(w2.fields[n].velocity);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= 2.0 * w1.fields[n].velocity[i];
      CHECK(linalg::norm2(d) <= 1e-10 * std::max(1e-300, linalg::norm2(w2.fields[n].velocity)));
    }
  }
}

TEST_SUITE("evaluate_time_objective") {
  TEST_CASE("trapezoid weights") {
    const std::vector<double> constant{2.5, 2.5, 2.5, 2.5};
    CHECK(tr::trapezoid_average(constant) == doctest::Approx(2.5).epsilon(1e-15));
    const std::vector<double> ramp{0.0, 1.0, 2.0};
    CHECK(tr::trapezoid_average(ramp) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("constant and matching trajectories") {
    const auto s = fem::build_space(disk_mesh_with_omega(2.0, 0.3));
    const auto v = st::solve_stokes(s, cubic_forcing, 1.0);
    tr::Trajectory traj{tr::TimeGrid::make(1.0, 0.2), std::vector<fem::FlowField>(6, v)};
    const fem::ObservationTarget zero(s, kOmega, [](Vec2) { return Vec2{}; });
    CHECK(tr::evaluate_time_objective(traj, zero, 0.5) == doctest::Approx(0.5 * zero.misfit(v.velocity)).epsilon(1e-14));
    const fem::ObservationTarget same(s, kOmega, fem::cross_mesh_evaluator(v));
    CHECK(tr::evaluate_time_objective(traj, same, 1.0) <= 1e-28);
  }

  TEST_CASE("agrees with a midpoint rule on the reference scenario") {
    const auto s = fem::build_space(disk_mesh_with_omega(2.0, 0.25));
    const auto ud = st::solve_stokes(s, cubic_forcing, 0.2);
    const fem::ObservationTarget target(s, kOmega, fem::cross_mesh_evaluator(ud));
    const auto grid = tr::TimeGrid::make(1.0, 0.2);
    const auto traj = tr::solve_forward(s, {}, cubic_forcing, 1.0, 1.0, grid);
    double midpoint = 0.0;
    for (int n = 0; n < grid.N; ++n) {
      std::vector<double> mid(traj.fields[static_cast<std::size_t>(n)].velocity);
      const auto& next = traj.fields[static_cast<std::size_t>(n + 1)].velocity;
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (mid[i] + next[i]);
      midpoint += target.misfit(mid) / grid.N;
    }
    CHECK(rel_diff(tr::evaluate_time_objective(traj, target, 1.0), midpoint) <= 0.02);
  }
}
