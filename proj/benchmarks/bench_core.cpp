#include <benchmark/benchmark.h>

#include "nsshape/fem.hpp"
#include "nsshape/stationary.hpp"
#include "nsshape/transient.hpp"

namespace {

namespace geom = nsshape::geom;
namespace fem = nsshape::fem;
namespace linalg = nsshape::linalg;

geom::Vec2 forcing(geom::Vec2 x) { return {0.1 * x.y * x.y * x.y, -0.1 * x.x * x.x * x.x}; }

// Ellipse meshes at the mesh size given by the benchmark argument (in hundredths).
fem::SpacePtr ellipse_space(const benchmark::State& state) {
  const double h = static_cast<double>(state.range(0)) / 100.0;
  return fem::build_space(geom::triangulate(geom::discretize_boundary(geom::Ellipse{{0, 0}, 2.0, 3.0}, h), h));
}

void BM_AssembleStiffness(benchmark::State& state) {
  const auto s = ellipse_space(state);
  for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_stiffness(*s, 1.0));
  state.counters["dofs"] = s->velocity_dofs();
}

void BM_AssembleConvection(benchmark::State& state) {
  const auto s = ellipse_space(state);
  const auto a = fem::interpolate_nodal(*s, forcing);
  for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_convection(*s, a));
}

void BM_SaddleFactor(benchmark::State& state) {
  const auto s = ellipse_space(state);
  const auto k = linalg::saddle_point(fem::assemble_stiffness(*s, 1.0), fem::assemble_divergence(*s));
  const auto dofs = fem::saddle_constraints(*s);
  const std::vector<double> rhs(static_cast<std::size_t>(k.rows()), 1.0), zeros(dofs.size(), 0.0);
  const auto sys = fem::apply_dirichlet(k, rhs, dofs, zeros);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::LuFactorization(sys.matrix));
  state.counters["unknowns"] = k.rows();
}

void BM_NewtonSolve(benchmark::State& state) {
  const auto s = ellipse_space(state);
  for (auto _ : state) benchmark::DoNotOptimize(nsshape::stationary::solve_navier_stokes_newton(s, forcing, 1.0, 1.0));
}

void BM_ForwardStep(benchmark::State& state) {
  const auto s = ellipse_space(state);
  nsshape::transient::ForwardStepper stepper(s, 1.0, 1.0, 0.2, fem::assemble_load(*s, forcing));
  auto u = stepper.step(fem::FlowField::zero(s));
  for (auto _ : state) benchmark::DoNotOptimize(stepper.step(u));
}

}  // namespace

BENCHMARK(BM_AssembleStiffness)->Arg(40)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleConvection)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SaddleFactor)->Arg(40)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewtonSolve)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardStep)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
