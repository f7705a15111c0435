#include <benchmark/benchmark.h>

#include "qsol/balance.hpp"
#include "qsol/soliton_fields.hpp"
#include "qsol/spectral.hpp"

using namespace qsol;

namespace {

struct Fixture {
  ReflexivePolytope polytope;
  SectionBasis basis;
  Potential phi;
  QuadratureGrid grid;
  InvariantProduct h;
  TorusVector xi;
};

Fixture make(const char* name, int p) {
  auto P = load_preset(name);
  auto b = lattice_points(P, p);
  auto phi = reference_potential(P);
  auto xi = solve_xi_p(b, 1e-12).solution;
  QuadratureOptions o;
  o.margin = std::hypot(xi[0], xi[1]) / p;
  auto g = build_grid(phi, P, b, o);
  auto h = gram(phi, b, g);
  return {P, b, phi, g, h, xi};
}

void BM_BuildGrid(benchmark::State& state) {
  const auto P = load_preset("dP8");
  const auto b = lattice_points(P, static_cast<int>(state.range(0)));
  const auto phi = reference_potential(P);
  for (auto _ : state) benchmark::DoNotOptimize(build_grid(phi, P, b, {}));
}
BENCHMARK(BM_BuildGrid)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Gram(benchmark::State& state) {
  const auto f = make("dP8", static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gram(f.phi, f.basis, f.grid));
}
BENCHMARK(BM_Gram)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_TStep(benchmark::State& state) {
  const auto f = make("dP8", static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(t_step(f.h, f.xi, f.grid));
}
BENCHMARK(BM_TStep)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ChannelMatrix(benchmark::State& state) {
  const auto f = make("dP8", static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(channel_matrix(f.h, f.phi, f.xi, f.grid));
}
BENCHMARK(BM_ChannelMatrix)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SolveXiP(benchmark::State& state) {
  const auto b = lattice_points(load_preset("dP8"), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_xi_p(b, 1e-12));
}
BENCHMARK(BM_SolveXiP)->Arg(4)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_TzSpectrum(benchmark::State& state) {
  const auto P = load_preset("CP1");
  const auto phi = Potential::round_cp1();
  for (auto _ : state) benchmark::DoNotOptimize(tz_spectrum(phi, P, {0, 0}, 3, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_TzSpectrum)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
