#include <benchmark/benchmark.h>

#include "trajkit/analysis.hpp"
#include "trajkit/scenarios.hpp"

using namespace trajkit;

static void BM_ParseExpression(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(expr::parse("(1+eps)*x^(1+2*eps) - sin(u)*y^2/2"));
}
BENCHMARK(BM_ParseExpression);

static void BM_ProgramEval(benchmark::State& state) {
  const auto e = expr::parse("x^3 - 2*x*y + sin(u)*y^2 + exp(-x^2)");
  const std::vector<std::string> slots{"x", "y", "u"};
  const expr::Program prog(e, slots);
  std::vector<double> v{0.3, -1.2, 0.7};
  for (auto _ : state) {
    v[0] += 1e-9;
    benchmark::DoNotOptimize(prog(v));
  }
}
BENCHMARK(BM_ProgramEval);

static void BM_Christoffel(benchmark::State& state) {
  const auto chart = charts::hyperbolic();
  Vector p(2);
  p << 0.2, 0.7;
  for (auto _ : state) benchmark::DoNotOptimize(chart.christoffel(p));
}
BENCHMARK(BM_Christoffel);

static void BM_IntegrateScenario(benchmark::State& state, const char* name) {
  const auto problem = scenarios::builtin(name);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(problem));
}
BENCHMARK_CAPTURE(BM_IntegrateScenario, ex2, "ex2")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_IntegrateScenario, ex3, "ex3")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_IntegrateScenario, planewave, "planewave")->Unit(benchmark::kMillisecond);

static void BM_CertifyPlaneWave(benchmark::State& state) {
  const auto problem = scenarios::builtin("planewave");
  const analysis::Region region{problem.position, 10.0};
  for (auto _ : state) benchmark::DoNotOptimize(analysis::certify(problem, region, 50.0));
}
BENCHMARK(BM_CertifyPlaneWave)->Unit(benchmark::kMillisecond);

static void BM_Oracle(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(scenarios::blowup_oracle(scenarios::OracleKind::Ex1, 1.0));
}
BENCHMARK(BM_Oracle);

BENCHMARK_MAIN();
