#include <benchmark/benchmark.h>

#include <memory>

#include "degdiff/estimators.hpp"
#include "degdiff/kernel.hpp"
#include "degdiff/operators.hpp"
#include "degdiff/parallel.hpp"
#include "degdiff/sampler.hpp"
#include "degdiff/sde.hpp"
#include "degdiff/specfun.hpp"

using namespace degdiff;

namespace {

void BM_BesselI(benchmark::State& state) {
  const double x = static_cast<double>(state.range(0)) / 10.0;
  double acc = 0.0;
  for (auto _ : state) {
    acc += bessel_i(-0.6, x, BesselScaling::scaled);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_BesselI)->Arg(1)->Arg(50)->Arg(400);

void BM_DensityZ(benchmark::State& state) {
  const auto p = kernel_params(0.5);
  double y = 0.01, acc = 0.0;
  for (auto _ : state) {
    acc += density_z(p, 1.0, 1.0, y);
    y = y < 5.0 ? y * 1.01 : 0.01;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_DensityZ);

void BM_KernelMass(benchmark::State& state) {
  const auto p = kernel_params(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_mass(p, 1.0, 0.7));
}
BENCHMARK(BM_KernelMass);

void BM_SampleZ(benchmark::State& state) {
  const auto p = kernel_params(static_cast<double>(state.range(0)) / 10.0);
  Rng rng({1, 2});
  double acc = 0.0;
  for (auto _ : state) acc += sample_z(p, 0.5, 1.0, rng);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_SampleZ)->Arg(3)->Arg(5)->Arg(7);

void BM_ExactStep(benchmark::State& state) {
  ExactStepper s(kernel_params(0.5), 1.0);
  Rng rng({3, 4});
  for (auto _ : state) {
    s.step(1e-4, rng);
    benchmark::DoNotOptimize(s.squared_bessel());
  }
}
BENCHMARK(BM_ExactStep);

void BM_EulerStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto model = ModelSpec::constant_coefficients(std::vector<double>(d, 0.5));
  const std::vector<double> x0(d, 1.0);
  EulerStepper s(model, x0, Projection::reflect);
  Rng rng({5, 6});
  for (auto _ : state) {
    s.step(1e-4, rng);
    benchmark::DoNotOptimize(s.state().data());
  }
}
BENCHMARK(BM_EulerStep)->Arg(1)->Arg(3);

void BM_TransitionMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = std::make_shared<const Grid1D>(0.5, n, 20.0);
  double t = 1.0;
  for (auto _ : state) {
    const OperatorEngine e({g});
    benchmark::DoNotOptimize(e.transition(0, t).data());
    t *= 1.001;
  }
}
BENCHMARK(BM_TransitionMatrix)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_OccupationBatch(benchmark::State& state) {
  set_thread_count(1);
  PathSpec spec;
  spec.model = ModelSpec::constant_coefficients({0.5});
  spec.x0 = {0.5};
  spec.dt = 1e-3;
  spec.horizon = 20.0;
  spec.n_paths = 256;
  const std::vector<double> etas{0.1, 0.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(occupation_time(spec, etas, 2.0).exit_time.estimate);
    ++spec.seed;
  }
}
BENCHMARK(BM_OccupationBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
