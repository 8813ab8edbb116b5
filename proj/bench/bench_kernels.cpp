// Serial reference vs OpenMP kernels: ensemble runner and MAP grid search.

#include "sgpp/analysis.hpp"
#include "sgpp/geometry.hpp"
#include "sgpp/samplers.hpp"
#include "sgpp/score_field.hpp"

#include <benchmark/benchmark.h>

namespace {

struct Setup {
  sgpp::Manifold m = sgpp::Manifold::two_moons({}, {});
  sgpp::DiscreteSupportScore field = sgpp::atoms_from_manifold(m);
  sgpp::TimeGrid grid = sgpp::make_time_grid(0.9, 1e-3, 30, sgpp::Spacing::geometric);
  sgpp::GuidanceParams p;

  Setup() {
    p.sigma_p = 0.2;
    p.x_ref = sgpp::Vec::Zero(2);
    p.x_ref(1) = 1.0;
  }

  sgpp::TrajectoryGenerator generator() const {
    return [this](sgpp::RngStream& rng) {
      return sgpp::run_sgpp_descent(field, &m, grid, p, 2, sgpp::StepRule::fraction(0.5), rng);
    };
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const auto gen = setup().generator();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgpp::run_ensemble_serial(gen, static_cast<std::size_t>(state.range(0)), 7));
  }
}

void BM_EnsembleParallel(benchmark::State& state) {
  const auto gen = setup().generator();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sgpp::run_ensemble(gen, static_cast<std::size_t>(state.range(0)), 7, sgpp::Execution::parallel()));
  }
}

void BM_MapOracleSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgpp::map_oracle_serial(s.m, s.p.x_ref, 0.05, static_cast<std::size_t>(state.range(0))));
  }
}

void BM_MapOracleParallel(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgpp::map_oracle(s.m, s.p.x_ref, 0.05, static_cast<std::size_t>(state.range(0)),
                                              sgpp::Execution::parallel()));
  }
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapOracleSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapOracleParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
