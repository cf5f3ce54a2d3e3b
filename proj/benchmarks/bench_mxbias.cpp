// Microbenchmarks for the hot paths: steady-state solves, the two-group
// split, closed-form biases, one region-map cell, and a small simulation.
#include <benchmark/benchmark.h>

#include "mxbias/meanfield.hpp"
#include "mxbias/numerics.hpp"
#include "mxbias/sim.hpp"
#include "mxbias/sweep.hpp"

namespace {

using namespace mxbias;

MarketParams bench_market() {
  MarketParams m;
  m.cost = 1.0;
  m.valuation = ValuationSpec::exponential(5.0);
  return m;
}

void bm_steady_state_closed(benchmark::State& state) {
  const MarketParams m = bench_market();
  const Tolerances tol;
  double p = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(steady_state(m, p, tol).s);
    p = p < 7.0 ? p + 1e-3 : 2.0;  // defeat value caching across iterations
  }
}
BENCHMARK(bm_steady_state_closed);

void bm_balance_bracketed(benchmark::State& state) {
  const MarketParams m = bench_market();
  const Tolerances tol;
  double p = 2.0;
  for (auto _ : state) {
    const double v = m.valuation.value(p);
    benchmark::DoNotOptimize(find_root_bracketed(
        [&](double s) {
          return (m.rho - s) * m.tau - m.lambda * s * v / (m.epsilon + s * v);
        },
        0.0, m.rho, tol));
    p = p < 7.0 ? p + 1e-3 : 2.0;
  }
}
BENCHMARK(bm_balance_bracketed);

void bm_lr_split(benchmark::State& state) {
  const MarketParams m = bench_market();
  const Tolerances tol;
  double p1 = 5.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lr_demands(m, 0.5, 5.0, p1, tol).d0);
    p1 = p1 < 6.0 ? p1 + 1e-3 : 5.05;
  }
}
BENCHMARK(bm_lr_split);

void bm_bias_closed_forms(benchmark::State& state) {
  const MarketParams m = bench_market();
  const Tolerances tol;
  double p = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bias_lr(m, p, tol) + bias_cr(m, p, tol));
    p = p < 7.0 ? p + 1e-3 : 2.0;
  }
}
BENCHMARK(bm_bias_closed_forms);

void bm_sweep_cell(benchmark::State& state) {
  SweepSpec spec;
  spec.params = bench_market();
  spec.params.cost = 0.5;
  spec.price_axis = SweepAxis{2.0, 6.0, 8, AxisScale::linear};
  spec.rate_axis = SweepAxis{0.1, 10.0, 8, AxisScale::log};
  spec.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_sweep(spec).size());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(bm_sweep_cell);

void bm_simulate_small(benchmark::State& state) {
  SimConfig cfg;
  cfg.params = bench_market();
  cfg.design = Design::global;
  cfg.p0 = cfg.p1 = 5.0;
  cfg.n_listings = 200;
  cfg.horizon = 50.0;
  cfg.replications = 1;
  cfg.threads = 1;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(simulate(cfg).mean_avail0);
  }
}
BENCHMARK(bm_simulate_small);

}  // namespace

BENCHMARK_MAIN();
