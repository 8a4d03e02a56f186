#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "fgp/builtins.hpp"
#include "fgp/market.hpp"
#include "fgp/portfolio.hpp"
#include "fgp/replication.hpp"
#include "fgp/rng.hpp"

namespace {

using namespace fgp;
namespace bi = fgp::builtins;

MarketModel diagonal_market(int n, double sigma) {
    MarketModel m;
    m.n = n;
    m.d = n;
    m.growth.assign(n, 0.02);
    m.vol = Matrix(n, n);
    for (int i = 0; i < n; ++i) m.vol(i, i) = sigma;
    m.initial_prices.assign(n, 1.0);
    return m;
}

void BM_NormalQuantile(benchmark::State& state) {
    PathRng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(rng.next_gaussian());
}
BENCHMARK(BM_NormalQuantile);

void BM_SimulatePath(benchmark::State& state) {
    const MarketModel m = diagonal_market(3, 0.2);
    const TimeGrid grid{1.0, static_cast<int>(state.range(0))};
    std::uint64_t p = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_path(m, grid, 7, p++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePath)->Arg(1000)->Arg(10000);

void BM_IntegrateValue(benchmark::State& state) {
    const MarketModel m = diagonal_market(3, 0.2);
    const CovarianceView cov = covariance(m);
    const PricePath path = simulate_path(m, TimeGrid{1.0, static_cast<int>(state.range(0))}, 7);
    const auto f = bi::diversity(3, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_value(f, path, cov));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegrateValue)->Arg(1000)->Arg(10000);

void BM_PdeResidualAnalytic(benchmark::State& state) {
    Matrix sigma(3, 3);
    for (int i = 0; i < 3; ++i) sigma(i, i) = 0.04;
    const CovarianceView cov{Matrix(sigma)};
    const auto f = bi::sqrt_claim({0.2, 0.2, 0.2}, 1.0);
    std::vector<PdeSample> samples;
    PathRng rng(5);
    for (int k = 0; k < 50; ++k)
        samples.push_back({{0.5 + rng.next_uniform(), 0.5 + rng.next_uniform(),
                            0.5 + rng.next_uniform()},
                           0.9 * rng.next_uniform()});
    for (auto _ : state) {
        benchmark::DoNotOptimize(pde_residual(f, cov, 0.0, samples, 1e-6));
    }
}
BENCHMARK(BM_PdeResidualAnalytic);

void BM_PdeResidualFiniteDifference(benchmark::State& state) {
    Matrix sigma(3, 3);
    for (int i = 0; i < 3; ++i) sigma(i, i) = 0.04;
    const CovarianceView cov{Matrix(sigma)};
    const auto f = bi::sqrt_claim({0.2, 0.2, 0.2}, 1.0);
    std::vector<PdeSample> samples;
    PathRng rng(5);
    for (int k = 0; k < 50; ++k)
        samples.push_back({{0.5 + rng.next_uniform(), 0.5 + rng.next_uniform(),
                            0.5 + rng.next_uniform()},
                           0.9 * rng.next_uniform()});
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            pde_residual(f, cov, 0.0, samples, 1e-4, DerivativeBackend::finite_difference));
    }
}
BENCHMARK(BM_PdeResidualFiniteDifference);

void BM_HeatKernelSolve(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(heat_kernel_solve_1d(
            [](double z) { return std::exp(0.5 * z); }, 0.25, 0.7, 0.3));
    }
}
BENCHMARK(BM_HeatKernelSolve);

void BM_HomogenizedCallValue(benchmark::State& state) {
    const auto claim = bi::homogenized_bs_call(1.0, 0.2, 1.0);
    const std::vector<double> args{0.97, 1.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(claim.value(args, 0.4));
    }
}
BENCHMARK(BM_HomogenizedCallValue);

} // namespace

BENCHMARK_MAIN();
