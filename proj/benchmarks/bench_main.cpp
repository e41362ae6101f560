#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "ergostop/finite_horizon.hpp"
#include "ergostop/infinite_horizon.hpp"
#include "ergostop/montecarlo.hpp"

namespace {

using namespace ergostop;

// Lazy walk on a line with negative mean running reward.
struct Walk {
    MarkovModel model;
    RewardSpec rewards;
};

Walk make_walk(std::size_t n) {
    const auto size = static_cast<Eigen::Index>(n);
    Matrix p = Matrix::Zero(size, size);
    std::vector<std::string> names;
    Vector f(size), g(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        names.push_back("s" + std::to_string(i));
        p(i, i) = 0.5;
        const double side = (i == 0 || i + 1 == size) ? 0.5 : 0.25;
        if (i > 0) p(i, i - 1) = side;
        if (i + 1 < size) p(i, i + 1) = side;
        f(i) = -1.0 + 0.5 * std::cos(static_cast<double>(i));
        g(i) = 5.0 * std::sin(0.3 * static_cast<double>(i));
    }
    MarkovModel m = build_dtmc(std::move(names), p, 1.0);
    RewardSpec r = make_rewards(m, std::move(f), std::move(g));
    return {std::move(m), std::move(r)};
}

void BM_BackwardInduction(benchmark::State& state) {
    const Walk w = make_walk(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_finite_horizon(w.model, w.rewards, 200));
}
BENCHMARK(BM_BackwardInduction)->Arg(16)->Arg(64)->Arg(256);

void BM_InfiniteSolve(benchmark::State& state) {
    const Walk w = make_walk(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_infinite_horizon(w.model, w.rewards));
}
BENCHMARK(BM_InfiniteSolve)->Arg(16)->Arg(64)->Arg(256);

void BM_PathSimulation(benchmark::State& state) {
    const Walk w = make_walk(32);
    const InfiniteHorizonSolution sol = solve_infinite_horizon(w.model, w.rewards);
    McOptions mc;
    mc.n_paths = 10000;
    mc.workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_functional(w.model, w.rewards, sol.region, 31, {64, 256}, mc));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mc.n_paths));
}
BENCHMARK(BM_PathSimulation)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
