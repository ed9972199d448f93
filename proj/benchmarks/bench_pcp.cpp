#include "flowvote/pcp.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

Eigen::MatrixXd counts_with_spikes(Eigen::Index rows, Eigen::Index cols) {
    std::mt19937_64 rng(5);
    std::poisson_distribution<int> pois(40.0);
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = pois(rng);
    for (int s = 0; s < 10; ++s) x(static_cast<Eigen::Index>(rng() % rows), static_cast<Eigen::Index>(rng() % cols)) += 800;
    return x;
}

void BM_PcpDecompose(benchmark::State& state) {
    const auto x = counts_with_spikes(state.range(0), state.range(1));
    int iters = 0;
    for (auto _ : state) {
        auto d = flowvote::pcp_decompose(x);
        iters = d.iterations;
        benchmark::DoNotOptimize(d.sparse.data());
    }
    state.counters["iterations"] = iters;
}
BENCHMARK(BM_PcpDecompose)->Args({96, 40})->Args({672, 60})->Args({1728, 100})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
