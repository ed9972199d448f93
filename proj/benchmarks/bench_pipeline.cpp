#include "flowvote/baseline.hpp"
#include "flowvote/pipeline.hpp"
#include "flowvote/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace flowvote;

const BinnedTrace& day_trace() {
    static const BinnedTrace trace = [] {
        ScenarioSpec spec;
        spec.duration_bins = 96;
        spec.seed = 12;
        spec.random_injections.push_back({AnomalyKind::Scan, 4, 60, 200, Sizing::Tiny});
        spec.random_injections.push_back({AnomalyKind::DDoS, 2, 150, 400, Sizing::Small});
        return bin_records(generate(spec).records, spec.bin_width);
    }();
    return trace;
}

void BM_Generate(benchmark::State& state) {
    ScenarioSpec spec;
    spec.duration_bins = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate(spec).records.size());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * state.range(0)) * 13500);
}
BENCHMARK(BM_Generate)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_Election(benchmark::State& state) {
    const auto filtered = prefilter(day_trace(), {Heuristic::H1, 3, 64});
    for (auto _ : state) benchmark::DoNotOptimize(run_election(filtered).senators[0].size());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * filtered.records().size()));
}
BENCHMARK(BM_Election)->Unit(benchmark::kMillisecond);

void BM_DetectUnion(benchmark::State& state) {
    for (auto _ : state) {
        Detector det(day_trace(), {});
        benchmark::DoNotOptimize(det.detect(Method::VoteUnion).diagnoses.size());
    }
}
BENCHMARK(BM_DetectUnion)->Unit(benchmark::kMillisecond);

void BM_Apriori(benchmark::State& state) {
    const auto bin = day_trace().bin(10);
    const auto support = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mine_frequent(bin, support).size());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * bin.size()));
}
BENCHMARK(BM_Apriori)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Baseline(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(run_baseline(day_trace(), Thresholds{}).alarms.size());
}
BENCHMARK(BM_Baseline)->Unit(benchmark::kMillisecond);

}  // namespace
