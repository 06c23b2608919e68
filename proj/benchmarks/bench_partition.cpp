#include <benchmark/benchmark.h>

#include "cnm/assignment.hpp"
#include "cnm/synth.hpp"

namespace {

using namespace cnm;

void BM_recursive_kl_partition(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int levels = static_cast<int>(state.range(1));
    const Graph g = generate_watts_strogatz(n, 10, 0.5, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(recursive_kl_partition(g, levels, 12));
    }
}
BENCHMARK(BM_recursive_kl_partition)
    ->Args({1024, 7})
    ->Args({4096, 9})
    ->Unit(benchmark::kMillisecond);

void BM_draw_replicates(benchmark::State& state) {
    const auto design = RandomizationDesign::bernoulli(82168, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(replicate_assignment(design, 0, 13));
    }
}
BENCHMARK(BM_draw_replicates);

}  // namespace

BENCHMARK_MAIN();
