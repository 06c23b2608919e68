#include <benchmark/benchmark.h>

#include "cnm/exposure.hpp"
#include "cnm/motifs.hpp"
#include "cnm/synth.hpp"

namespace {

using namespace cnm;

struct BenchGraph {
    Graph graph;
    MotifSchema schema;
    AssignmentVector z;

    explicit BenchGraph(std::size_t n, int k = 10)
        : graph(generate_watts_strogatz(n, k, 0.5, 7)),
          schema(MotifSchema::standard(false)),
          z(bernoulli_assignment(n, 0.5, 8)) {}
};

void BM_motif_counts_per_node(benchmark::State& state) {
    const BenchGraph bench(static_cast<std::size_t>(state.range(0)));
    const RepresentationBuilder builder(bench.graph, bench.schema, {});
    NodeId i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(builder.counts(i, bench.z.z));
        i = (i + 1) % bench.graph.node_count();
    }
}
BENCHMARK(BM_motif_counts_per_node)->Arg(4096)->Arg(16384);

void BM_representation_matrix(benchmark::State& state) {
    const BenchGraph bench(static_cast<std::size_t>(state.range(0)));
    const RepresentationBuilder builder(bench.graph, bench.schema, {});
    for (auto _ : state) {
        benchmark::DoNotOptimize(builder.build(bench.z, 9));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_representation_matrix)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_replicate_cache(benchmark::State& state) {
    const BenchGraph bench(4096);
    const RepresentationBuilder builder(bench.graph, bench.schema, {});
    const auto design = RandomizationDesign::bernoulli(4096, 0.5);
    for (auto _ : state) {
        const ReplicateCache cache(builder, design, static_cast<std::size_t>(state.range(0)), 3);
        benchmark::DoNotOptimize(cache.at(0, 0, 0));
    }
    state.SetItemsProcessed(state.iterations() * 4096 * state.range(0));
}
BENCHMARK(BM_replicate_cache)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
