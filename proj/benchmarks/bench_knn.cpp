#include <benchmark/benchmark.h>

#include "cnm/harness.hpp"
#include "cnm/knn.hpp"
#include "cnm/synth.hpp"

namespace {

using namespace cnm;

struct SweepFixture {
    Graph graph;
    MotifSchema schema;
    RepresentationBuilder builder;
    RepresentationMatrix reps;
    ReplicateCache cache;
    std::vector<double> y;
    ReferenceRepresentations refs;

    explicit SweepFixture(std::size_t n, std::size_t B)
        : graph(generate_watts_strogatz(n, 10, 0.5, 21)),
          schema(MotifSchema::standard(false)),
          builder(graph, schema, {}),
          reps(builder.build(bernoulli_assignment(n, 0.5, 22), 23)),
          cache(builder, RandomizationDesign::bernoulli(n, 0.5), B, 24),
          refs(reference_representations(schema)) {
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = reps.at(i, 1);
    }
};

void BM_sweep_K(benchmark::State& state) {
    SweepFixture f(2048, 200);
    SweepConfig config;
    config.k_grid = {20, 40, 102, 204, 409, 1024};
    config.bootstrap_b = 200;
    config.seed = 25;
    const auto metric = fit_metric(f.reps, f.y, DistanceMetric::Kind::RegressionCoefficients);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep_K(f.cache, f.reps, f.y, metric, f.refs, config));
    }
}
BENCHMARK(BM_sweep_K)->Unit(benchmark::kMillisecond);

void BM_rank_membership(benchmark::State& state) {
    SweepFixture f(4096, 200);
    KnnConditionSpec spec{"bench", f.refs.r1, std::vector<double>(f.schema.size(), 1.0), 200};
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.cache.membership_probability(ExposureCondition{spec}));
    }
}
BENCHMARK(BM_rank_membership)->Unit(benchmark::kMillisecond);

}  // namespace
