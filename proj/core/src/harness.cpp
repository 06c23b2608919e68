#include "cnm/harness.hpp"

#include <algorithm>
#include <cmath>

#include "cnm/errors.hpp"
#include "cnm/random.hpp"

namespace cnm {

double naive_difference(std::span<const double> Y, std::span<const std::uint8_t> z) {
    if (Y.size() != z.size()) throw ArgumentError("naive_difference: length mismatch");
    double sum1 = 0.0, sum0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        if (z[i]) {
            sum1 += Y[i];
            ++n1;
        } else {
            sum0 += Y[i];
            ++n0;
        }
    }
    if (n1 == 0 || n0 == 0) {
        throw EstimationError("naive_difference: one arm is empty");
    }
    return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
}

ReplicationResult run_replication(const HarnessConfig& config) {
    const std::uint64_t seed = config.seed;

    Graph base = config.edge_list_path.empty()
                     ? generate_watts_strogatz(config.ws.n, config.ws.k, config.ws.beta,
                                               rng::label_seed(seed, "network"))
                     : load_edge_list_file(config.edge_list_path, config.attr_path);

    const PotentialOutcomeModel model =
        attach_outcome_model(base, config.noise_sigma, rng::label_seed(seed, "model"));
    const Graph& g = model.graph;
    const std::size_t n = static_cast<std::size_t>(g.node_count());

    RandomizationDesign design =
        config.design == DesignKind::Bernoulli
            ? RandomizationDesign::bernoulli(n, config.p)
            : RandomizationDesign::graph_cluster(
                  recursive_kl_partition(g, config.cluster_levels,
                                         rng::label_seed(seed, "partition")),
                  config.p);

    const AssignmentVector z =
        design.kind == DesignKind::Bernoulli
            ? bernoulli_assignment(n, config.p, rng::label_seed(seed, "assignment"))
            : cluster_assignment(design.partition, config.p,
                                 rng::label_seed(seed, "assignment"));

    const std::vector<double> Y =
        realize_outcomes(model, z, rng::label_seed(seed, "noise"));

    const MotifSchema schema = config.schema_codes.empty()
                                   ? MotifSchema::standard(true)
                                   : MotifSchema::from_codes(config.schema_codes);
    schema.validate_for(g);

    RepresentationBuilder builder(g, schema, config.sampling);
    const RepresentationMatrix reps = builder.build(z, rng::label_seed(seed, "observed-U"));
    const ReplicateCache cache(builder, design, config.replicates,
                               rng::label_seed(seed, "replicates"));
    const ReferenceRepresentations refs = reference_representations(schema);

    ReplicationResult result;
    result.seed = seed;
    result.n = n;
    result.design_tag = design.tag();
    result.truth = ground_truth(model);
    result.naive_diff = naive_difference(Y, z.z);

    const ResampleMode resample = design.kind == DesignKind::GraphCluster
                                      ? ResampleMode::cluster(design.partition)
                                      : ResampleMode::unit();

    if (config.run_knn) {
        SweepConfig sweep;
        for (const double f : config.k_fractions) {
            const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
            sweep.k_grid.push_back(std::clamp<std::size_t>(k, 1, n));
        }
        sweep.epsilon = config.epsilon;
        sweep.delta = config.delta;
        sweep.bootstrap_b = config.bootstrap;
        sweep.seed = rng::label_seed(seed, "sweep");
        sweep.estimator = EstimatorKind::Hajek;
        sweep.resample = resample;

        const DistanceMetric metric = fit_metric(reps, Y, config.metric);
        result.knn_rows = sweep_K(cache, reps, Y, metric, refs, sweep);

        for (const auto& row : result.knn_rows) {
            if (row.passes_positivity()) {
                if (!result.smallest_passing || row.K < result.smallest_passing->K) {
                    result.smallest_passing = row;
                }
            }
        }
        try {
            result.selected = select_estimate(result.knn_rows, config.assumption);
        } catch (const SelectionError&) {
            result.selected.reset();
        }

        if (config.compare_ht) {
            SweepConfig sweep_ht = sweep;
            sweep_ht.estimator = EstimatorKind::HorvitzThompson;
            result.knn_rows_ht = sweep_K(cache, reps, Y, metric, refs, sweep_ht);
        }

        if (config.compare_fracq) {
            const int frac_dim = schema.index_of("2-1");
            if (frac_dim >= 0) {
                const std::vector<std::size_t> active = {0, static_cast<std::size_t>(frac_dim)};
                const DistanceMetric metric_q = fit_metric(reps, Y, config.metric, &active);
                SweepConfig sweep_q = sweep;
                sweep_q.seed = rng::label_seed(seed, "sweep-fracq");
                result.fracq_rows = sweep_K(cache, reps, Y, metric_q, refs, sweep_q);
            }
        }
    }

    if (config.run_tree) {
        result.tree = fit_tree(reps, Y, cache, config.tree, rng::label_seed(seed, "tree-split"));
        result.tree_gate = tree_gate_effect(*result.tree, refs, reps, Y, cache, config.tree,
                                            rng::label_seed(seed, "tree-boot"));
    }
    return result;
}

}  // namespace cnm
