#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnm/knn.hpp"
#include "cnm/synth.hpp"
#include "cnm/tree.hpp"

namespace cnm {

struct WsParams {
    std::size_t n = 4096;
    int k = 10;
    double beta = 0.5;
};

/// One end-to-end synthetic experiment: network -> model -> assignment ->
/// outcomes -> representations -> analyses, all seeds derived from one master.
struct HarnessConfig {
    WsParams ws;
    std::string edge_list_path;  // non-empty: ingest an external network
    std::string attr_path;

    DesignKind design = DesignKind::Bernoulli;
    double p = 0.5;
    int cluster_levels = 9;

    std::vector<std::string> schema_codes;  // empty -> standard schema
    SamplingConfig sampling;
    double noise_sigma = 0.25;

    std::size_t replicates = 500;  // exposure-probability draws
    std::size_t bootstrap = 500;
    double epsilon = 0.0;
    double delta = 0.01;

    bool run_knn = true;
    std::vector<double> k_fractions = {0.01, 0.02, 0.05, 0.10, 0.20, 0.50};
    DistanceMetric::Kind metric = DistanceMetric::Kind::RegressionCoefficients;
    InterferenceAssumption assumption = InterferenceAssumption::NonNegative;
    bool compare_fracq = true;
    bool compare_ht = false;

    bool run_tree = false;
    TreeHyperparams tree;

    std::uint64_t seed = 0;
};

struct ReplicationResult {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::string design_tag;
    GroundTruth truth;
    double naive_diff = 0.0;

    std::vector<KSweepRow> knn_rows;
    std::vector<KSweepRow> knn_rows_ht;
    std::vector<KSweepRow> fracq_rows;
    std::optional<KSweepRow> selected;          // select_estimate rule
    std::optional<KSweepRow> smallest_passing;  // smallest positivity-passing K

    std::optional<TreeGateEstimate> tree_gate;
    std::optional<ExposureTree> tree;
};

// Plain treated-vs-control contrast, the baseline every analysis is compared
// against.
double naive_difference(std::span<const double> Y, std::span<const std::uint8_t> z);

ReplicationResult run_replication(const HarnessConfig& config);

}  // namespace cnm
