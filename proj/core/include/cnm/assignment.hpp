#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnm/graph.hpp"

namespace cnm {

/// One realized treatment assignment.
struct AssignmentVector {
    std::vector<std::uint8_t> z;
    std::string design_tag;
    std::uint64_t seed = 0;
};

/// Balanced node-to-cluster map from recursive bisection.
struct ClusterPartition {
    std::vector<NodeId> cluster_of;
    NodeId cluster_count = 0;
};

/// Per-level refinement telemetry; the cut may never grow within a level.
struct KlLevelStats {
    int level = 0;
    std::int64_t cut_before = 0;
    std::int64_t cut_after = 0;
};

enum class DesignKind { Bernoulli, GraphCluster };

/// The probability law used to draw assignments and Monte Carlo replicates.
struct RandomizationDesign {
    DesignKind kind = DesignKind::Bernoulli;
    std::size_t n = 0;       // population size
    double p = 0.5;          // treatment probability, in (0,1)
    ClusterPartition partition;  // GraphCluster only

    static RandomizationDesign bernoulli(std::size_t n, double p = 0.5);
    static RandomizationDesign graph_cluster(ClusterPartition partition, double p = 0.5);

    std::string tag() const;
};

// Each entry is an independent Bern(p) draw indexed by (seed, unit), so the
// result is identical no matter how it is consumed.
AssignmentVector bernoulli_assignment(std::size_t n, double p, std::uint64_t seed);

// Recursive balanced bisection with Kernighan-Lin refinement per level.
// Produces 2^levels clusters whose sizes differ by at most one.
ClusterPartition recursive_kl_partition(const Graph& g, int levels, std::uint64_t seed,
                                        std::vector<KlLevelStats>* stats = nullptr);

// One Bern(p) draw per cluster, broadcast to members.
AssignmentVector cluster_assignment(const ClusterPartition& partition, double p,
                                    std::uint64_t seed);

// Replicate b uses a seed derived from (master_seed, b); the sequence is the
// same regardless of consumption order or parallelism.
AssignmentVector replicate_assignment(const RandomizationDesign& design, std::size_t b,
                                      std::uint64_t master_seed);
std::vector<AssignmentVector> draw_replicates(const RandomizationDesign& design, std::size_t B,
                                              std::uint64_t master_seed);

}  // namespace cnm
