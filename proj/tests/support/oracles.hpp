// Test-only oracles, independent of the library's estimation paths: exhaustive
// assignment enumeration, closed-form smoothing-noise integration, and brute
// force motif counting.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/exposure.hpp"
#include "cnm/graph.hpp"
#include "cnm/motifs.hpp"
#include "cnm/random.hpp"

namespace cnm::testing {

struct WeightedAssignment {
    AssignmentVector z;
    double prob = 0.0;
};

inline std::vector<WeightedAssignment> enumerate_bernoulli(std::size_t n, double p) {
    std::vector<WeightedAssignment> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        WeightedAssignment wa;
        wa.z.z.resize(n);
        wa.prob = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool treated = (mask >> i) & 1;
            wa.z.z[i] = treated ? 1 : 0;
            wa.prob *= treated ? p : 1.0 - p;
        }
        out.push_back(std::move(wa));
    }
    return out;
}

inline std::vector<WeightedAssignment> enumerate_design(const RandomizationDesign& design) {
    if (design.kind == DesignKind::Bernoulli) {
        return enumerate_bernoulli(design.n, design.p);
    }
    const auto& part = design.partition;
    const auto kc = static_cast<std::size_t>(part.cluster_count);
    std::vector<WeightedAssignment> out;
    out.reserve(std::size_t{1} << kc);
    for (std::size_t mask = 0; mask < (std::size_t{1} << kc); ++mask) {
        WeightedAssignment wa;
        wa.z.z.resize(part.cluster_of.size());
        wa.prob = 1.0;
        for (std::size_t c = 0; c < kc; ++c) {
            wa.prob *= ((mask >> c) & 1) ? design.p : 1.0 - design.p;
        }
        for (std::size_t i = 0; i < part.cluster_of.size(); ++i) {
            wa.z.z[i] = (mask >> static_cast<std::size_t>(part.cluster_of[i])) & 1;
        }
        out.push_back(std::move(wa));
    }
    return out;
}

// Lebesgue measure of {u in (0,1): interval contains (count + u) / (total + 1)}.
inline double u_interval_measure(const Interval& iv, std::int64_t count, std::int64_t total) {
    const double denom = static_cast<double>(total) + 1.0;
    const double lo_u = iv.lo * denom - static_cast<double>(count);
    const double hi_u = iv.hi * denom - static_cast<double>(count);
    return std::max(0.0, std::min(1.0, hi_u) - std::max(0.0, lo_u));
}

// Exact P[R_i in box] under an enumerable design, integrating the uniform
// smoothing noise in closed form (dims are independent given z).
inline std::vector<double> exact_box_probabilities(const Graph& g, const MotifSchema& schema,
                                                   const RandomizationDesign& design,
                                                   const BoxCondition& box,
                                                   const SamplingConfig& sampling = {}) {
    RepresentationBuilder builder(g, schema, sampling);
    const auto assignments = enumerate_design(design);
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    std::vector<double> probs(n, 0.0);
    for (const auto& wa : assignments) {
        for (std::size_t i = 0; i < n; ++i) {
            const MotifCounts counts = builder.counts(static_cast<NodeId>(i), wa.z.z);
            double mass = box.dims[0].contains(static_cast<double>(wa.z.z[i])) ? 1.0 : 0.0;
            for (std::size_t m = 1; m < schema.size() && mass > 0.0; ++m) {
                mass *= u_interval_measure(box.dims[m], counts.count_for(schema, m),
                                           counts.total_for(schema, m));
            }
            probs[i] += wa.prob * mass;
        }
    }
    return probs;
}

// Direct enumeration over neighbor pairs and triples.
inline MotifCounts brute_force_counts(const Graph& g, NodeId i,
                                      std::span<const std::uint8_t> z,
                                      const MotifSchema& schema) {
    MotifCounts c;
    const auto nbrs = g.neighbors(i);
    const std::size_t d = nbrs.size();
    c.dyad_total = static_cast<std::int64_t>(d);
    for (const NodeId v : nbrs) ++c.dyad[z[static_cast<std::size_t>(v)]];
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            const int k = z[static_cast<std::size_t>(nbrs[a])] +
                          z[static_cast<std::size_t>(nbrs[b])];
            if (g.has_edge(nbrs[a], nbrs[b])) {
                ++c.closed_triad_total;
                ++c.closed_triad[static_cast<std::size_t>(k)];
            } else {
                ++c.open_triad_total;
                ++c.open_triad[static_cast<std::size_t>(k)];
            }
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            for (std::size_t e = b + 1; e < d; ++e) {
                if (g.has_edge(nbrs[a], nbrs[b]) || g.has_edge(nbrs[a], nbrs[e]) ||
                    g.has_edge(nbrs[b], nbrs[e])) {
                    continue;
                }
                const int k = z[static_cast<std::size_t>(nbrs[a])] +
                              z[static_cast<std::size_t>(nbrs[b])] +
                              z[static_cast<std::size_t>(nbrs[e])];
                ++c.star4_total;
                ++c.star4[static_cast<std::size_t>(k)];
            }
        }
    }
    for (const auto& dim : schema.dims) {
        if (dim.kind != MotifDim::Kind::AttrFraction) continue;
        const auto col = g.attribute(dim.attr_column);
        MotifCounts::AttrCount ac;
        for (const NodeId v : nbrs) {
            if (col[static_cast<std::size_t>(v)] == dim.attr_value) {
                ++ac.total;
                ac.treated += z[static_cast<std::size_t>(v)];
            }
        }
        c.attr.push_back(ac);
    }
    return c;
}

// Erdos-Renyi-ish test graph with a deterministic stream.
inline Graph random_graph(NodeId n, double edge_prob, std::uint64_t seed) {
    rng::Stream stream(seed);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (stream.next_uniform() < edge_prob) edges.emplace_back(u, v);
        }
    }
    return Graph::from_edges(n, std::move(edges));
}

// Exhaustive minimum balanced-bisection cut; n <= 20.
inline std::int64_t min_balanced_cut(const Graph& g) {
    const auto n = static_cast<std::size_t>(g.node_count());
    const std::size_t half = (n + 1) / 2;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != half) continue;
        std::int64_t cut = 0;
        for (NodeId u = 0; u < g.node_count(); ++u) {
            for (const NodeId v : g.neighbors(u)) {
                if (u < v && (((mask >> u) & 1) != ((mask >> v) & 1))) ++cut;
            }
        }
        best = std::min(best, cut);
    }
    return best;
}

inline std::int64_t partition_cut(const Graph& g, const ClusterPartition& part) {
    std::int64_t cut = 0;
    for (NodeId u = 0; u < g.node_count(); ++u) {
        for (const NodeId v : g.neighbors(u)) {
            if (u < v && part.cluster_of[static_cast<std::size_t>(u)] !=
                             part.cluster_of[static_cast<std::size_t>(v)]) {
                ++cut;
            }
        }
    }
    return cut;
}

}  // namespace cnm::testing
