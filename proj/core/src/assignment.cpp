#include "cnm/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cnm/errors.hpp"
#include "cnm/random.hpp"

namespace cnm {

namespace {

void require_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ArgumentError("treatment probability must lie in (0,1), got " + std::to_string(p));
    }
}

std::string format_p(double p) {
    std::string s = std::to_string(p);
    while (s.size() > 3 && s.back() == '0') s.pop_back();
    return s;
}

// One Kernighan-Lin bisection of `nodes` within its induced subgraph.
// side[v] is 0/1 for members; refinement swaps equal-sized prefixes so the
// initial balance is preserved exactly.
struct Bisection {
    std::vector<NodeId> side_a;
    std::vector<NodeId> side_b;
    std::int64_t cut_before = 0;
    std::int64_t cut_after = 0;
};

Bisection kl_bisect(const Graph& g, const std::vector<NodeId>& nodes, std::uint64_t seed,
                    std::vector<NodeId>& local_of) {
    const std::size_t s = nodes.size();
    Bisection out;

    std::vector<NodeId> order(nodes);
    rng::Stream stream(seed);
    for (std::size_t i = s; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t size_a = (s + 1) / 2;

    std::vector<std::uint8_t> side(s, 1);
    for (std::size_t idx = 0; idx < s; ++idx) {
        local_of[static_cast<std::size_t>(order[idx])] = static_cast<NodeId>(idx);
    }
    for (std::size_t idx = 0; idx < size_a; ++idx) side[idx] = 0;

    // Induced adjacency in local ids, sorted for O(log d) membership tests.
    std::vector<std::vector<NodeId>> ladj(s);
    for (std::size_t idx = 0; idx < s; ++idx) {
        const NodeId v = order[idx];
        for (const NodeId u : g.neighbors(v)) {
            const NodeId lu = local_of[static_cast<std::size_t>(u)];
            if (lu >= 0) ladj[idx].push_back(lu);
        }
        std::sort(ladj[idx].begin(), ladj[idx].end());
    }
    const auto adjacent = [&](NodeId a, NodeId b) {
        const auto& nb = ladj[static_cast<std::size_t>(a)];
        return std::binary_search(nb.begin(), nb.end(), b);
    };

    std::vector<std::int64_t> d_val(s, 0);
    const auto recompute = [&] {
        std::int64_t cut = 0;
        for (std::size_t idx = 0; idx < s; ++idx) {
            std::int64_t internal = 0, external = 0;
            for (const NodeId u : ladj[idx]) {
                if (side[static_cast<std::size_t>(u)] == side[idx]) {
                    ++internal;
                } else {
                    ++external;
                }
            }
            d_val[idx] = external - internal;
            cut += external;
        }
        return cut / 2;
    };

    std::int64_t cut = recompute();
    out.cut_before = cut;

    // Keyed by (-D, local id): iteration yields D descending with lowest-index
    // tie break, which makes the chosen swap deterministic.
    using Entry = std::pair<std::int64_t, NodeId>;
    constexpr int kMaxPasses = 64;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        std::set<Entry> set_a, set_b;
        for (std::size_t idx = 0; idx < s; ++idx) {
            (side[idx] == 0 ? set_a : set_b).emplace(-d_val[idx], static_cast<NodeId>(idx));
        }
        std::vector<std::pair<NodeId, NodeId>> swaps;
        std::int64_t cumulative = 0, best_cum = 0;
        std::size_t best_prefix = 0;
        std::vector<std::int64_t> d_work(d_val);

        const std::size_t max_swaps = std::min(set_a.size(), set_b.size());
        for (std::size_t step = 0; step < max_swaps; ++step) {
            std::int64_t best_gain = std::numeric_limits<std::int64_t>::min();
            NodeId best_a = -1, best_b = -1;
            const std::int64_t top_b = -set_b.begin()->first;
            for (const auto& [na, a] : set_a) {
                const std::int64_t da = -na;
                if (best_a >= 0 && da + top_b <= best_gain) break;
                for (const auto& [nb, b] : set_b) {
                    const std::int64_t db = -nb;
                    if (best_a >= 0 && da + db <= best_gain) break;
                    const std::int64_t gain = da + db - 2 * (adjacent(a, b) ? 1 : 0);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            if (best_a < 0) break;
            set_a.erase({-d_work[static_cast<std::size_t>(best_a)], best_a});
            set_b.erase({-d_work[static_cast<std::size_t>(best_b)], best_b});
            // Virtual swap: update D of unlocked nodes as if a and b switched.
            for (const NodeId v : ladj[static_cast<std::size_t>(best_a)]) {
                const auto sv = static_cast<std::size_t>(v);
                auto& target = side[sv] == 0 ? set_a : set_b;
                const auto it = target.find({-d_work[sv], v});
                if (it == target.end()) continue;
                target.erase(it);
                d_work[sv] += side[sv] == 0 ? 2 : -2;
                target.emplace(-d_work[sv], v);
            }
            for (const NodeId v : ladj[static_cast<std::size_t>(best_b)]) {
                const auto sv = static_cast<std::size_t>(v);
                auto& target = side[sv] == 0 ? set_a : set_b;
                const auto it = target.find({-d_work[sv], v});
                if (it == target.end()) continue;
                target.erase(it);
                d_work[sv] += side[sv] == 1 ? 2 : -2;
                target.emplace(-d_work[sv], v);
            }
            swaps.emplace_back(best_a, best_b);
            cumulative += best_gain;
            if (cumulative > best_cum) {
                best_cum = cumulative;
                best_prefix = step + 1;
            }
        }

        if (best_cum <= 0) break;
        for (std::size_t k = 0; k < best_prefix; ++k) {
            side[static_cast<std::size_t>(swaps[k].first)] = 1;
            side[static_cast<std::size_t>(swaps[k].second)] = 0;
        }
        cut = recompute();
    }
    out.cut_after = cut;

    for (std::size_t idx = 0; idx < s; ++idx) {
        (side[idx] == 0 ? out.side_a : out.side_b).push_back(order[idx]);
    }
    for (const NodeId v : nodes) local_of[static_cast<std::size_t>(v)] = -1;
    std::sort(out.side_a.begin(), out.side_a.end());
    std::sort(out.side_b.begin(), out.side_b.end());
    return out;
}

}  // namespace

RandomizationDesign RandomizationDesign::bernoulli(std::size_t n, double p) {
    require_probability(p);
    RandomizationDesign d;
    d.kind = DesignKind::Bernoulli;
    d.n = n;
    d.p = p;
    return d;
}

RandomizationDesign RandomizationDesign::graph_cluster(ClusterPartition partition, double p) {
    require_probability(p);
    RandomizationDesign d;
    d.kind = DesignKind::GraphCluster;
    d.n = partition.cluster_of.size();
    d.p = p;
    d.partition = std::move(partition);
    return d;
}

std::string RandomizationDesign::tag() const {
    if (kind == DesignKind::Bernoulli) return "bernoulli(p=" + format_p(p) + ")";
    return "cluster(k=" + std::to_string(partition.cluster_count) + ",p=" + format_p(p) + ")";
}

AssignmentVector bernoulli_assignment(std::size_t n, double p, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("bernoulli_assignment: n must be >= 1");
    require_probability(p);
    AssignmentVector a;
    a.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.z[i] = rng::uniform01(rng::derive(seed, i)) < p ? 1 : 0;
    }
    a.design_tag = "bernoulli(p=" + format_p(p) + ")";
    a.seed = seed;
    return a;
}

ClusterPartition recursive_kl_partition(const Graph& g, int levels, std::uint64_t seed,
                                        std::vector<KlLevelStats>* stats) {
    if (levels < 1) throw ArgumentError("recursive_kl_partition: levels must be >= 1");
    if (levels >= 31 || (std::int64_t{1} << levels) > g.node_count()) {
        throw ArgumentError("recursive_kl_partition: 2^levels exceeds node count");
    }

    const std::size_t n = static_cast<std::size_t>(g.node_count());
    std::vector<std::vector<NodeId>> clusters(1);
    clusters[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) clusters[0][i] = static_cast<NodeId>(i);

    std::vector<NodeId> local_of(n, -1);
    for (int level = 0; level < levels; ++level) {
        std::vector<std::vector<NodeId>> next;
        next.reserve(clusters.size() * 2);
        KlLevelStats level_stats{level, 0, 0};
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            Bisection bis = kl_bisect(g, clusters[c],
                                      rng::derive(seed, static_cast<std::uint64_t>(level), c),
                                      local_of);
            level_stats.cut_before += bis.cut_before;
            level_stats.cut_after += bis.cut_after;
            next.push_back(std::move(bis.side_a));
            next.push_back(std::move(bis.side_b));
        }
        if (stats) stats->push_back(level_stats);
        clusters = std::move(next);
    }

    ClusterPartition part;
    part.cluster_of.resize(n);
    part.cluster_count = static_cast<NodeId>(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (const NodeId v : clusters[c]) {
            part.cluster_of[static_cast<std::size_t>(v)] = static_cast<NodeId>(c);
        }
    }
    return part;
}

AssignmentVector cluster_assignment(const ClusterPartition& partition, double p,
                                    std::uint64_t seed) {
    require_probability(p);
    if (partition.cluster_count < 1 || partition.cluster_of.empty()) {
        throw ArgumentError("cluster_assignment: empty partition");
    }
    std::vector<std::uint8_t> draw(static_cast<std::size_t>(partition.cluster_count));
    for (std::size_t c = 0; c < draw.size(); ++c) {
        draw[c] = rng::uniform01(rng::derive(seed, c)) < p ? 1 : 0;
    }
    AssignmentVector a;
    a.z.resize(partition.cluster_of.size());
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        a.z[i] = draw[static_cast<std::size_t>(partition.cluster_of[i])];
    }
    a.design_tag = "cluster(k=" + std::to_string(partition.cluster_count) +
                   ",p=" + format_p(p) + ")";
    a.seed = seed;
    return a;
}

AssignmentVector replicate_assignment(const RandomizationDesign& design, std::size_t b,
                                      std::uint64_t master_seed) {
    const std::uint64_t rep_seed = rng::derive(master_seed, b);
    if (design.kind == DesignKind::Bernoulli) {
        return bernoulli_assignment(design.n, design.p, rep_seed);
    }
    return cluster_assignment(design.partition, design.p, rep_seed);
}

std::vector<AssignmentVector> draw_replicates(const RandomizationDesign& design, std::size_t B,
                                              std::uint64_t master_seed) {
    if (B < 1) throw ArgumentError("draw_replicates: B must be >= 1");
    std::vector<AssignmentVector> out;
    out.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
        out.push_back(replicate_assignment(design, b, master_seed));
    }
    return out;
}

}  // namespace cnm
