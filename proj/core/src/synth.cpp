#include "cnm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

Graph generate_watts_strogatz(std::size_t n, int k, double beta, std::uint64_t seed) {
    if (n < 3 || k < 2 || k % 2 != 0 || static_cast<std::size_t>(k) >= n) {
        throw ArgumentError("watts-strogatz needs n >= 3 and even k with 2 <= k < n");
    }
    if (beta < 0.0 || beta > 1.0) {
        throw ArgumentError("watts-strogatz rewiring rate must lie in [0,1]");
    }

    std::vector<std::unordered_set<NodeId>> adj(n);
    const auto add = [&](std::size_t a, std::size_t b) {
        adj[a].insert(static_cast<NodeId>(b));
        adj[b].insert(static_cast<NodeId>(a));
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 1; j <= k / 2; ++j) {
            add(i, (i + static_cast<std::size_t>(j)) % n);
        }
    }

    rng::Stream stream(seed);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 1; j <= k / 2; ++j) {
            if (stream.next_uniform() >= beta) continue;
            if (adj[i].size() >= n - 1) continue;  // no free target remains
            const auto old_target = static_cast<NodeId>((i + static_cast<std::size_t>(j)) % n);
            NodeId fresh;
            do {
                fresh = static_cast<NodeId>(stream.next_below(n));
            } while (fresh == static_cast<NodeId>(i) || adj[i].contains(fresh));
            adj[i].erase(old_target);
            adj[old_target].erase(static_cast<NodeId>(i));
            add(i, static_cast<std::size_t>(fresh));
        }
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(n * static_cast<std::size_t>(k) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (const NodeId v : adj[i]) {
            if (static_cast<NodeId>(i) < v) edges.emplace_back(static_cast<NodeId>(i), v);
        }
    }
    return Graph::from_edges(static_cast<NodeId>(n), std::move(edges));
}

PotentialOutcomeModel attach_outcome_model(const Graph& g, double noise_sigma,
                                           std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    PotentialOutcomeModel model;
    model.noise_sigma = noise_sigma;
    model.seed = seed;
    model.x.resize(n);
    const std::uint64_t x_seed = rng::label_seed(seed, "covariate-X");
    std::vector<double> x_col(n);
    for (std::size_t i = 0; i < n; ++i) {
        model.x[i] = rng::uniform01(rng::derive(x_seed, i)) < 0.5 ? 1 : 0;
        x_col[i] = static_cast<double>(model.x[i]);
    }
    model.graph = g.with_attribute("X", std::move(x_col));

    model.weights.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const auto nbrs = model.graph.neighbors(static_cast<NodeId>(i));
        std::vector<std::pair<NodeId, double>> row;
        double denom = 0.0;
        for (const NodeId j : nbrs) {
            const int cf = common_neighbor_count(model.graph, static_cast<NodeId>(i), j);
            if (cf == 0) continue;
            const double w = (static_cast<double>(model.x[static_cast<std::size_t>(j)]) + 1.0) *
                             static_cast<double>(cf);
            row.emplace_back(j, w);
            denom += w;
        }
        if (denom > 0.0) {
            for (auto& [j, w] : row) w /= denom;
            model.weights[i] = std::move(row);
        }
    });
    return model;
}

std::vector<double> realize_outcomes(const PotentialOutcomeModel& model,
                                     const AssignmentVector& z,
                                     std::optional<std::uint64_t> noise_seed) {
    const std::size_t n = model.x.size();
    if (z.z.size() != n) throw ArgumentError("realize_outcomes: assignment length mismatch");
    std::vector<double> y(n);
    parallel_for(n, [&](std::size_t i) {
        double spill = 0.0;
        for (const auto& [j, w] : model.weights[i]) {
            spill += w * static_cast<double>(z.z[static_cast<std::size_t>(j)]);
        }
        double value = (1.0 + static_cast<double>(model.x[i])) *
                       (1.0 + static_cast<double>(z.z[i]) + spill);
        if (noise_seed.has_value()) {
            const double u1 = rng::uniform01(rng::derive(*noise_seed, i, 0));
            const double u2 = rng::uniform01(rng::derive(*noise_seed, i, 1));
            const double gauss = std::sqrt(-2.0 * std::log(u1)) *
                                 std::cos(6.283185307179586476925286766559 * u2);
            value += model.noise_sigma * gauss;
        }
        y[i] = value;
    });
    return y;
}

GroundTruth ground_truth(const PotentialOutcomeModel& model) {
    const std::size_t n = model.x.size();
    AssignmentVector ones, zeros;
    ones.z.assign(n, 1);
    zeros.z.assign(n, 0);
    const auto y1 = realize_outcomes(model, ones, std::nullopt);
    const auto y0 = realize_outcomes(model, zeros, std::nullopt);
    GroundTruth truth;
    for (std::size_t i = 0; i < n; ++i) {
        truth.mu1 += y1[i];
        truth.mu0 += y0[i];
    }
    truth.mu1 /= static_cast<double>(n);
    truth.mu0 /= static_cast<double>(n);
    truth.tau = truth.mu1 - truth.mu0;
    return truth;
}

}  // namespace cnm
