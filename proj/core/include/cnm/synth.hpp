#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/graph.hpp"

namespace cnm {

// Ring lattice of even degree k with each lattice edge rewired with
// probability beta to a uniform non-duplicate, non-self target. Edge count is
// exactly n*k/2.
Graph generate_watts_strogatz(std::size_t n, int k, double beta, std::uint64_t seed);

/// Synthetic potential outcomes y_i(z) = (1 + X_i)(1 + z_i + sum_j w_ij z_j) + eps_i
/// with w_ij proportional to (X_j + 1) * common_friends(i, j), normalized per
/// row. Rows without any common-friend neighbor are all-zero: such units feel
/// no interference.
struct PotentialOutcomeModel {
    Graph graph;  // carries the drawn covariate as attribute column "X"
    std::vector<std::uint8_t> x;
    std::vector<std::vector<std::pair<NodeId, double>>> weights;
    double noise_sigma = 0.25;
    std::uint64_t seed = 0;
};

PotentialOutcomeModel attach_outcome_model(const Graph& g, double noise_sigma,
                                           std::uint64_t seed);

// Noise is drawn per (noise_seed, node); pass nullopt for the noise-free
// evaluation used by ground truth.
std::vector<double> realize_outcomes(const PotentialOutcomeModel& model,
                                     const AssignmentVector& z,
                                     std::optional<std::uint64_t> noise_seed);

/// Exact averages of the realized model at the two constant assignments.
struct GroundTruth {
    double mu1 = 0.0;
    double mu0 = 0.0;
    double tau = 0.0;
};

GroundTruth ground_truth(const PotentialOutcomeModel& model);

}  // namespace cnm
