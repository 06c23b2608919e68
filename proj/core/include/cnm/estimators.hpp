#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnm/exposure.hpp"

namespace cnm {

enum class EstimatorKind { HorvitzThompson, Hajek };

std::string estimator_kind_name(EstimatorKind kind);

/// Point estimate plus inference metadata for one exposure condition (or one
/// gate difference).
struct EstimateReport {
    std::string label;
    EstimatorKind kind = EstimatorKind::Hajek;
    double point = 0.0;
    double se = 0.0;
    std::optional<std::vector<double>> draws;
    std::size_t member_count = 0;
    PositivityVerdict positivity;
    std::size_t bootstrap_b = 0;
    std::uint64_t seed = 0;
    // Set when the se came from the independent-sum approximation rather than
    // a joint bootstrap.
    bool independent_se_approx = false;
};

// Inverse-probability-weighted mean of Y over members. HT divides by the
// population size, Hajek by the realized weight sum. A member whose
// probability is zero is a positivity violation and an error.
EstimateReport weighted_mean(std::span<const double> Y, std::span<const std::uint8_t> member,
                             std::span<const double> probs, EstimatorKind kind);

// point = a.point - b.point; se from paired draws when both reports carry
// draws from a shared resample stream, otherwise the flagged independent-sum
// approximation.
EstimateReport gate_difference(const EstimateReport& a, const EstimateReport& b);

struct ResampleMode {
    enum class Kind { Unit, Cluster };
    Kind kind = Kind::Unit;
    const ClusterPartition* partition = nullptr;

    static ResampleMode unit() { return {}; }
    static ResampleMode cluster(const ClusterPartition& p) {
        return {Kind::Cluster, &p};
    }
};

struct BootstrapResult {
    double se = 0.0;
    std::vector<double> draws;
    std::size_t failures = 0;
};

// Algorithm: draw B with-replacement resamples of the N unit indices (or of
// all clusters in cluster mode), apply the estimator, and report
// sqrt(mean squared deviation) over the successful draws. More than 10%
// estimator failures is an error.
BootstrapResult bootstrap_se(
    const std::function<std::optional<double>(std::span<const NodeId>)>& estimator,
    std::size_t n, std::size_t B, std::uint64_t seed, ResampleMode mode = ResampleMode::unit());

/// Both gate legs plus their difference, bootstrapped on shared resamples so
/// the covariance between the legs is captured.
struct GateBootstrap {
    EstimateReport leg1;
    EstimateReport leg0;
    EstimateReport diff;
    std::size_t failures = 0;
    std::size_t dropped_zero_prob = 0;
};

// Members with zero estimated probability are excluded (they are the mass the
// relaxed positivity rule tolerates) and counted in dropped_zero_prob.
// `population` lists the units eligible for resampling; cluster mode
// resamples whole clusters and keeps their population members.
GateBootstrap joint_gate_estimate(std::span<const double> Y,
                                  std::span<const std::uint8_t> member1,
                                  std::span<const double> probs1,
                                  std::span<const std::uint8_t> member0,
                                  std::span<const double> probs0, EstimatorKind kind,
                                  std::size_t B, std::uint64_t seed, ResampleMode mode,
                                  std::span<const NodeId> population, std::string label1,
                                  std::string label0);

/// Units inside the tested conditions whose n-hop ego networks are disjoint,
/// so their neighborhoods can be re-randomized independently.
struct FocalSet {
    std::vector<NodeId> units;
    int hop = 1;
    std::string condition_a;
    std::string condition_b;
};

struct PValueResult {
    double p = 1.0;
    FocalSet focal;
    std::size_t admissible_draws = 0;
    double t_observed = 0.0;
};

// Randomization-inference p-value for the null of equal potential outcomes
// between two disjoint conditions. Builds the focal set greedily in
// descending node order, re-randomizes assignments only within focal ego
// networks, and keeps draws under which every focal unit stays in one of the
// two conditions. Rank-based (kNN) conditions are not supported: their
// membership is not local to an ego network.
PValueResult exact_p_value(const RepresentationBuilder& builder,
                           const RandomizationDesign& design, const AssignmentVector& z_obs,
                           std::span<const double> Y, const ExposureCondition& cond_a,
                           const ExposureCondition& cond_b, int hop, std::size_t draws,
                           std::uint64_t seed, std::uint64_t observed_u_seed,
                           const std::vector<double>* probs_a = nullptr,
                           const std::vector<double>* probs_b = nullptr,
                           std::size_t prob_replicates = 500);

}  // namespace cnm
