#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnm/estimators.hpp"
#include "cnm/exposure.hpp"
#include "cnm/motifs.hpp"

namespace cnm {

/// Weighted L1 metric over representation space. Identical weights treat all
/// dims alike; regression weights are |beta| from an OLS fit of Y on the
/// representations, so dims predictive of the outcome dominate the distance.
struct DistanceMetric {
    enum class Kind { Identical, RegressionCoefficients };
    Kind kind = Kind::Identical;
    std::vector<double> weights;

    struct FitDiagnostics {
        std::vector<double> beta;  // signed coefficients, no intercept
        double intercept = 0.0;
        double r_squared = 0.0;
    };
    FitDiagnostics diagnostics;

    double distance(std::span<const double> a, std::span<const double> b) const;
};

std::string metric_kind_name(DistanceMetric::Kind kind);

// active_dims restricts both the regression and the nonzero weights (used by
// the fractional-q baseline, which sees dims {Z, 2-1} only); null means all.
DistanceMetric fit_metric(const RepresentationMatrix& reps, std::span<const double> Y,
                          DistanceMetric::Kind kind,
                          const std::vector<std::size_t>* active_dims = nullptr);

/// Observed K-nearest condition around a reference representation.
struct KnnConditionResult {
    KnnConditionSpec spec;
    std::vector<NodeId> units;  // observed members, ascending
};

KnnConditionResult knn_condition(const RepresentationMatrix& reps, const DistanceMetric& metric,
                                 std::span<const double> reference, std::size_t K,
                                 std::string label);

/// One K of the sweep; tau = mu1 - mu0 with a joint bootstrap se.
struct KSweepRow {
    std::size_t K = 0;
    double k_over_n = 0.0;
    double mu1 = 0.0, se1 = 0.0;
    double mu0 = 0.0, se0 = 0.0;
    double tau = 0.0, se_tau = 0.0;
    PositivityVerdict pos1, pos0;

    bool passes_positivity() const { return pos1.ok && pos0.ok; }
};

struct SweepConfig {
    std::vector<std::size_t> k_grid;
    double epsilon = 0.0;
    double delta = 0.01;
    std::size_t bootstrap_b = 500;
    std::uint64_t seed = 0;
    EstimatorKind estimator = EstimatorKind::Hajek;
    ResampleMode resample = ResampleMode::unit();
};

// Per K: conditions around r1/r0, rank-based membership probabilities from
// the replicate cache, weighted means, joint bootstrap SEs, and positivity
// verdicts. Ranks are computed once per replicate and shared across the grid.
std::vector<KSweepRow> sweep_K(const ReplicateCache& cache, const RepresentationMatrix& reps,
                               std::span<const double> Y, const DistanceMetric& metric,
                               const ReferenceRepresentations& refs, const SweepConfig& config);

enum class InterferenceAssumption { NonNegative, NonPositive };

// Among positivity-passing rows (respecting se_cap when given): the largest
// tau under non-negative interference, the smallest under non-positive; ties
// break toward smaller K.
const KSweepRow& select_estimate(const std::vector<KSweepRow>& rows,
                                 InterferenceAssumption assumption,
                                 std::optional<double> se_cap = std::nullopt);

}  // namespace cnm
