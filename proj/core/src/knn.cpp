#include "cnm/knn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

double DistanceMetric::distance(std::span<const double> a, std::span<const double> b) const {
    double d = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m) {
        d += weights[m] * std::abs(a[m] - b[m]);
    }
    return d;
}

std::string metric_kind_name(DistanceMetric::Kind kind) {
    return kind == DistanceMetric::Kind::Identical ? "identical" : "regcoef";
}

DistanceMetric fit_metric(const RepresentationMatrix& reps, std::span<const double> Y,
                          DistanceMetric::Kind kind,
                          const std::vector<std::size_t>* active_dims) {
    const std::size_t n = reps.n;
    const std::size_t m = reps.m;
    std::vector<std::size_t> active;
    if (active_dims) {
        active = *active_dims;
        std::sort(active.begin(), active.end());
        for (const std::size_t d : active) {
            if (d >= m) throw ArgumentError("fit_metric: active dim out of range");
        }
    } else {
        active.resize(m);
        std::iota(active.begin(), active.end(), std::size_t{0});
    }

    DistanceMetric metric;
    metric.kind = kind;
    metric.weights.assign(m, 0.0);

    if (kind == DistanceMetric::Kind::Identical) {
        for (const std::size_t d : active) metric.weights[d] = 1.0;
        return metric;
    }

    if (Y.size() != n) throw ArgumentError("fit_metric: Y length mismatch");
    if (n <= active.size() + 1) {
        throw ArgumentError("fit_metric: regression needs N > M + 1 observations");
    }

    Eigen::MatrixXd design(n, active.size() + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        design(static_cast<Eigen::Index>(i), 0) = 1.0;
        const auto row = reps.row(i);
        for (std::size_t c = 0; c < active.size(); ++c) {
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) =
                row[active[c]];
        }
        y(static_cast<Eigen::Index>(i)) = Y[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<Eigen::Index>(active.size() + 1)) {
        throw FitError(
            "fit_metric: rank-deficient regression design; remove collinear or constant dims");
    }
    const Eigen::VectorXd beta = qr.solve(y);

    const Eigen::VectorXd fitted = design * beta;
    const double y_mean = y.mean();
    const double ss_tot = (y.array() - y_mean).square().sum();
    const double ss_res = (y - fitted).array().square().sum();

    metric.diagnostics.intercept = beta(0);
    metric.diagnostics.beta.assign(m, 0.0);
    for (std::size_t c = 0; c < active.size(); ++c) {
        const double b = beta(static_cast<Eigen::Index>(c + 1));
        metric.diagnostics.beta[active[c]] = b;
        metric.weights[active[c]] = std::abs(b);
    }
    metric.diagnostics.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return metric;
}

KnnConditionResult knn_condition(const RepresentationMatrix& reps, const DistanceMetric& metric,
                                 std::span<const double> reference, std::size_t K,
                                 std::string label) {
    if (K < 1 || K > reps.n) throw ArgumentError("knn_condition: K must lie in [1, N]");
    if (reference.size() != reps.m) throw ArgumentError("knn_condition: reference size mismatch");

    KnnConditionResult result;
    result.spec.label = std::move(label);
    result.spec.reference.assign(reference.begin(), reference.end());
    result.spec.weights = metric.weights;
    result.spec.k = K;

    const auto member = observed_membership(ExposureCondition{result.spec}, reps);
    for (std::size_t i = 0; i < reps.n; ++i) {
        if (member[i]) result.units.push_back(static_cast<NodeId>(i));
    }
    return result;
}

namespace {

// rank[i*B + b] = position of unit i in replicate b's (distance, index) order.
std::vector<std::uint32_t> replicate_ranks(const ReplicateCache& cache,
                                           const KnnConditionSpec& spec_like) {
    const std::size_t n = cache.n();
    const std::size_t B = cache.replicate_count();
    const std::size_t m = cache.dim_count();
    std::vector<std::uint32_t> rank(n * B);
    parallel_for(B, [&](std::size_t b) {
        std::vector<double> dist(n);
        std::vector<double> row(m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < m; ++d) row[d] = cache.at(i, b, d);
            dist[i] = spec_like.distance_to(row);
        }
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t c) {
            return dist[a] < dist[c] || (dist[a] == dist[c] && a < c);
        });
        for (std::size_t pos = 0; pos < n; ++pos) {
            rank[static_cast<std::size_t>(order[pos]) * B + b] =
                static_cast<std::uint32_t>(pos);
        }
    });
    return rank;
}

std::vector<std::uint32_t> observed_ranks(const RepresentationMatrix& reps,
                                          const KnnConditionSpec& spec_like) {
    const std::size_t n = reps.n;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = spec_like.distance_to(reps.row(i));
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t c) {
        return dist[a] < dist[c] || (dist[a] == dist[c] && a < c);
    });
    std::vector<std::uint32_t> rank(n);
    for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = static_cast<std::uint32_t>(pos);
    return rank;
}

}  // namespace

std::vector<KSweepRow> sweep_K(const ReplicateCache& cache, const RepresentationMatrix& reps,
                               std::span<const double> Y, const DistanceMetric& metric,
                               const ReferenceRepresentations& refs, const SweepConfig& config) {
    const std::size_t n = cache.n();
    const std::size_t B = cache.replicate_count();
    if (config.k_grid.empty()) throw ArgumentError("sweep_K: empty K grid");
    for (const std::size_t k : config.k_grid) {
        if (k < 1 || k > n) throw ArgumentError("sweep_K: K values must lie in [1, N]");
    }
    if (reps.n != n || Y.size() != n) throw ArgumentError("sweep_K: input sizes disagree");

    KnnConditionSpec around_r1{"knn-r1", refs.r1, metric.weights, 0};
    KnnConditionSpec around_r0{"knn-r0", refs.r0, metric.weights, 0};

    const auto rank1 = replicate_ranks(cache, around_r1);
    const auto rank0 = replicate_ranks(cache, around_r0);
    const auto obs_rank1 = observed_ranks(reps, around_r1);
    const auto obs_rank0 = observed_ranks(reps, around_r0);

    std::vector<NodeId> population(n);
    std::iota(population.begin(), population.end(), NodeId{0});

    std::vector<KSweepRow> rows;
    rows.reserve(config.k_grid.size());
    for (const std::size_t K : config.k_grid) {
        std::vector<double> p1(n), p0(n);
        parallel_for(n, [&](std::size_t i) {
            std::size_t h1 = 0, h0 = 0;
            const std::uint32_t* r1 = rank1.data() + i * B;
            const std::uint32_t* r0 = rank0.data() + i * B;
            for (std::size_t b = 0; b < B; ++b) {
                h1 += r1[b] < K;
                h0 += r0[b] < K;
            }
            const double denom = static_cast<double>(B) + 1.0;
            p1[i] = static_cast<double>(h1) / denom;
            p0[i] = static_cast<double>(h0) / denom;
        });

        std::vector<std::uint8_t> m1(n), m0(n);
        for (std::size_t i = 0; i < n; ++i) {
            m1[i] = obs_rank1[i] < K;
            m0[i] = obs_rank0[i] < K;
        }

        KSweepRow row;
        row.K = K;
        row.k_over_n = static_cast<double>(K) / static_cast<double>(n);
        row.pos1 = check_positivity(p1, config.epsilon, config.delta);
        row.pos0 = check_positivity(p0, config.epsilon, config.delta);
        try {
            const GateBootstrap gate = joint_gate_estimate(
                Y, m1, p1, m0, p0, config.estimator, config.bootstrap_b,
                rng::derive(config.seed, K), config.resample, population,
                "mu1@K=" + std::to_string(K), "mu0@K=" + std::to_string(K));
            row.mu1 = gate.leg1.point;
            row.se1 = gate.leg1.se;
            row.mu0 = gate.leg0.point;
            row.se0 = gate.leg0.se;
            row.tau = gate.diff.point;
            row.se_tau = gate.diff.se;
        } catch (const EstimationError&) {
            // Too few members for the resample budget (tiny K). Keep the point
            // estimates; the ses are unavailable and the positivity verdicts
            // mark the row as unusable.
            const double nan = std::numeric_limits<double>::quiet_NaN();
            auto m1f = m1;
            auto m0f = m0;
            for (std::size_t i = 0; i < n; ++i) {
                if (m1f[i] && !(p1[i] > 0.0)) m1f[i] = 0;
                if (m0f[i] && !(p0[i] > 0.0)) m0f[i] = 0;
            }
            row.mu1 = weighted_mean(Y, m1f, p1, config.estimator).point;
            row.mu0 = weighted_mean(Y, m0f, p0, config.estimator).point;
            row.tau = row.mu1 - row.mu0;
            row.se1 = row.se0 = row.se_tau = nan;
        }
        rows.push_back(row);
    }
    return rows;
}

const KSweepRow& select_estimate(const std::vector<KSweepRow>& rows,
                                 InterferenceAssumption assumption,
                                 std::optional<double> se_cap) {
    const KSweepRow* best = nullptr;
    for (const auto& row : rows) {
        if (!row.passes_positivity()) continue;
        if (se_cap.has_value() && row.se_tau > *se_cap) continue;
        if (best == nullptr) {
            best = &row;
            continue;
        }
        const bool better = assumption == InterferenceAssumption::NonNegative
                                ? row.tau > best->tau
                                : row.tau < best->tau;
        const bool tie_smaller_k = row.tau == best->tau && row.K < best->K;
        if (better || tie_smaller_k) best = &row;
    }
    if (best == nullptr) {
        std::string detail;
        for (const auto& row : rows) {
            detail += " K=" + std::to_string(row.K) + ":" + (row.pos1.ok ? "1" : "0") +
                      (row.pos0.ok ? "1" : "0");
        }
        throw SelectionError("select_estimate: no row passes positivity" +
                             (se_cap ? std::string(" and the se cap") : std::string()) +
                             "; verdicts (pos1,pos0):" + detail);
    }
    return *best;
}

}  // namespace cnm
