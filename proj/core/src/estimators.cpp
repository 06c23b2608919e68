#include "cnm/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

std::string estimator_kind_name(EstimatorKind kind) {
    return kind == EstimatorKind::HorvitzThompson ? "HT" : "Hajek";
}

EstimateReport weighted_mean(std::span<const double> Y, std::span<const std::uint8_t> member,
                             std::span<const double> probs, EstimatorKind kind) {
    if (Y.size() != member.size() || Y.size() != probs.size()) {
        throw ArgumentError("weighted_mean: input vectors must share one length");
    }
    double weighted_sum = 0.0, weight_sum = 0.0;
    std::size_t members = 0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        if (!member[i]) continue;
        if (!(probs[i] > 0.0)) {
            throw EstimationError("weighted_mean: member unit " + std::to_string(i) +
                                  " has zero exposure probability (positivity violation)");
        }
        const double w = 1.0 / probs[i];
        weighted_sum += Y[i] * w;
        weight_sum += w;
        ++members;
    }
    EstimateReport r;
    r.kind = kind;
    r.member_count = members;
    if (kind == EstimatorKind::HorvitzThompson) {
        r.point = Y.empty() ? 0.0 : weighted_sum / static_cast<double>(Y.size());
    } else {
        r.point = weight_sum > 0.0 ? weighted_sum / weight_sum : 0.0;
    }
    return r;
}

EstimateReport gate_difference(const EstimateReport& a, const EstimateReport& b) {
    if (a.kind != b.kind) {
        throw ArgumentError("gate_difference: estimator kinds differ (" +
                            estimator_kind_name(a.kind) + " vs " + estimator_kind_name(b.kind) +
                            ")");
    }
    EstimateReport r;
    r.label = a.label + " - " + b.label;
    r.kind = a.kind;
    r.point = a.point - b.point;
    r.member_count = std::min(a.member_count, b.member_count);
    r.bootstrap_b = a.bootstrap_b;
    r.seed = a.seed;
    if (a.draws && b.draws && a.draws->size() == b.draws->size() && !a.draws->empty()) {
        const auto& da = *a.draws;
        const auto& db = *b.draws;
        std::vector<double> diff(da.size());
        double mean = 0.0;
        for (std::size_t k = 0; k < da.size(); ++k) {
            diff[k] = da[k] - db[k];
            mean += diff[k];
        }
        mean /= static_cast<double>(diff.size());
        double ss = 0.0;
        for (const double d : diff) ss += (d - mean) * (d - mean);
        r.se = std::sqrt(ss / static_cast<double>(diff.size()));
        r.draws = std::move(diff);
    } else {
        r.se = std::sqrt(a.se * a.se + b.se * b.se);
        r.independent_se_approx = true;
    }
    return r;
}

BootstrapResult bootstrap_se(
    const std::function<std::optional<double>(std::span<const NodeId>)>& estimator,
    std::size_t n, std::size_t B, std::uint64_t seed, ResampleMode mode) {
    if (B < 2) throw ArgumentError("bootstrap_se: B must be >= 2");
    if (n < 1) throw ArgumentError("bootstrap_se: empty population");

    std::vector<std::vector<NodeId>> cluster_members;
    if (mode.kind == ResampleMode::Kind::Cluster) {
        if (mode.partition == nullptr || mode.partition->cluster_of.size() != n) {
            throw ArgumentError("bootstrap_se: cluster mode needs a matching partition");
        }
        cluster_members.resize(static_cast<std::size_t>(mode.partition->cluster_count));
        for (std::size_t i = 0; i < n; ++i) {
            cluster_members[static_cast<std::size_t>(mode.partition->cluster_of[i])].push_back(
                static_cast<NodeId>(i));
        }
    }

    std::vector<std::optional<double>> results(B);
    parallel_for(B, [&](std::size_t b) {
        rng::Stream stream(rng::derive(seed, b));
        std::vector<NodeId> idx;
        if (mode.kind == ResampleMode::Kind::Unit) {
            idx.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                idx[k] = static_cast<NodeId>(stream.next_below(n));
            }
        } else {
            const std::size_t kc = cluster_members.size();
            idx.reserve(n);
            for (std::size_t c = 0; c < kc; ++c) {
                const auto& members = cluster_members[stream.next_below(kc)];
                idx.insert(idx.end(), members.begin(), members.end());
            }
        }
        results[b] = estimator(idx);
    });

    BootstrapResult out;
    for (const auto& r : results) {
        if (r.has_value()) {
            out.draws.push_back(*r);
        } else {
            ++out.failures;
        }
    }
    if (out.failures * 10 > B) {
        throw EstimationError("bootstrap_se: estimator failed on " +
                              std::to_string(out.failures) + " of " + std::to_string(B) +
                              " resamples");
    }
    if (out.draws.empty()) {
        throw EstimationError("bootstrap_se: no successful resamples");
    }
    double mean = 0.0;
    for (const double d : out.draws) mean += d;
    mean /= static_cast<double>(out.draws.size());
    double ss = 0.0;
    for (const double d : out.draws) ss += (d - mean) * (d - mean);
    out.se = std::sqrt(ss / static_cast<double>(out.draws.size()));
    return out;
}

namespace {

struct LegSums {
    double weighted = 0.0;
    double weight = 0.0;
    std::int64_t size = 0;
};

double leg_point(const LegSums& s, EstimatorKind kind) {
    if (kind == EstimatorKind::HorvitzThompson) {
        return s.size > 0 ? s.weighted / static_cast<double>(s.size) : 0.0;
    }
    return s.weight > 0.0 ? s.weighted / s.weight : 0.0;
}

double draws_sd(const std::vector<double>& draws) {
    if (draws.empty()) return 0.0;
    double mean = 0.0;
    for (const double d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    double ss = 0.0;
    for (const double d : draws) ss += (d - mean) * (d - mean);
    return std::sqrt(ss / static_cast<double>(draws.size()));
}

}  // namespace

GateBootstrap joint_gate_estimate(std::span<const double> Y,
                                  std::span<const std::uint8_t> member1,
                                  std::span<const double> probs1,
                                  std::span<const std::uint8_t> member0,
                                  std::span<const double> probs0, EstimatorKind kind,
                                  std::size_t B, std::uint64_t seed, ResampleMode mode,
                                  std::span<const NodeId> population, std::string label1,
                                  std::string label0) {
    const std::size_t n = Y.size();
    if (member1.size() != n || probs1.size() != n || member0.size() != n || probs0.size() != n) {
        throw ArgumentError("joint_gate_estimate: input vectors must share one length");
    }
    if (B < 2) throw ArgumentError("joint_gate_estimate: B must be >= 2");
    if (population.empty()) throw ArgumentError("joint_gate_estimate: empty population");

    GateBootstrap out;
    std::vector<std::uint8_t> m1(member1.begin(), member1.end());
    std::vector<std::uint8_t> m0(member0.begin(), member0.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (m1[i] && !(probs1[i] > 0.0)) {
            m1[i] = 0;
            ++out.dropped_zero_prob;
        }
        if (m0[i] && !(probs0[i] > 0.0)) {
            m0[i] = 0;
            ++out.dropped_zero_prob;
        }
    }

    out.leg1 = weighted_mean(Y, m1, probs1, kind);
    out.leg0 = weighted_mean(Y, m0, probs0, kind);
    out.leg1.label = label1;
    out.leg0.label = label0;
    out.leg1.seed = out.leg0.seed = seed;
    out.leg1.bootstrap_b = out.leg0.bootstrap_b = B;

    std::vector<std::vector<NodeId>> cluster_members;
    if (mode.kind == ResampleMode::Kind::Cluster) {
        if (mode.partition == nullptr || mode.partition->cluster_of.size() != n) {
            throw ArgumentError("joint_gate_estimate: cluster mode needs a matching partition");
        }
        cluster_members.resize(static_cast<std::size_t>(mode.partition->cluster_count));
        std::vector<std::uint8_t> in_pop(n, 0);
        for (const NodeId u : population) in_pop[static_cast<std::size_t>(u)] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (in_pop[i]) {
                cluster_members[static_cast<std::size_t>(mode.partition->cluster_of[i])]
                    .push_back(static_cast<NodeId>(i));
            }
        }
    }

    std::vector<std::optional<std::pair<double, double>>> results(B);
    parallel_for(B, [&](std::size_t b) {
        rng::Stream stream(rng::derive(seed, b));
        LegSums s1, s0;
        const auto absorb = [&](NodeId u) {
            const auto i = static_cast<std::size_t>(u);
            ++s1.size;
            ++s0.size;
            if (m1[i]) {
                const double w = 1.0 / probs1[i];
                s1.weighted += Y[i] * w;
                s1.weight += w;
            }
            if (m0[i]) {
                const double w = 1.0 / probs0[i];
                s0.weighted += Y[i] * w;
                s0.weight += w;
            }
        };
        if (mode.kind == ResampleMode::Kind::Unit) {
            for (std::size_t k = 0; k < population.size(); ++k) {
                absorb(population[stream.next_below(population.size())]);
            }
        } else {
            const std::size_t kc = cluster_members.size();
            for (std::size_t c = 0; c < kc; ++c) {
                for (const NodeId u : cluster_members[stream.next_below(kc)]) absorb(u);
            }
        }
        const bool ok = kind == EstimatorKind::HorvitzThompson
                            ? s1.size > 0 && s0.size > 0
                            : s1.weight > 0.0 && s0.weight > 0.0;
        if (ok) results[b] = std::make_pair(leg_point(s1, kind), leg_point(s0, kind));
    });

    std::vector<double> d1, d0, dd;
    for (const auto& r : results) {
        if (!r.has_value()) {
            ++out.failures;
            continue;
        }
        d1.push_back(r->first);
        d0.push_back(r->second);
        dd.push_back(r->first - r->second);
    }
    if (out.failures * 10 > B) {
        throw EstimationError("joint_gate_estimate: " + std::to_string(out.failures) + " of " +
                              std::to_string(B) + " resamples failed");
    }
    if (dd.empty()) throw EstimationError("joint_gate_estimate: no successful resamples");

    out.leg1.se = draws_sd(d1);
    out.leg0.se = draws_sd(d0);
    out.leg1.draws = std::move(d1);
    out.leg0.draws = std::move(d0);
    out.diff.label = out.leg1.label + " - " + out.leg0.label;
    out.diff.kind = kind;
    out.diff.point = out.leg1.point - out.leg0.point;
    out.diff.se = draws_sd(dd);
    out.diff.draws = std::move(dd);
    out.diff.member_count = std::min(out.leg1.member_count, out.leg0.member_count);
    out.diff.bootstrap_b = B;
    out.diff.seed = seed;
    return out;
}

namespace {

bool provably_disjoint(const ExposureCondition& a, const ExposureCondition& b) {
    const auto* box_a = std::get_if<BoxCondition>(&a);
    const auto* box_b = std::get_if<BoxCondition>(&b);
    if (box_a && box_b && box_a->dims.size() == box_b->dims.size()) {
        for (std::size_t m = 0; m < box_a->dims.size(); ++m) {
            const auto& ia = box_a->dims[m];
            const auto& ib = box_b->dims[m];
            // Empty interval intersection in one dim makes the boxes disjoint.
            const double lo = std::max(ia.lo, ib.lo);
            const double hi = std::min(ia.hi, ib.hi);
            if (lo > hi) return true;
            if (lo == hi && ((ia.lo == lo && ia.lo_strict) || (ib.lo == lo && ib.lo_strict))) {
                return true;
            }
        }
        return false;
    }
    const auto* pred_a = std::get_if<PredicateCondition>(&a);
    const auto* pred_b = std::get_if<PredicateCondition>(&b);
    if (pred_a && pred_b) {
        if (pred_a->ego_z != pred_b->ego_z) return true;
        if (pred_a->frac_dim == pred_b->frac_dim && pred_a->q == pred_b->q &&
            pred_a->above != pred_b->above) {
            return true;
        }
    }
    return false;
}

bool condition_contains(const ExposureCondition& c, std::span<const double> row) {
    if (const auto* box = std::get_if<BoxCondition>(&c)) return box->contains(row);
    return std::get<PredicateCondition>(c).contains(row);
}

}  // namespace

PValueResult exact_p_value(const RepresentationBuilder& builder,
                           const RandomizationDesign& design, const AssignmentVector& z_obs,
                           std::span<const double> Y, const ExposureCondition& cond_a,
                           const ExposureCondition& cond_b, int hop, std::size_t draws,
                           std::uint64_t seed, std::uint64_t observed_u_seed,
                           const std::vector<double>* probs_a,
                           const std::vector<double>* probs_b, std::size_t prob_replicates) {
    const Graph& g = builder.graph();
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    if (Y.size() != n || z_obs.z.size() != n) {
        throw ArgumentError("exact_p_value: Y and z must match the graph");
    }
    if (hop < 1) throw ArgumentError("exact_p_value: hop must be >= 1");
    if (draws < 1) throw ArgumentError("exact_p_value: draws must be >= 1");
    if (std::holds_alternative<KnnConditionSpec>(cond_a) ||
        std::holds_alternative<KnnConditionSpec>(cond_b)) {
        throw InferenceError(
            "exact_p_value: rank-based conditions are not ego-local; use box conditions");
    }
    if (!provably_disjoint(cond_a, cond_b)) {
        throw InferenceError("exact_p_value: conditions must be disjoint");
    }

    const RepresentationMatrix reps = builder.build(z_obs, observed_u_seed);
    const auto member_a = observed_membership(cond_a, reps);
    const auto member_b = observed_membership(cond_b, reps);

    // Greedy focal selection in descending node order with hop-disjointness.
    PValueResult result;
    result.focal.hop = hop;
    result.focal.condition_a = condition_label(cond_a);
    result.focal.condition_b = condition_label(cond_b);
    std::vector<bool> used(n, false);
    std::vector<std::vector<NodeId>> focal_regions;
    for (NodeId i = static_cast<NodeId>(n); i-- > 0;) {
        const auto idx = static_cast<std::size_t>(i);
        if (!member_a[idx] && !member_b[idx]) continue;
        const EgoNetwork ego = ego_network(g, i, hop);
        bool clash = false;
        for (const NodeId v : ego.members) {
            if (used[static_cast<std::size_t>(v)]) {
                clash = true;
                break;
            }
        }
        if (clash) continue;
        for (const NodeId v : ego.members) used[static_cast<std::size_t>(v)] = true;
        result.focal.units.push_back(i);
        focal_regions.push_back(ego.members);
    }
    if (result.focal.units.empty()) {
        throw InferenceError("exact_p_value: no non-overlapping focal units");
    }

    std::vector<double> pa, pb;
    if (probs_a && probs_b) {
        pa = *probs_a;
        pb = *probs_b;
    } else {
        ReplicateCache cache(builder, design, prob_replicates,
                             rng::label_seed(seed, "pvalue-probs"));
        pa = cache.membership_probability(cond_a);
        pb = cache.membership_probability(cond_b);
    }
    // Floor at the smallest resolvable Monte Carlo probability so a focal
    // unit with an unlucky zero estimate cannot blow up the statistic.
    const double floor_p = 1.0 / (static_cast<double>(prob_replicates) + 1.0);
    for (auto& v : pa) v = std::max(v, floor_p);
    for (auto& v : pb) v = std::max(v, floor_p);

    const std::size_t f = result.focal.units.size();
    const std::size_t m = builder.dim_count();

    const auto t_statistic = [&](const std::vector<std::uint8_t>& in_a,
                                 const std::vector<std::uint8_t>& in_b) {
        double t = 0.0;
        for (std::size_t k = 0; k < f; ++k) {
            const auto i = static_cast<std::size_t>(result.focal.units[k]);
            if (in_a[k]) t += Y[i] / pa[i];
            if (in_b[k]) t -= Y[i] / pb[i];
        }
        return std::abs(t);
    };

    std::vector<std::uint8_t> obs_a(f), obs_b(f);
    for (std::size_t k = 0; k < f; ++k) {
        const auto i = static_cast<std::size_t>(result.focal.units[k]);
        obs_a[k] = member_a[i];
        obs_b[k] = member_b[i];
    }
    result.t_observed = t_statistic(obs_a, obs_b);

    // Draws re-randomize the focal ego networks only; a draw is admissible
    // when every focal unit lands in one of the two conditions.
    std::vector<std::uint8_t> admissible(draws, 0);
    std::vector<std::uint8_t> exceeds(draws, 0);
    parallel_for(draws, [&](std::size_t d) {
        rng::Stream stream(rng::derive(seed, d));
        std::vector<std::uint8_t> z(z_obs.z.begin(), z_obs.z.end());
        if (design.kind == DesignKind::Bernoulli) {
            for (const auto& region : focal_regions) {
                for (const NodeId v : region) {
                    z[static_cast<std::size_t>(v)] = stream.next_uniform() < design.p ? 1 : 0;
                }
            }
        } else {
            std::vector<std::int8_t> cluster_draw(
                static_cast<std::size_t>(design.partition.cluster_count), -1);
            for (const auto& region : focal_regions) {
                for (const NodeId v : region) {
                    const auto c =
                        static_cast<std::size_t>(design.partition.cluster_of[static_cast<std::size_t>(v)]);
                    if (cluster_draw[c] < 0) {
                        cluster_draw[c] = stream.next_uniform() < design.p ? 1 : 0;
                    }
                    z[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(cluster_draw[c]);
                }
            }
        }
        const std::uint64_t u_seed = rng::label_seed(rng::derive(seed, d), "pvalue-U");
        std::vector<double> row(m);
        std::vector<std::uint8_t> in_a(f, 0), in_b(f, 0);
        bool ok = true;
        for (std::size_t k = 0; k < f && ok; ++k) {
            builder.row_into(result.focal.units[k], z, u_seed, row.data());
            in_a[k] = condition_contains(cond_a, row) ? 1 : 0;
            in_b[k] = condition_contains(cond_b, row) ? 1 : 0;
            ok = in_a[k] || in_b[k];
        }
        if (!ok) return;
        admissible[d] = 1;
        exceeds[d] = t_statistic(in_a, in_b) >= result.t_observed ? 1 : 0;
    });

    std::size_t n_adm = 0, n_exceed = 0;
    for (std::size_t d = 0; d < draws; ++d) {
        n_adm += admissible[d];
        n_exceed += exceeds[d];
    }
    result.admissible_draws = n_adm;
    // The observed assignment is itself an admissible draw with T >= T_obs.
    result.p = static_cast<double>(1 + n_exceed) / static_cast<double>(1 + n_adm);
    return result;
}

}  // namespace cnm
