#include "cnm/exposure.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

bool BoxCondition::contains(std::span<const double> r) const {
    if (r.size() != dims.size()) return false;
    for (std::size_t m = 0; m < dims.size(); ++m) {
        if (!dims[m].contains(r[m])) return false;
    }
    return true;
}

BoxCondition BoxCondition::whole(std::size_t m, std::string label) {
    BoxCondition box;
    box.label = std::move(label);
    box.dims.assign(m, Interval{0.0, 1.0, false});
    return box;
}

BoxCondition BoxCondition::split_left(std::size_t dim, double theta, std::string label) const {
    BoxCondition child = *this;
    child.label = std::move(label);
    child.dims[dim].hi = theta;
    return child;
}

BoxCondition BoxCondition::split_right(std::size_t dim, double theta, std::string label) const {
    BoxCondition child = *this;
    child.label = std::move(label);
    child.dims[dim].lo = theta;
    child.dims[dim].lo_strict = true;
    return child;
}

bool PredicateCondition::contains(std::span<const double> r) const {
    if (frac_dim >= r.size()) return false;
    if (static_cast<int>(r[0] > 0.5 ? 1 : 0) != ego_z) return false;
    return above ? r[frac_dim] > q : r[frac_dim] <= q;
}

double KnnConditionSpec::distance_to(std::span<const double> r) const {
    double d = 0.0;
    for (std::size_t m = 0; m < reference.size(); ++m) {
        d += weights[m] * std::abs(r[m] - reference[m]);
    }
    return d;
}

const std::string& condition_label(const ExposureCondition& c) {
    return std::visit([](const auto& v) -> const std::string& { return v.label; }, c);
}

namespace {

// Indices of the k units with smallest (distance, index).
std::vector<std::uint8_t> select_k_smallest(const std::vector<double>& dist, std::size_t k) {
    const std::size_t n = dist.size();
    std::vector<std::uint8_t> member(n, 0);
    if (k >= n) {
        std::fill(member.begin(), member.end(), std::uint8_t{1});
        return member;
    }
    if (k == 0) return member;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k) - 1,
                     order.end(), [&](std::uint32_t a, std::uint32_t b) {
                         return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                     });
    for (std::size_t j = 0; j < k; ++j) member[order[j]] = 1;
    return member;
}

}  // namespace

std::vector<std::uint8_t> observed_membership(const ExposureCondition& c,
                                              const RepresentationMatrix& reps) {
    std::vector<std::uint8_t> member(reps.n, 0);
    if (const auto* box = std::get_if<BoxCondition>(&c)) {
        for (std::size_t i = 0; i < reps.n; ++i) member[i] = box->contains(reps.row(i)) ? 1 : 0;
        return member;
    }
    if (const auto* pred = std::get_if<PredicateCondition>(&c)) {
        for (std::size_t i = 0; i < reps.n; ++i) member[i] = pred->contains(reps.row(i)) ? 1 : 0;
        return member;
    }
    const auto& knn = std::get<KnnConditionSpec>(c);
    std::vector<double> dist(reps.n);
    for (std::size_t i = 0; i < reps.n; ++i) dist[i] = knn.distance_to(reps.row(i));
    return select_k_smallest(dist, knn.k);
}

ReplicateCache::ReplicateCache(const RepresentationBuilder& builder,
                               const RandomizationDesign& design, std::size_t B,
                               std::uint64_t master_seed)
    : n_(static_cast<std::size_t>(builder.graph().node_count())),
      b_(B),
      m_(builder.dim_count()),
      schema_(builder.schema()),
      design_tag_(design.tag()),
      master_seed_(master_seed) {
    if (B < 1) throw ArgumentError("replicate cache: B must be >= 1");
    if (design.n != n_) throw ArgumentError("design population does not match graph");

    std::vector<std::vector<std::uint8_t>> z(B);
    std::vector<std::uint64_t> u_seed(B);
    parallel_for(B, [&](std::size_t b) {
        z[b] = replicate_assignment(design, b, master_seed).z;
        u_seed[b] = rng::label_seed(rng::derive(master_seed, b), "replicate-U");
    });

    data_.resize(n_ * b_ * m_);
    parallel_for_chunks(n_, [&](std::size_t begin, std::size_t end) {
        std::vector<double> row(m_);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t b = 0; b < b_; ++b) {
                builder.row_into(static_cast<NodeId>(i), z[b], u_seed[b], row.data());
                float* out = data_.data() + (i * b_ + b) * m_;
                for (std::size_t m = 0; m < m_; ++m) out[m] = static_cast<float>(row[m]);
            }
        }
    });
}

std::vector<double> ReplicateCache::membership_probability(const ExposureCondition& c) const {
    std::vector<double> probs(n_, 0.0);
    const double denom = static_cast<double>(b_) + 1.0;

    if (const auto* knn = std::get_if<KnnConditionSpec>(&c)) {
        // Rank per replicate; a unit's hit count is how often it makes the
        // cut across replicates.
        std::vector<std::atomic<std::uint32_t>> hits(n_);
        for (auto& h : hits) h.store(0, std::memory_order_relaxed);
        parallel_for(b_, [&](std::size_t b) {
            std::vector<double> dist(n_);
            std::vector<double> row(m_);
            for (std::size_t i = 0; i < n_; ++i) {
                const float* src = data_.data() + (i * b_ + b) * m_;
                for (std::size_t m = 0; m < m_; ++m) row[m] = src[m];
                dist[i] = knn->distance_to(row);
            }
            const auto member = select_k_smallest(dist, knn->k);
            for (std::size_t i = 0; i < n_; ++i) {
                if (member[i]) hits[i].fetch_add(1, std::memory_order_relaxed);
            }
        });
        for (std::size_t i = 0; i < n_; ++i) {
            probs[i] = static_cast<double>(hits[i].load(std::memory_order_relaxed)) / denom;
        }
        return probs;
    }

    parallel_for(n_, [&](std::size_t i) {
        std::vector<double> row(m_);
        std::size_t hits = 0;
        for (std::size_t b = 0; b < b_; ++b) {
            const float* src = data_.data() + (i * b_ + b) * m_;
            for (std::size_t m = 0; m < m_; ++m) row[m] = src[m];
            const bool in = std::visit(
                [&](const auto& cond) -> bool {
                    using T = std::decay_t<decltype(cond)>;
                    if constexpr (std::is_same_v<T, KnnConditionSpec>) {
                        return false;
                    } else {
                        return cond.contains(row);
                    }
                },
                c);
            if (in) ++hits;
        }
        probs[i] = static_cast<double>(hits) / denom;
    });
    return probs;
}

std::vector<double> ExposureProbabilityTable::column_values(std::size_t k) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = at(i, k);
    return out;
}

ExposureProbabilityTable estimate_membership_prob(
    const ReplicateCache& cache, const std::vector<ExposureCondition>& conditions) {
    ExposureProbabilityTable table;
    table.n = cache.n();
    table.B = cache.replicate_count();
    table.design_tag = cache.design_tag();
    table.master_seed = cache.master_seed();
    table.labels.reserve(conditions.size());
    for (const auto& c : conditions) table.labels.push_back(condition_label(c));
    table.probs.resize(table.n * conditions.size());
    for (std::size_t k = 0; k < conditions.size(); ++k) {
        const auto col = cache.membership_probability(conditions[k]);
        for (std::size_t i = 0; i < table.n; ++i) {
            table.probs[i * conditions.size() + k] = col[i];
        }
    }
    return table;
}

ExposureProbabilityTable estimate_membership_prob(const Graph& g,
                                                  const RandomizationDesign& design,
                                                  const MotifSchema& schema,
                                                  const std::vector<ExposureCondition>& conditions,
                                                  std::size_t B, std::uint64_t master_seed,
                                                  const SamplingConfig& sampling) {
    if (B < 1) throw ArgumentError("estimate_membership_prob: B must be >= 1");
    RepresentationBuilder builder(g, schema, sampling);
    ReplicateCache cache(builder, design, B, master_seed);
    return estimate_membership_prob(cache, conditions);
}

PositivityVerdict check_positivity(std::span<const double> probs, double epsilon, double delta) {
    if (epsilon < 0.0) throw ArgumentError("positivity epsilon must be >= 0");
    if (delta < 0.0 || delta >= 1.0) throw ArgumentError("positivity delta must lie in [0,1)");
    std::size_t violating = 0;
    for (const double p : probs) {
        if (p <= epsilon) ++violating;
    }
    PositivityVerdict v;
    v.violating_fraction =
        probs.empty() ? 0.0 : static_cast<double>(violating) / static_cast<double>(probs.size());
    v.ok = v.violating_fraction <= delta;
    return v;
}

}  // namespace cnm
