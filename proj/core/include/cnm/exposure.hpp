#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/motifs.hpp"

namespace cnm {

/// Closed-above interval; the lower edge is open after a right split so tree
/// children tile their parent exactly.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_strict = false;

    bool contains(double x) const { return (lo_strict ? x > lo : x >= lo) && x <= hi; }
};

/// Axis-aligned box over the representation space.
struct BoxCondition {
    std::string label;
    std::vector<Interval> dims;

    bool contains(std::span<const double> r) const;
    static BoxCondition whole(std::size_t m, std::string label = "all");
    BoxCondition split_left(std::size_t dim, double theta, std::string label) const;
    BoxCondition split_right(std::size_t dim, double theta, std::string label) const;
};

/// Built-in fractional-q rule: ego arm crossed with a treated-neighbor
/// fraction threshold.
struct PredicateCondition {
    std::string label;
    int ego_z = 1;
    std::size_t frac_dim = 1;
    double q = 0.5;
    bool above = true;

    bool contains(std::span<const double> r) const;
};

/// Membership by ranking within the K nearest units to a reference point
/// under a weighted L1 metric. Applies identically to observed and replicate
/// representations, so its exposure probability is the probability of ranking
/// within K. Ties at the K-th distance break toward the lower node index.
struct KnnConditionSpec {
    std::string label;
    std::vector<double> reference;
    std::vector<double> weights;
    std::size_t k = 1;

    double distance_to(std::span<const double> r) const;
};

using ExposureCondition = std::variant<BoxCondition, PredicateCondition, KnnConditionSpec>;

const std::string& condition_label(const ExposureCondition& c);

// Unit membership under the observed representations (rank-aware for kNN).
std::vector<std::uint8_t> observed_membership(const ExposureCondition& c,
                                              const RepresentationMatrix& reps);

/// N x B x M store of replicate representations R_i^(b); built once per
/// (design, schema, B, seed) and probed by every candidate condition.
class ReplicateCache {
public:
    ReplicateCache() = default;
    ReplicateCache(const RepresentationBuilder& builder, const RandomizationDesign& design,
                   std::size_t B, std::uint64_t master_seed);

    std::size_t n() const { return n_; }
    std::size_t replicate_count() const { return b_; }
    std::size_t dim_count() const { return m_; }
    const MotifSchema& schema() const { return schema_; }
    const std::string& design_tag() const { return design_tag_; }
    std::uint64_t master_seed() const { return master_seed_; }

    // B contiguous rows of M floats for one unit.
    std::span<const float> unit_rows(std::size_t i) const {
        return {data_.data() + i * b_ * m_, b_ * m_};
    }
    float at(std::size_t i, std::size_t b, std::size_t dim) const {
        return data_[(i * b_ + b) * m_ + dim];
    }

    // App.-C ratio per unit: (# replicates in condition) / (B+1).
    std::vector<double> membership_probability(const ExposureCondition& c) const;

private:
    std::size_t n_ = 0, b_ = 0, m_ = 0;
    std::vector<float> data_;
    MotifSchema schema_;
    std::string design_tag_;
    std::uint64_t master_seed_ = 0;
};

/// Estimated general probabilities of exposure, one column per condition.
struct ExposureProbabilityTable {
    std::size_t n = 0;
    std::vector<std::string> labels;
    std::vector<double> probs;  // row-major n x labels.size()
    std::size_t B = 0;
    std::string design_tag;
    std::uint64_t master_seed = 0;

    std::span<const double> column(std::size_t) const = delete;  // stored row-major
    double at(std::size_t i, std::size_t k) const { return probs[i * labels.size() + k]; }
    std::vector<double> column_values(std::size_t k) const;
};

ExposureProbabilityTable estimate_membership_prob(const Graph& g,
                                                  const RandomizationDesign& design,
                                                  const MotifSchema& schema,
                                                  const std::vector<ExposureCondition>& conditions,
                                                  std::size_t B, std::uint64_t master_seed,
                                                  const SamplingConfig& sampling = {});

ExposureProbabilityTable estimate_membership_prob(const ReplicateCache& cache,
                                                  const std::vector<ExposureCondition>& conditions);

/// Relaxed positivity verdict per App.-E style (epsilon, delta) rule.
struct PositivityVerdict {
    bool ok = false;
    double violating_fraction = 0.0;
};

// ok iff the fraction of units with prob <= epsilon is at most delta.
PositivityVerdict check_positivity(std::span<const double> probs, double epsilon, double delta);

}  // namespace cnm
