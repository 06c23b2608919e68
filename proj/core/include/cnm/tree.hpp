#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cnm/estimators.hpp"
#include "cnm/exposure.hpp"

namespace cnm {

struct TreeHyperparams {
    enum class Score { TStat, WSSE };
    enum class ThresholdMode { Auto, AllObserved, Quantiles };

    Score score = Score::TStat;
    double gamma = 1.96;  // minimum accepted score
    int kappa = 100;      // minimum training units per child
    double epsilon = 0.0;
    double delta = 0.01;
    double honest_fraction = 0.5;  // training share
    int max_depth = 0;             // 0 = unlimited
    ThresholdMode threshold_mode = ThresholdMode::Auto;
    int quantile_count = 256;
    EstimatorKind leaf_estimator = EstimatorKind::Hajek;
    std::size_t bootstrap_b = 500;

    void validate() const;
};

struct TreeNode {
    // Internal node: split on dims[dim] at theta; left holds "<= theta".
    int dim = -1;
    double theta = 0.0;
    std::unique_ptr<TreeNode> left, right;
    double split_score = 0.0;

    // Leaf payload (estimation-set values).
    std::string label;
    double mu = 0.0;
    double se = 0.0;
    std::size_t n_train = 0;
    std::size_t n_est = 0;
    std::size_t n_est_dropped = 0;  // zero-probability members excluded
    PositivityVerdict positivity;

    BoxCondition box;

    bool is_leaf() const { return dim < 0; }
};

/// Partition of [0,1]^M into leaf boxes, fitted on the training half and
/// estimated on the held-out half.
class ExposureTree {
public:
    ExposureTree() = default;
    ExposureTree(std::unique_ptr<TreeNode> root, std::vector<std::uint8_t> is_training,
                 std::vector<std::uint8_t> in_estimation, MotifSchema schema);

    const TreeNode& root() const { return *root_; }
    std::vector<const TreeNode*> leaves() const;
    const TreeNode& assign_leaf(std::span<const double> r) const;
    std::size_t leaf_count() const { return leaves().size(); }

    std::span<const std::uint8_t> is_training() const { return is_training_; }
    std::span<const std::uint8_t> in_estimation() const { return in_estimation_; }
    const MotifSchema& schema() const { return schema_; }

    std::string to_json() const;
    std::string to_dot() const;

    // Split structure only; leaf estimates are ignored.
    static bool same_structure(const ExposureTree& a, const ExposureTree& b);

private:
    std::unique_ptr<TreeNode> root_;
    std::vector<std::uint8_t> is_training_;
    std::vector<std::uint8_t> in_estimation_;
    MotifSchema schema_;
};

// Honest fit: a seeded permutation puts round(N * honest_fraction) units in
// the training half; splits see training outcomes plus the Y-free replicate
// cache, leaves are estimated on the held-out half.
ExposureTree fit_tree(const RepresentationMatrix& reps, std::span<const double> Y,
                      const ReplicateCache& cache, const TreeHyperparams& params,
                      std::uint64_t split_seed);

// Explicit masks (disjoint). Masks control whose outcomes are read; the
// positivity rule always sees the whole cache population, which is a property
// of the design rather than of the sample.
ExposureTree fit_tree_with_masks(const RepresentationMatrix& reps, std::span<const double> Y,
                                 const ReplicateCache& cache, const TreeHyperparams& params,
                                 std::vector<std::uint8_t> is_training,
                                 std::vector<std::uint8_t> in_estimation,
                                 std::uint64_t split_seed);

/// Gate estimate from the two leaves containing r1 and r0.
struct TreeGateEstimate {
    EstimateReport tau;
    EstimateReport leg1, leg0;
    std::string leaf1_label, leaf0_label;
    bool degenerate = false;  // r1 and r0 fell in the same leaf
};

TreeGateEstimate tree_gate_effect(const ExposureTree& tree, const ReferenceRepresentations& refs,
                                  const RepresentationMatrix& reps, std::span<const double> Y,
                                  const ReplicateCache& cache, const TreeHyperparams& params,
                                  std::uint64_t bootstrap_seed);

}  // namespace cnm
