#include "cnm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

void TreeHyperparams::validate() const {
    if (gamma < 0.0) throw ArgumentError("tree: gamma must be >= 0");
    if (kappa < 2) throw ArgumentError("tree: kappa must be >= 2");
    if (!(honest_fraction > 0.0 && honest_fraction < 1.0)) {
        throw ArgumentError("tree: honest_fraction must lie in (0,1)");
    }
    if (epsilon < 0.0) throw ArgumentError("tree: epsilon must be >= 0");
    if (delta < 0.0 || delta >= 1.0) throw ArgumentError("tree: delta must lie in [0,1)");
    if (quantile_count < 1) throw ArgumentError("tree: quantile_count must be >= 1");
    if (bootstrap_b < 2) throw ArgumentError("tree: bootstrap_b must be >= 2");
}

ExposureTree::ExposureTree(std::unique_ptr<TreeNode> root, std::vector<std::uint8_t> is_training,
                           std::vector<std::uint8_t> in_estimation, MotifSchema schema)
    : root_(std::move(root)),
      is_training_(std::move(is_training)),
      in_estimation_(std::move(in_estimation)),
      schema_(std::move(schema)) {}

namespace {

void collect_leaves(const TreeNode* node, std::vector<const TreeNode*>& out) {
    if (node->is_leaf()) {
        out.push_back(node);
        return;
    }
    collect_leaves(node->left.get(), out);
    collect_leaves(node->right.get(), out);
}

}  // namespace

std::vector<const TreeNode*> ExposureTree::leaves() const {
    std::vector<const TreeNode*> out;
    if (root_) collect_leaves(root_.get(), out);
    return out;
}

const TreeNode& ExposureTree::assign_leaf(std::span<const double> r) const {
    const TreeNode* node = root_.get();
    while (!node->is_leaf()) {
        node = r[static_cast<std::size_t>(node->dim)] <= node->theta ? node->left.get()
                                                                     : node->right.get();
    }
    return *node;
}

bool ExposureTree::same_structure(const ExposureTree& a, const ExposureTree& b) {
    const std::function<bool(const TreeNode*, const TreeNode*)> eq =
        [&](const TreeNode* x, const TreeNode* y) -> bool {
        if (x->is_leaf() != y->is_leaf()) return false;
        if (x->is_leaf()) return true;
        if (x->dim != y->dim || x->theta != y->theta) return false;
        return eq(x->left.get(), y->left.get()) && eq(x->right.get(), y->right.get());
    };
    return eq(&a.root(), &b.root());
}

namespace {

using nlohmann::ordered_json;

ordered_json node_to_json(const TreeNode& node, const MotifSchema& schema) {
    if (node.is_leaf()) {
        ordered_json j;
        j["leaf_label"] = node.label;
        j["mu"] = node.mu;
        j["se"] = node.se;
        j["n_train"] = node.n_train;
        j["n_est"] = node.n_est;
        j["n_est_dropped"] = node.n_est_dropped;
        j["positivity_ok"] = node.positivity.ok;
        j["violating_fraction"] = node.positivity.violating_fraction;
        return j;
    }
    ordered_json j;
    j["dim"] = node.dim;
    j["dim_code"] = schema.dims[static_cast<std::size_t>(node.dim)].code();
    j["theta"] = node.theta;
    j["score"] = node.split_score;
    j["left"] = node_to_json(*node.left, schema);
    j["right"] = node_to_json(*node.right, schema);
    return j;
}

void node_to_dot(const TreeNode& node, const MotifSchema& schema, std::string& out, int& counter) {
    const int my_id = counter++;
    if (node.is_leaf()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "  n%d [shape=box,label=\"%s\\nmu=%.4g +/- %.4g\\nn=%zu\"];\n",
                      my_id, node.label.c_str(), node.mu, node.se, node.n_est);
        out += buf;
        return;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  n%d [label=\"%s\"];\n", my_id,
                  schema.dims[static_cast<std::size_t>(node.dim)].code().c_str());
    out += buf;
    const int left_id = counter;
    node_to_dot(*node.left, schema, out, counter);
    const int right_id = counter;
    node_to_dot(*node.right, schema, out, counter);
    std::snprintf(buf, sizeof(buf), "  n%d -> n%d [label=\"<= %.4g\"];\n", my_id, left_id,
                  node.theta);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  n%d -> n%d [label=\"> %.4g\"];\n", my_id, right_id,
                  node.theta);
    out += buf;
}

}  // namespace

std::string ExposureTree::to_json() const {
    ordered_json j;
    j["schema"] = schema_.codes();
    j["tree"] = node_to_json(*root_, schema_);
    return j.dump(2);
}

std::string ExposureTree::to_dot() const {
    std::string out = "digraph exposure_tree {\n";
    int counter = 0;
    node_to_dot(*root_, schema_, out, counter);
    out += "}\n";
    return out;
}

namespace {

constexpr double kInfScore = std::numeric_limits<double>::infinity();

struct NodeWork {
    BoxCondition box;
    std::vector<std::uint32_t> train_ids;
    std::vector<std::uint32_t> est_ids;
    // Per population unit: replicate indices whose representation lies in box.
    std::vector<std::vector<std::uint32_t>> hits;
    int depth = 0;
};

struct FitContext {
    const RepresentationMatrix* reps = nullptr;
    std::span<const double> Y;
    const ReplicateCache* cache = nullptr;
    const TreeHyperparams* params = nullptr;
    std::uint64_t seed = 0;
    std::size_t n = 0, m = 0, B = 0;
    bool all_observed = false;
    int leaf_counter = 0;
};

struct HajekSums {
    double weighted = 0.0;
    double weight = 0.0;
    std::size_t members = 0;

    void add(double y, double p) {
        if (!(p > 0.0)) return;
        const double w = 1.0 / p;
        weighted += y * w;
        weight += w;
        ++members;
    }
    double mean() const { return weight > 0.0 ? weighted / weight : 0.0; }
};

// Linearized variance of the Hajek ratio estimator; used only inside the
// t-statistic split score (reported SEs always come from the bootstrap).
double hajek_variance(std::span<const double> Y, std::span<const std::uint32_t> ids,
                      const std::function<double(std::uint32_t)>& prob, double mu) {
    double num = 0.0, weight = 0.0;
    for (const std::uint32_t i : ids) {
        const double p = prob(i);
        if (!(p > 0.0)) continue;
        const double w = 1.0 / p;
        num += w * w * (Y[i] - mu) * (Y[i] - mu);
        weight += w;
    }
    return weight > 0.0 ? num / (weight * weight) : 0.0;
}

struct DimScan {
    std::vector<double> thetas;
    std::vector<double> scores;        // parallel to thetas; -inf when rejected
    std::vector<std::int64_t> val_off;  // per unit offsets into vals
    std::vector<float> vals;            // sorted replicate values within node
};

std::unique_ptr<TreeNode> split_node(FitContext& ctx, NodeWork work);

std::unique_ptr<TreeNode> make_leaf(FitContext& ctx, NodeWork& work) {
    auto node = std::make_unique<TreeNode>();
    node->box = work.box;
    node->n_train = work.train_ids.size();
    node->n_est = work.est_ids.size();
    node->label = "R" + std::to_string(++ctx.leaf_counter);
    node->box.label = node->label;

    const double denom = static_cast<double>(ctx.B) + 1.0;
    std::vector<double> probs(ctx.n);
    for (std::size_t i = 0; i < ctx.n; ++i) {
        probs[i] = static_cast<double>(work.hits[i].size()) / denom;
    }
    node->positivity = check_positivity(probs, ctx.params->epsilon, ctx.params->delta);

    std::vector<std::uint8_t> member(ctx.n, 0);
    std::size_t usable = 0;
    for (const std::uint32_t i : work.est_ids) {
        if (probs[i] > 0.0) {
            member[i] = 1;
            ++usable;
        } else {
            ++node->n_est_dropped;
        }
    }
    if (usable == 0) {
        throw FitError("fit_tree: estimation set empty in leaf " + node->label +
                       "; increase honest_fraction or kappa");
    }
    const EstimateReport point =
        weighted_mean(ctx.Y, member, probs, ctx.params->leaf_estimator);
    node->mu = point.point;

    // Algorithm-style resampling of the whole estimation sample; membership
    // is recomputed inside each draw.
    const auto& Y = ctx.Y;
    const EstimatorKind kind = ctx.params->leaf_estimator;
    std::vector<NodeId> est_pop;
    est_pop.reserve(work.est_ids.size());
    for (const std::uint32_t i : work.est_ids) est_pop.push_back(static_cast<NodeId>(i));
    const auto estimator =
        [&Y, &member, &probs, kind](std::span<const NodeId> idx) -> std::optional<double> {
        double weighted = 0.0, weight = 0.0;
        std::size_t count = 0;
        for (const NodeId u : idx) {
            const auto i = static_cast<std::size_t>(u);
            if (!member[i]) continue;
            const double w = 1.0 / probs[i];
            weighted += Y[i] * w;
            weight += w;
            ++count;
        }
        if (kind == EstimatorKind::HorvitzThompson) {
            if (count == 0) return std::nullopt;
            return weighted / static_cast<double>(idx.size());
        }
        if (!(weight > 0.0)) return std::nullopt;
        return weighted / weight;
    };
    // Resample within the estimation sample, with replacement, same size.
    const std::uint64_t boot_seed =
        rng::derive(rng::label_seed(ctx.seed, "leaf-boot"), ctx.leaf_counter);
    const BootstrapResult boot = [&] {
        std::vector<std::optional<double>> results(ctx.params->bootstrap_b);
        parallel_for(ctx.params->bootstrap_b, [&](std::size_t b) {
            rng::Stream stream(rng::derive(boot_seed, b));
            std::vector<NodeId> idx(est_pop.size());
            for (std::size_t k = 0; k < est_pop.size(); ++k) {
                idx[k] = est_pop[stream.next_below(est_pop.size())];
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
        if (out.failures * 10 > ctx.params->bootstrap_b) {
            throw EstimationError("fit_tree: leaf bootstrap failed on " +
                                  std::to_string(out.failures) + " resamples");
        }
        double mean = 0.0;
        for (const double d : out.draws) mean += d;
        mean /= static_cast<double>(out.draws.size());
        double ss = 0.0;
        for (const double d : out.draws) ss += (d - mean) * (d - mean);
        out.se = std::sqrt(ss / static_cast<double>(out.draws.size()));
        return out;
    }();
    node->se = boot.se;
    return node;
}

// Candidate thresholds for one dim from the node's training values.
std::vector<double> candidate_thetas(const FitContext& ctx, const NodeWork& work,
                                     std::size_t dim) {
    std::vector<double> values;
    values.reserve(work.train_ids.size());
    for (const std::uint32_t i : work.train_ids) {
        values.push_back(ctx.reps->at(i, dim));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() < 2) return {};
    values.pop_back();  // splitting at the maximum leaves the right child empty
    if (ctx.all_observed || values.size() <= static_cast<std::size_t>(ctx.params->quantile_count)) {
        return values;
    }
    std::vector<double> picked;
    const std::size_t q = static_cast<std::size_t>(ctx.params->quantile_count);
    picked.reserve(q);
    for (std::size_t j = 1; j <= q; ++j) {
        const std::size_t idx = j * (values.size() - 1) / (q + 1);
        picked.push_back(values[idx]);
    }
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    return picked;
}

std::unique_ptr<TreeNode> split_node(FitContext& ctx, NodeWork work) {
    const TreeHyperparams& params = *ctx.params;
    const bool depth_ok = params.max_depth <= 0 || work.depth < params.max_depth;
    const bool enough_train =
        work.train_ids.size() >= 2 * static_cast<std::size_t>(params.kappa);

    double best_score = -kInfScore;
    int best_dim = -1;
    double best_theta = 0.0;

    if (depth_ok && enough_train) {
        // Node-level Hajek pieces shared by both scores.
        const double denom = static_cast<double>(ctx.B) + 1.0;
        std::vector<double> node_prob(ctx.n);
        for (std::size_t i = 0; i < ctx.n; ++i) {
            node_prob[i] = static_cast<double>(work.hits[i].size()) / denom;
        }
        double wsse_node = 0.0;
        if (params.score == TreeHyperparams::Score::WSSE) {
            HajekSums sums;
            for (const std::uint32_t i : work.train_ids) sums.add(ctx.Y[i], node_prob[i]);
            const double mu = sums.mean();
            for (const std::uint32_t i : work.train_ids) {
                if (node_prob[i] > 0.0) {
                    wsse_node += (ctx.Y[i] - mu) * (ctx.Y[i] - mu) / node_prob[i];
                }
            }
        }

        const int k_quantile =
            static_cast<int>(params.epsilon * (static_cast<double>(ctx.B) + 1.0)) + 1;

        for (std::size_t dim = 0; dim < ctx.m; ++dim) {
            const auto thetas = candidate_thetas(ctx, work, dim);
            if (thetas.empty()) continue;

            // Per-unit sorted replicate values for this dim within the node.
            std::vector<std::int64_t> off(ctx.n + 1, 0);
            for (std::size_t i = 0; i < ctx.n; ++i) {
                off[i + 1] = off[i] + static_cast<std::int64_t>(work.hits[i].size());
            }
            std::vector<float> vals(static_cast<std::size_t>(off[ctx.n]));
            parallel_for(ctx.n, [&](std::size_t i) {
                float* dst = vals.data() + off[i];
                std::size_t k = 0;
                for (const std::uint32_t b : work.hits[i]) {
                    dst[k++] = ctx.cache->at(i, b, dim);
                }
                std::sort(dst, dst + k);
            });

            // Positivity quantiles: the left child keeps a unit above epsilon
            // iff its k-th smallest value is <= theta; the right child iff its
            // k-th largest value is > theta.
            std::vector<double> lowq(ctx.n), highq(ctx.n);
            for (std::size_t i = 0; i < ctx.n; ++i) {
                const auto cnt = off[i + 1] - off[i];
                if (cnt >= k_quantile) {
                    lowq[i] = vals[static_cast<std::size_t>(off[i] + k_quantile - 1)];
                    highq[i] = vals[static_cast<std::size_t>(off[i + 1] - k_quantile)];
                } else {
                    lowq[i] = kInfScore;
                    highq[i] = -kInfScore;
                }
            }
            std::vector<double> lowq_sorted(lowq), highq_sorted(highq);
            std::sort(lowq_sorted.begin(), lowq_sorted.end());
            std::sort(highq_sorted.begin(), highq_sorted.end());

            std::vector<double> train_vals;
            train_vals.reserve(work.train_ids.size());
            for (const std::uint32_t i : work.train_ids) {
                train_vals.push_back(ctx.reps->at(i, dim));
            }
            std::sort(train_vals.begin(), train_vals.end());

            std::vector<double> scores(thetas.size(), -kInfScore);
            parallel_for(thetas.size(), [&](std::size_t c) {
                const double theta = thetas[c];
                const auto n_left = static_cast<std::size_t>(
                    std::upper_bound(train_vals.begin(), train_vals.end(), theta) -
                    train_vals.begin());
                const std::size_t n_right = train_vals.size() - n_left;
                if (n_left < static_cast<std::size_t>(params.kappa) ||
                    n_right < static_cast<std::size_t>(params.kappa)) {
                    return;
                }
                const double viol_left = static_cast<double>(
                    lowq_sorted.end() -
                    std::upper_bound(lowq_sorted.begin(), lowq_sorted.end(), theta));
                const double viol_right = static_cast<double>(
                    std::upper_bound(highq_sorted.begin(), highq_sorted.end(), theta) -
                    highq_sorted.begin());
                const double nd = static_cast<double>(ctx.n);
                if (viol_left / nd > params.delta || viol_right / nd > params.delta) return;

                HajekSums left, right;
                for (const std::uint32_t i : work.train_ids) {
                    const float* first = vals.data() + off[i];
                    const float* last = vals.data() + off[i + 1];
                    const auto hits_left = static_cast<double>(
                        std::upper_bound(first, last, static_cast<float>(theta)) - first);
                    const auto hits_all = static_cast<double>(last - first);
                    if (ctx.reps->at(i, dim) <= theta) {
                        left.add(ctx.Y[i], hits_left / denom);
                    } else {
                        right.add(ctx.Y[i], (hits_all - hits_left) / denom);
                    }
                }
                if (left.members == 0 || right.members == 0) return;
                const double mu_l = left.mean();
                const double mu_r = right.mean();

                if (params.score == TreeHyperparams::Score::TStat) {
                    double var = 0.0;
                    for (const std::uint32_t i : work.train_ids) {
                        const float* first = vals.data() + off[i];
                        const float* last = vals.data() + off[i + 1];
                        const auto hits_left = static_cast<double>(
                            std::upper_bound(first, last, static_cast<float>(theta)) - first);
                        const auto hits_all = static_cast<double>(last - first);
                        const bool go_left = ctx.reps->at(i, dim) <= theta;
                        const double p = (go_left ? hits_left : hits_all - hits_left) / denom;
                        if (!(p > 0.0)) continue;
                        const double w = 1.0 / p;
                        const double resid = ctx.Y[i] - (go_left ? mu_l : mu_r);
                        var += w * w * resid * resid /
                               ((go_left ? left.weight : right.weight) *
                                (go_left ? left.weight : right.weight));
                    }
                    const double diff = std::abs(mu_l - mu_r);
                    // Means that agree to rounding noise are not a split.
                    const double scale = std::max(std::abs(mu_l), std::abs(mu_r));
                    if (diff <= 1e-12 * scale) {
                        scores[c] = 0.0;
                    } else {
                        scores[c] = var > 0.0 ? diff / std::sqrt(var) : kInfScore;
                    }
                } else {
                    double wsse_l = 0.0, wsse_r = 0.0;
                    for (const std::uint32_t i : work.train_ids) {
                        const float* first = vals.data() + off[i];
                        const float* last = vals.data() + off[i + 1];
                        const auto hits_left = static_cast<double>(
                            std::upper_bound(first, last, static_cast<float>(theta)) - first);
                        const auto hits_all = static_cast<double>(last - first);
                        const bool go_left = ctx.reps->at(i, dim) <= theta;
                        const double p = (go_left ? hits_left : hits_all - hits_left) / denom;
                        if (!(p > 0.0)) continue;
                        const double resid = ctx.Y[i] - (go_left ? mu_l : mu_r);
                        (go_left ? wsse_l : wsse_r) += resid * resid / p;
                    }
                    const double nl = static_cast<double>(left.members);
                    const double nr = static_cast<double>(right.members);
                    scores[c] = wsse_node - (nl * wsse_l + nr * wsse_r) / (nl + nr);
                }
            });

            for (std::size_t c = 0; c < thetas.size(); ++c) {
                if (scores[c] > best_score) {
                    best_score = scores[c];
                    best_dim = static_cast<int>(dim);
                    best_theta = thetas[c];
                }
            }
        }
    }

    if (best_dim < 0 || best_score < params.gamma) {
        return make_leaf(ctx, work);
    }

    auto node = std::make_unique<TreeNode>();
    node->dim = best_dim;
    node->theta = best_theta;
    node->split_score = best_score;
    node->box = work.box;
    node->n_train = work.train_ids.size();
    node->n_est = work.est_ids.size();

    NodeWork left_work, right_work;
    left_work.depth = right_work.depth = work.depth + 1;
    left_work.box = work.box.split_left(static_cast<std::size_t>(best_dim), best_theta, "");
    right_work.box = work.box.split_right(static_cast<std::size_t>(best_dim), best_theta, "");
    for (const std::uint32_t i : work.train_ids) {
        (ctx.reps->at(i, static_cast<std::size_t>(best_dim)) <= best_theta ? left_work.train_ids
                                                                           : right_work.train_ids)
            .push_back(i);
    }
    for (const std::uint32_t i : work.est_ids) {
        (ctx.reps->at(i, static_cast<std::size_t>(best_dim)) <= best_theta ? left_work.est_ids
                                                                           : right_work.est_ids)
            .push_back(i);
    }
    left_work.hits.resize(ctx.n);
    right_work.hits.resize(ctx.n);
    for (std::size_t i = 0; i < ctx.n; ++i) {
        for (const std::uint32_t b : work.hits[i]) {
            (ctx.cache->at(i, b, static_cast<std::size_t>(best_dim)) <=
                     static_cast<float>(best_theta)
                 ? left_work.hits[i]
                 : right_work.hits[i])
                .push_back(b);
        }
    }
    work.hits.clear();
    work.hits.shrink_to_fit();

    node->left = split_node(ctx, std::move(left_work));
    node->right = split_node(ctx, std::move(right_work));
    return node;
}

}  // namespace

ExposureTree fit_tree_with_masks(const RepresentationMatrix& reps, std::span<const double> Y,
                                 const ReplicateCache& cache, const TreeHyperparams& params,
                                 std::vector<std::uint8_t> is_training,
                                 std::vector<std::uint8_t> in_estimation,
                                 std::uint64_t split_seed) {
    params.validate();
    const std::size_t n = reps.n;
    if (Y.size() != n || cache.n() != n || is_training.size() != n ||
        in_estimation.size() != n) {
        throw ArgumentError("fit_tree: inputs must share the population size");
    }
    if (cache.dim_count() != reps.m) {
        throw ArgumentError("fit_tree: cache and representation dims disagree");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (is_training[i] && in_estimation[i]) {
            throw ArgumentError("fit_tree: training and estimation masks overlap");
        }
    }

    FitContext ctx;
    ctx.reps = &reps;
    ctx.Y = Y;
    ctx.cache = &cache;
    ctx.params = &params;
    ctx.seed = split_seed;
    ctx.n = n;
    ctx.m = reps.m;
    ctx.B = cache.replicate_count();
    ctx.all_observed = params.threshold_mode == TreeHyperparams::ThresholdMode::AllObserved ||
                       (params.threshold_mode == TreeHyperparams::ThresholdMode::Auto &&
                        n <= 20000);

    NodeWork root;
    root.box = BoxCondition::whole(reps.m, "root");
    for (std::size_t i = 0; i < n; ++i) {
        if (is_training[i]) root.train_ids.push_back(static_cast<std::uint32_t>(i));
        if (in_estimation[i]) root.est_ids.push_back(static_cast<std::uint32_t>(i));
    }
    root.hits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        root.hits[i].resize(ctx.B);
        std::iota(root.hits[i].begin(), root.hits[i].end(), 0u);
    }

    auto tree_root = split_node(ctx, std::move(root));
    return ExposureTree(std::move(tree_root), std::move(is_training), std::move(in_estimation),
                        reps.schema);
}

ExposureTree fit_tree(const RepresentationMatrix& reps, std::span<const double> Y,
                      const ReplicateCache& cache, const TreeHyperparams& params,
                      std::uint64_t split_seed) {
    params.validate();
    const std::size_t n = reps.n;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    rng::Stream stream(rng::label_seed(split_seed, "honest-split"));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::llround(params.honest_fraction * static_cast<double>(n)));
    std::vector<std::uint8_t> is_training(n, 0), in_estimation(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        (k < n_train ? is_training : in_estimation)[order[k]] = 1;
    }
    return fit_tree_with_masks(reps, Y, cache, params, std::move(is_training),
                               std::move(in_estimation), split_seed);
}

TreeGateEstimate tree_gate_effect(const ExposureTree& tree, const ReferenceRepresentations& refs,
                                  const RepresentationMatrix& reps, std::span<const double> Y,
                                  const ReplicateCache& cache, const TreeHyperparams& params,
                                  std::uint64_t bootstrap_seed) {
    const TreeNode& leaf1 = tree.assign_leaf(refs.r1);
    const TreeNode& leaf0 = tree.assign_leaf(refs.r0);

    TreeGateEstimate gate;
    gate.leaf1_label = leaf1.label;
    gate.leaf0_label = leaf0.label;
    if (&leaf1 == &leaf0) {
        gate.degenerate = true;
        gate.tau.label = "gate degenerate (" + leaf1.label + ")";
        gate.tau.kind = params.leaf_estimator;
        gate.tau.point = 0.0;
        gate.leg1 = gate.leg0 = gate.tau;
        return gate;
    }

    const auto est_mask = tree.in_estimation();
    const std::size_t n = reps.n;
    const auto probs1 = cache.membership_probability(ExposureCondition{leaf1.box});
    const auto probs0 = cache.membership_probability(ExposureCondition{leaf0.box});
    std::vector<std::uint8_t> m1(n, 0), m0(n, 0);
    std::vector<NodeId> est_pop;
    for (std::size_t i = 0; i < n; ++i) {
        if (!est_mask[i]) continue;
        est_pop.push_back(static_cast<NodeId>(i));
        if (leaf1.box.contains(reps.row(i))) m1[i] = 1;
        if (leaf0.box.contains(reps.row(i))) m0[i] = 1;
    }

    GateBootstrap boot = joint_gate_estimate(Y, m1, probs1, m0, probs0, params.leaf_estimator,
                                             params.bootstrap_b, bootstrap_seed,
                                             ResampleMode::unit(), est_pop, leaf1.label,
                                             leaf0.label);
    gate.leg1 = std::move(boot.leg1);
    gate.leg0 = std::move(boot.leg0);
    gate.tau = std::move(boot.diff);
    gate.leg1.positivity = leaf1.positivity;
    gate.leg0.positivity = leaf0.positivity;
    return gate;
}

}  // namespace cnm
