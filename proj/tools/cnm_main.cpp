// Command-line front end: analyze (tree / knn / fracq on observed data),
// simulate (synthetic replication harness), report (markdown summaries).
// Exit codes: 0 success, 2 validation error, 3 positivity failure, 4 internal.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnm/errors.hpp"
#include "cnm/estimators.hpp"
#include "cnm/harness.hpp"
#include "cnm/io.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Timings {
public:
    void record(const std::string& stage, double seconds) { stages_.emplace_back(stage, seconds); }

    template <typename Fn>
    auto time(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(stage, elapsed(start));
        } else {
            auto result = fn();
            record(stage, elapsed(start));
            return result;
        }
    }

    ordered_json to_json() const {
        ordered_json j;
        for (const auto& [k, v] : stages_) j[k] = v;
        return j;
    }

private:
    static double elapsed(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    std::vector<std::pair<std::string, double>> stages_;
};

ordered_json report_json(const cnm::EstimateReport& r) {
    ordered_json j;
    j["label"] = r.label;
    j["kind"] = cnm::estimator_kind_name(r.kind);
    j["point"] = r.point;
    j["se"] = r.se;
    j["member_count"] = r.member_count;
    j["positivity"] = {{"ok", r.positivity.ok},
                       {"violating_fraction", r.positivity.violating_fraction}};
    j["B"] = r.bootstrap_b;
    j["seed"] = r.seed;
    if (r.independent_se_approx) j["independent_se_approx"] = true;
    return j;
}

ordered_json sweep_row_json(const cnm::KSweepRow& row) {
    ordered_json j;
    j["K"] = row.K;
    j["K_over_N"] = row.k_over_n;
    j["mu1"] = row.mu1;
    j["se1"] = row.se1;
    j["pos1"] = row.pos1.ok;
    j["mu0"] = row.mu0;
    j["se0"] = row.se0;
    j["pos0"] = row.pos0.ok;
    j["tau"] = row.tau;
    j["se_tau"] = row.se_tau;
    return j;
}

struct OutputDir {
    fs::path dir;
    std::vector<std::string> artifacts;

    explicit OutputDir(const std::string& path) : dir(path) { fs::create_directories(dir); }

    std::string file(const std::string& name) {
        artifacts.push_back(name);
        return (dir / name).string();
    }
};

void write_manifest(OutputDir& out, const std::string& command, const ordered_json& config,
                    const ordered_json& seeds, const ordered_json& digests,
                    const Timings& timings) {
    ordered_json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = config;
    manifest["seeds"] = seeds;
    manifest["input_digests"] = digests;
    manifest["timings_seconds"] = timings.to_json();
    manifest["artifacts"] = out.artifacts;
    cnm::io::write_text_file((out.dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string graph_path, attrs_path, assignment_path, outcomes_path, partition_path;
    std::string design = "bernoulli";
    double p = 0.5;
    int levels = 9;
    std::string schema_csv;
    std::size_t replicates = 500;
    std::size_t bootstrap = 500;
    double epsilon = 0.0;
    double delta = 0.01;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = "out";
    std::string mode = "knn";
    std::string estimator = "hajek";
    // tree
    std::string score = "t";
    double gamma = 1.96;
    int kappa = 100;
    double honest_fraction = 0.5;
    int max_depth = 0;
    // knn
    std::string metric = "regcoef";
    std::string k_grid = "1,2,5,10,20,50";
    std::string assume = "nonnegative";
    double se_cap = 0.0;
    // fracq
    double q = 0.5;
};

std::vector<double> parse_percent_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string tok =
            csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(std::stod(tok) / 100.0);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw cnm::ArgumentError("empty K grid");
    return out;
}

std::vector<std::string> parse_code_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string tok =
            csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int run_analyze(const AnalyzeOptions& opt) {
    if (opt.threads > 0) cnm::set_max_threads(opt.threads);
    Timings timings;
    OutputDir out(opt.out_dir);

    cnm::LoadStats load_stats;
    const cnm::Graph g = timings.time("load_graph", [&] {
        return cnm::load_edge_list_file(opt.graph_path, opt.attrs_path, &load_stats);
    });
    const cnm::AssignmentVector z = cnm::io::read_assignment_csv(opt.assignment_path, g);
    const std::vector<double> y = cnm::io::read_outcomes_csv(opt.outcomes_path, g);
    const std::size_t n = static_cast<std::size_t>(g.node_count());

    cnm::RandomizationDesign design = [&] {
        if (opt.design == "bernoulli") return cnm::RandomizationDesign::bernoulli(n, opt.p);
        if (opt.design != "cluster") throw cnm::ArgumentError("--design must be bernoulli or cluster");
        cnm::ClusterPartition part =
            opt.partition_path.empty()
                ? cnm::recursive_kl_partition(g, opt.levels,
                                              cnm::rng::label_seed(opt.seed, "partition"))
                : cnm::io::read_partition_csv(opt.partition_path, g);
        return cnm::RandomizationDesign::graph_cluster(std::move(part), opt.p);
    }();

    const cnm::MotifSchema schema =
        opt.schema_csv.empty() ? cnm::MotifSchema::standard(g.has_attribute("X"))
                               : cnm::MotifSchema::from_codes(parse_code_list(opt.schema_csv));
    schema.validate_for(g);

    const cnm::EstimatorKind kind = opt.estimator == "ht" ? cnm::EstimatorKind::HorvitzThompson
                                                          : cnm::EstimatorKind::Hajek;

    cnm::RepresentationBuilder builder(g, schema, {});
    const std::uint64_t obs_u_seed = cnm::rng::label_seed(opt.seed, "observed-U");
    const cnm::RepresentationMatrix reps =
        timings.time("representations", [&] { return builder.build(z, obs_u_seed); });
    const std::uint64_t cache_seed = cnm::rng::label_seed(opt.seed, "replicates");
    const cnm::ReplicateCache cache = timings.time("replicate_cache", [&] {
        return cnm::ReplicateCache(builder, design, opt.replicates, cache_seed);
    });

    cnm::io::write_representations_csv(out.file("representations.csv"), g, reps);
    {
        ordered_json side;
        side["schema"] = schema.codes();
        side["seed"] = obs_u_seed;
        side["sampling"] = {{"max_exact_degree", builder.sampling().max_exact_degree},
                            {"sample_size", builder.sampling().sample_size},
                            {"seed", builder.sampling().seed}};
        side["dropped_self_loops"] = load_stats.dropped_self_loops;
        side["dropped_duplicates"] = load_stats.dropped_duplicates;
        cnm::io::write_text_file(out.file("representations.json"), side.dump(2) + "\n");
    }

    ordered_json estimates;
    estimates["mode"] = opt.mode;
    estimates["design"] = design.tag();
    int exit_code = 0;

    if (opt.mode == "tree") {
        cnm::TreeHyperparams params;
        params.score = opt.score == "wsse" ? cnm::TreeHyperparams::Score::WSSE
                                           : cnm::TreeHyperparams::Score::TStat;
        params.gamma = opt.gamma;
        params.kappa = opt.kappa;
        params.epsilon = opt.epsilon;
        params.delta = opt.delta;
        params.honest_fraction = opt.honest_fraction;
        params.max_depth = opt.max_depth;
        params.leaf_estimator = kind;
        params.bootstrap_b = opt.bootstrap;

        const cnm::ExposureTree tree = timings.time("fit_tree", [&] {
            return cnm::fit_tree(reps, y, cache, params, cnm::rng::label_seed(opt.seed, "tree-split"));
        });
        cnm::io::write_text_file(out.file("tree.json"), tree.to_json() + "\n");
        cnm::io::write_text_file(out.file("tree.dot"), tree.to_dot());

        std::vector<cnm::ExposureCondition> leaf_conditions;
        ordered_json leaf_list = ordered_json::array();
        for (const cnm::TreeNode* leaf : tree.leaves()) {
            leaf_conditions.emplace_back(leaf->box);
            ordered_json lj;
            lj["label"] = leaf->label;
            lj["mu"] = leaf->mu;
            lj["se"] = leaf->se;
            lj["n_train"] = leaf->n_train;
            lj["n_est"] = leaf->n_est;
            lj["positivity"] = {{"ok", leaf->positivity.ok},
                                {"violating_fraction", leaf->positivity.violating_fraction}};
            leaf_list.push_back(lj);
        }
        estimates["leaves"] = leaf_list;
        const auto prob_table = cnm::estimate_membership_prob(cache, leaf_conditions);
        cnm::io::write_probability_csv(out.file("probs.csv"), g, prob_table);

        try {
            const auto refs = cnm::reference_representations(schema);
            const auto gate = cnm::tree_gate_effect(tree, refs, reps, y, cache, params,
                                                    cnm::rng::label_seed(opt.seed, "tree-boot"));
            estimates["gate"] = {{"tau", report_json(gate.tau)},
                                 {"leg1", report_json(gate.leg1)},
                                 {"leg0", report_json(gate.leg0)},
                                 {"leaf1", gate.leaf1_label},
                                 {"leaf0", gate.leaf0_label},
                                 {"degenerate", gate.degenerate}};
        } catch (const cnm::SchemaError& e) {
            estimates["gate"] = {{"unavailable", e.what()}};
        }
    } else if (opt.mode == "knn") {
        const auto refs = cnm::reference_representations(schema);
        const cnm::DistanceMetric metric =
            cnm::fit_metric(reps, y, opt.metric == "identical"
                                         ? cnm::DistanceMetric::Kind::Identical
                                         : cnm::DistanceMetric::Kind::RegressionCoefficients);
        cnm::SweepConfig sweep;
        for (const double f : parse_percent_list(opt.k_grid)) {
            const auto k = static_cast<std::size_t>(f * static_cast<double>(n));
            sweep.k_grid.push_back(std::clamp<std::size_t>(k, 1, n));
        }
        sweep.epsilon = opt.epsilon;
        sweep.delta = opt.delta;
        sweep.bootstrap_b = opt.bootstrap;
        sweep.seed = cnm::rng::label_seed(opt.seed, "sweep");
        sweep.estimator = kind;
        if (design.kind == cnm::DesignKind::GraphCluster) {
            sweep.resample = cnm::ResampleMode::cluster(design.partition);
        }

        const auto rows = timings.time("sweep", [&] {
            return cnm::sweep_K(cache, reps, y, metric, refs, sweep);
        });
        cnm::io::write_sweep_csv(out.file("sweep.csv"), rows);

        ordered_json row_list = ordered_json::array();
        for (const auto& row : rows) row_list.push_back(sweep_row_json(row));
        estimates["sweep"] = row_list;
        estimates["metric"] = {{"kind", cnm::metric_kind_name(metric.kind)},
                               {"weights", metric.weights},
                               {"r_squared", metric.diagnostics.r_squared}};

        // Per-K membership probabilities around both references.
        std::vector<cnm::ExposureCondition> prob_conditions;
        for (const auto& row : rows) {
            cnm::KnnConditionSpec c1{"knn-r1@K=" + std::to_string(row.K), refs.r1, metric.weights,
                                     row.K};
            cnm::KnnConditionSpec c0{"knn-r0@K=" + std::to_string(row.K), refs.r0, metric.weights,
                                     row.K};
            prob_conditions.emplace_back(std::move(c1));
            prob_conditions.emplace_back(std::move(c0));
        }
        const auto prob_table = cnm::estimate_membership_prob(cache, prob_conditions);
        cnm::io::write_probability_csv(out.file("probs.csv"), g, prob_table);

        try {
            const cnm::KSweepRow& chosen = cnm::select_estimate(
                rows,
                opt.assume == "nonpositive" ? cnm::InterferenceAssumption::NonPositive
                                            : cnm::InterferenceAssumption::NonNegative,
                opt.se_cap > 0.0 ? std::optional<double>(opt.se_cap) : std::nullopt);
            estimates["selected"] = sweep_row_json(chosen);
        } catch (const cnm::SelectionError& e) {
            estimates["selected"] = {{"unavailable", e.what()}};
            exit_code = 3;
        }
    } else if (opt.mode == "fracq") {
        const int frac_dim = schema.index_of("2-1");
        if (frac_dim < 0) throw cnm::SchemaError("fracq mode needs the 2-1 dim in the schema");
        const auto dim = static_cast<std::size_t>(frac_dim);

        std::vector<cnm::ExposureCondition> conditions;
        for (const int ego : {1, 0}) {
            for (const bool above : {true, false}) {
                cnm::PredicateCondition c;
                c.label = "z" + std::to_string(ego) + (above ? "_frac_gt_q" : "_frac_le_q");
                c.ego_z = ego;
                c.frac_dim = dim;
                c.q = opt.q;
                c.above = above;
                conditions.emplace_back(std::move(c));
            }
        }
        const auto prob_table = cnm::estimate_membership_prob(cache, conditions);
        cnm::io::write_probability_csv(out.file("probs.csv"), g, prob_table);

        bool positivity_failed = false;
        ordered_json cell_list = ordered_json::array();
        std::vector<cnm::EstimateReport> cell_reports;
        for (std::size_t k = 0; k < conditions.size(); ++k) {
            const auto probs = prob_table.column_values(k);
            const auto member = cnm::observed_membership(conditions[k], reps);
            std::vector<std::uint8_t> usable(member);
            for (std::size_t i = 0; i < n; ++i) {
                if (usable[i] && !(probs[i] > 0.0)) usable[i] = 0;
            }
            cnm::EstimateReport rep = cnm::weighted_mean(y, usable, probs, kind);
            rep.label = cnm::condition_label(conditions[k]);
            rep.positivity = cnm::check_positivity(probs, opt.epsilon, opt.delta);
            const auto boot = cnm::bootstrap_se(
                [&](std::span<const cnm::NodeId> idx) -> std::optional<double> {
                    double weighted = 0.0, weight = 0.0;
                    for (const cnm::NodeId u : idx) {
                        const auto i = static_cast<std::size_t>(u);
                        if (!usable[i]) continue;
                        const double w = 1.0 / probs[i];
                        weighted += y[i] * w;
                        weight += w;
                    }
                    if (kind == cnm::EstimatorKind::HorvitzThompson) {
                        return weighted / static_cast<double>(idx.size());
                    }
                    if (!(weight > 0.0)) return std::nullopt;
                    return weighted / weight;
                },
                n, opt.bootstrap, cnm::rng::derive(cnm::rng::label_seed(opt.seed, "fracq"), k),
                design.kind == cnm::DesignKind::GraphCluster
                    ? cnm::ResampleMode::cluster(design.partition)
                    : cnm::ResampleMode::unit());
            rep.se = boot.se;
            rep.bootstrap_b = opt.bootstrap;
            if (!rep.positivity.ok) positivity_failed = true;
            cell_list.push_back(report_json(rep));
            cell_reports.push_back(std::move(rep));
        }
        estimates["q"] = opt.q;
        estimates["cells"] = cell_list;
        // Gate contrast: fully-treated-side cell minus fully-control-side cell.
        estimates["gate"] = report_json(cnm::gate_difference(cell_reports[0], cell_reports[3]));
        if (positivity_failed) exit_code = 3;
    } else {
        throw cnm::ArgumentError("--mode must be tree, knn, or fracq");
    }

    cnm::io::write_text_file(out.file("estimates.json"), estimates.dump(2) + "\n");

    ordered_json config;
    config["graph"] = opt.graph_path;
    config["attrs"] = opt.attrs_path;
    config["assignment"] = opt.assignment_path;
    config["outcomes"] = opt.outcomes_path;
    config["design"] = opt.design;
    config["p"] = opt.p;
    config["levels"] = opt.levels;
    config["schema"] = schema.codes();
    config["replicates"] = opt.replicates;
    config["bootstrap"] = opt.bootstrap;
    config["epsilon"] = opt.epsilon;
    config["delta"] = opt.delta;
    config["mode"] = opt.mode;
    config["estimator"] = opt.estimator;
    config["gamma"] = opt.gamma;
    config["kappa"] = opt.kappa;
    config["metric"] = opt.metric;
    config["k_grid"] = opt.k_grid;
    config["assume"] = opt.assume;
    config["q"] = opt.q;
    config["threads"] = opt.threads;

    ordered_json seeds;
    seeds["master"] = opt.seed;
    seeds["observed_U"] = obs_u_seed;
    seeds["replicates"] = cache_seed;

    ordered_json digests;
    digests["graph"] = cnm::io::hex64(cnm::io::fnv1a64_file(opt.graph_path));
    if (!opt.attrs_path.empty()) {
        digests["attrs"] = cnm::io::hex64(cnm::io::fnv1a64_file(opt.attrs_path));
    }
    digests["assignment"] = cnm::io::hex64(cnm::io::fnv1a64_file(opt.assignment_path));
    digests["outcomes"] = cnm::io::hex64(cnm::io::fnv1a64_file(opt.outcomes_path));

    write_manifest(out, "analyze", config, seeds, digests, timings);
    if (exit_code == 3) {
        std::cerr << "positivity failure; see " << (out.dir / "estimates.json") << "\n";
    }
    return exit_code;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string preset = "ws-bernoulli";
    std::string network_path, attrs_path;
    std::size_t seeds = 1;
    std::uint64_t seed = 1;
    std::size_t ws_n = 4096;
    int ws_k = 10;
    double ws_beta = 0.5;
    double p = 0.5;
    int levels = 9;
    std::size_t replicates = 500;
    std::size_t bootstrap = 500;
    double epsilon = 0.0;
    double delta = 0.01;
    std::string k_grid = "1,2,5,10,20,50";
    std::string metric = "regcoef";
    std::string assume = "nonnegative";
    bool with_tree = false;
    bool with_ht = false;
    double gamma = 1.96;
    int kappa = 100;
    double noise_sigma = 0.25;
    int threads = 0;
    std::string out_dir = "out";
};

int run_simulate(const SimulateOptions& opt) {
    if (opt.threads > 0) cnm::set_max_threads(opt.threads);
    Timings timings;
    OutputDir out(opt.out_dir);

    cnm::HarnessConfig config;
    config.ws = {opt.ws_n, opt.ws_k, opt.ws_beta};
    config.p = opt.p;
    config.cluster_levels = opt.levels;
    config.replicates = opt.replicates;
    config.bootstrap = opt.bootstrap;
    config.epsilon = opt.epsilon;
    config.delta = opt.delta;
    config.k_fractions = parse_percent_list(opt.k_grid);
    config.metric = opt.metric == "identical" ? cnm::DistanceMetric::Kind::Identical
                                              : cnm::DistanceMetric::Kind::RegressionCoefficients;
    config.assumption = opt.assume == "nonpositive" ? cnm::InterferenceAssumption::NonPositive
                                                    : cnm::InterferenceAssumption::NonNegative;
    config.compare_ht = opt.with_ht;
    config.run_tree = opt.with_tree;
    config.tree.gamma = opt.gamma;
    config.tree.kappa = opt.kappa;
    config.tree.bootstrap_b = opt.bootstrap;
    config.noise_sigma = opt.noise_sigma;

    if (opt.preset == "ws-bernoulli") {
        config.design = cnm::DesignKind::Bernoulli;
    } else if (opt.preset == "ws-cluster") {
        config.design = cnm::DesignKind::GraphCluster;
    } else if (opt.preset == "external") {
        if (opt.network_path.empty()) {
            throw cnm::ArgumentError("--network is required with --preset external");
        }
        config.edge_list_path = opt.network_path;
        config.attr_path = opt.attrs_path;
        config.design = cnm::DesignKind::Bernoulli;
    } else {
        throw cnm::ArgumentError("--preset must be ws-bernoulli, ws-cluster, or external");
    }

    std::ostringstream summary;
    summary << "seed,n,mu1_oracle,mu0_oracle,tau_oracle,naive,naive_bias,knn_tau,knn_K,knn_bias,"
               "fracq_tau_matched,fracq_bias,tree_tau,tree_bias\n";
    ordered_json bundle = ordered_json::array();

    for (std::size_t s = 0; s < opt.seeds; ++s) {
        config.seed = cnm::rng::derive(cnm::rng::label_seed(opt.seed, "simulate"), s);
        const cnm::ReplicationResult result = timings.time(
            "replication_" + std::to_string(s), [&] { return cnm::run_replication(config); });

        ordered_json j;
        j["seed_index"] = s;
        j["seed"] = result.seed;
        j["n"] = result.n;
        j["design"] = result.design_tag;
        j["ground_truth"] = {{"mu1", result.truth.mu1},
                             {"mu0", result.truth.mu0},
                             {"tau", result.truth.tau}};
        j["naive_diff"] = result.naive_diff;
        ordered_json rows = ordered_json::array();
        for (const auto& row : result.knn_rows) rows.push_back(sweep_row_json(row));
        j["knn_sweep"] = rows;
        if (!result.fracq_rows.empty()) {
            ordered_json qrows = ordered_json::array();
            for (const auto& row : result.fracq_rows) qrows.push_back(sweep_row_json(row));
            j["fracq_sweep"] = qrows;
        }
        if (!result.knn_rows_ht.empty()) {
            ordered_json hrows = ordered_json::array();
            for (const auto& row : result.knn_rows_ht) hrows.push_back(sweep_row_json(row));
            j["knn_sweep_ht"] = hrows;
        }
        if (result.selected) j["selected"] = sweep_row_json(*result.selected);
        if (result.smallest_passing) {
            j["smallest_passing"] = sweep_row_json(*result.smallest_passing);
        }
        if (result.tree_gate) {
            j["tree_gate"] = {{"tau", report_json(result.tree_gate->tau)},
                              {"degenerate", result.tree_gate->degenerate}};
        }

        const double tau = result.truth.tau;
        summary << s << ',' << result.n << ',' << cnm::io::format_double(result.truth.mu1) << ','
                << cnm::io::format_double(result.truth.mu0) << ','
                << cnm::io::format_double(tau) << ','
                << cnm::io::format_double(result.naive_diff) << ','
                << cnm::io::format_double(result.naive_diff - tau) << ',';
        if (result.smallest_passing) {
            const auto& row = *result.smallest_passing;
            summary << cnm::io::format_double(row.tau) << ',' << row.K << ','
                    << cnm::io::format_double(row.tau - tau) << ',';
            const auto matched = std::find_if(
                result.fracq_rows.begin(), result.fracq_rows.end(),
                [&](const cnm::KSweepRow& r) { return r.K == row.K; });
            if (matched != result.fracq_rows.end()) {
                summary << cnm::io::format_double(matched->tau) << ','
                        << cnm::io::format_double(matched->tau - tau) << ',';
            } else {
                summary << ",,";
            }
        } else {
            summary << ",,,,,";
        }
        if (result.tree_gate && !result.tree_gate->degenerate) {
            summary << cnm::io::format_double(result.tree_gate->tau.point) << ','
                    << cnm::io::format_double(result.tree_gate->tau.point - tau);
        } else {
            summary << ',';
        }
        summary << '\n';

        if (result.tree) {
            cnm::io::write_text_file(out.file("tree_seed" + std::to_string(s) + ".json"),
                                     result.tree->to_json() + "\n");
        }
        bundle.push_back(std::move(j));
    }

    cnm::io::write_text_file(out.file("summary.csv"), summary.str());
    cnm::io::write_text_file(out.file("bundle.json"), bundle.dump(2) + "\n");

    ordered_json config_json;
    config_json["preset"] = opt.preset;
    config_json["network"] = opt.network_path;
    config_json["seeds"] = opt.seeds;
    config_json["ws_n"] = opt.ws_n;
    config_json["ws_k"] = opt.ws_k;
    config_json["ws_beta"] = opt.ws_beta;
    config_json["p"] = opt.p;
    config_json["levels"] = opt.levels;
    config_json["replicates"] = opt.replicates;
    config_json["bootstrap"] = opt.bootstrap;
    config_json["epsilon"] = opt.epsilon;
    config_json["delta"] = opt.delta;
    config_json["k_grid"] = opt.k_grid;
    config_json["metric"] = opt.metric;
    config_json["assume"] = opt.assume;
    config_json["tree"] = opt.with_tree;
    config_json["ht"] = opt.with_ht;
    config_json["noise_sigma"] = opt.noise_sigma;
    config_json["threads"] = opt.threads;

    ordered_json seeds_json;
    seeds_json["master"] = opt.seed;

    ordered_json digests;
    if (!opt.network_path.empty()) {
        digests["network"] = cnm::io::hex64(cnm::io::fnv1a64_file(opt.network_path));
    }

    write_manifest(out, "simulate", config_json, seeds_json, digests, timings);
    return 0;
}

// ---------------------------------------------------------------------------
// report

std::string markdown_table_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::string out;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string row = "|";
        std::size_t cells = 1;
        for (const char c : line) {
            if (c == ',') {
                row += " |";
                ++cells;
            } else {
                row += c;
            }
        }
        row += " |\n";
        out += row;
        if (first) {
            out += "|";
            for (std::size_t c = 0; c < cells; ++c) out += " --- |";
            out += "\n";
            first = false;
        }
    }
    return out;
}

void render_tree_ascii(const ordered_json& node, int depth, std::string& out) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    if (node.contains("leaf_label")) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s- %s: mu=%.4g +/- %.4g (n_est=%llu)\n", indent.c_str(),
                      node["leaf_label"].get<std::string>().c_str(), node["mu"].get<double>(),
                      node["se"].get<double>(),
                      static_cast<unsigned long long>(node["n_est"].get<std::size_t>()));
        out += buf;
        return;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s- %s <= %.4g ?\n", indent.c_str(),
                  node["dim_code"].get<std::string>().c_str(), node["theta"].get<double>());
    out += buf;
    render_tree_ascii(node["left"], depth + 1, out);
    render_tree_ascii(node["right"], depth + 1, out);
}

int run_report(const std::string& in_dir, std::string out_path) {
    const fs::path dir(in_dir);
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw cnm::ValidationError("missing artifact: " + manifest_path.string());
    }
    const ordered_json manifest =
        ordered_json::parse(cnm::io::read_text_file(manifest_path.string()));
    const std::string command = manifest.value("command", "");

    std::string md = "# Analysis report\n\n";
    md += "- command: " + command + "\n";
    md += "- version: " + manifest.value("version", "") + "\n\n";

    if (command == "analyze") {
        const fs::path est_path = dir / "estimates.json";
        if (!fs::exists(est_path)) {
            throw cnm::ValidationError("missing artifact: " + est_path.string());
        }
        const ordered_json est = ordered_json::parse(cnm::io::read_text_file(est_path.string()));
        const std::string mode = est.value("mode", "");
        md += "## Estimates (" + mode + ", " + est.value("design", "") + ")\n\n";

        if (mode == "tree") {
            std::vector<ordered_json> leaves(est["leaves"].begin(), est["leaves"].end());
            std::sort(leaves.begin(), leaves.end(), [](const auto& a, const auto& b) {
                return a["mu"].template get<double>() > b["mu"].template get<double>();
            });
            md += "| leaf | mu | se | n_est | positivity |\n| --- | --- | --- | --- | --- |\n";
            for (const auto& leaf : leaves) {
                md += "| " + leaf["label"].get<std::string>() + " | " +
                      cnm::io::format_double(leaf["mu"].get<double>()) + " | " +
                      cnm::io::format_double(leaf["se"].get<double>()) + " | " +
                      std::to_string(leaf["n_est"].get<std::size_t>()) + " | " +
                      (leaf["positivity"]["ok"].get<bool>() ? "ok" : "FAIL") + " |\n";
            }
            md += "\n### Tree\n\n```\n";
            const ordered_json tree =
                ordered_json::parse(cnm::io::read_text_file((dir / "tree.json").string()));
            render_tree_ascii(tree["tree"], 0, md);
            md += "```\n";
            if (est.contains("gate") && est["gate"].contains("tau")) {
                const auto& tau = est["gate"]["tau"];
                md += "\nGate estimate: " + cnm::io::format_double(tau["point"].get<double>()) +
                      " +/- " + cnm::io::format_double(tau["se"].get<double>()) + "\n";
            }
        } else if (mode == "knn") {
            md += "### K sweep\n\n";
            md += markdown_table_from_csv(cnm::io::read_text_file((dir / "sweep.csv").string()));
            if (est.contains("selected") && est["selected"].contains("tau")) {
                const auto& sel = est["selected"];
                md += "\nSelected: K=" + std::to_string(sel["K"].get<std::size_t>()) +
                      ", tau=" + cnm::io::format_double(sel["tau"].get<double>()) + " +/- " +
                      cnm::io::format_double(sel["se_tau"].get<double>()) + "\n";
            } else {
                md += "\nNo K passed the positivity requirement.\n";
            }
        } else if (mode == "fracq") {
            md += "| cell | point | se | positivity |\n| --- | --- | --- | --- |\n";
            for (const auto& cell : est["cells"]) {
                md += "| " + cell["label"].get<std::string>() + " | " +
                      cnm::io::format_double(cell["point"].get<double>()) + " | " +
                      cnm::io::format_double(cell["se"].get<double>()) + " | " +
                      (cell["positivity"]["ok"].get<bool>() ? "ok" : "FAIL") + " |\n";
            }
            const auto& gate = est["gate"];
            md += "\nGate estimate: " + cnm::io::format_double(gate["point"].get<double>()) +
                  " +/- " + cnm::io::format_double(gate["se"].get<double>()) + "\n";
        }
    } else if (command == "simulate") {
        const fs::path summary_path = dir / "summary.csv";
        if (!fs::exists(summary_path)) {
            throw cnm::ValidationError("missing artifact: " + summary_path.string());
        }
        md += "## Per-seed summary (bias = estimate - oracle tau)\n\n";
        md += markdown_table_from_csv(cnm::io::read_text_file(summary_path.string()));
    } else {
        throw cnm::ValidationError("manifest has unknown command: " + command);
    }

    if (out_path.empty()) out_path = (dir / "report.md").string();
    cnm::io::write_text_file(out_path, md);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal network motif analysis for A/B tests under interference"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    AnalyzeOptions an;
    CLI::App* analyze = app.add_subcommand("analyze", "Analyze an observed experiment");
    analyze->add_option("--graph", an.graph_path, "Edge list file")->required();
    analyze->add_option("--attrs", an.attrs_path, "Node attribute CSV");
    analyze->add_option("--assignment", an.assignment_path, "Assignment CSV")->required();
    analyze->add_option("--outcomes", an.outcomes_path, "Outcome CSV")->required();
    analyze->add_option("--design", an.design, "bernoulli | cluster");
    analyze->add_option("--p", an.p, "Treatment probability");
    analyze->add_option("--levels", an.levels, "Cluster bisection levels");
    analyze->add_option("--partition", an.partition_path, "Cluster partition CSV");
    analyze->add_option("--schema", an.schema_csv, "Comma list of dim codes");
    analyze->add_option("--replicates", an.replicates, "Exposure-probability replicates");
    analyze->add_option("--bootstrap", an.bootstrap, "Bootstrap resamples");
    analyze->add_option("--epsilon", an.epsilon, "Positivity epsilon");
    analyze->add_option("--delta", an.delta, "Positivity delta");
    analyze->add_option("--seed", an.seed, "Master seed");
    analyze->add_option("--threads", an.threads, "Worker cap (0 = hardware)");
    analyze->add_option("--out-dir", an.out_dir, "Output directory");
    analyze->add_option("--mode", an.mode, "tree | knn | fracq");
    analyze->add_option("--estimator", an.estimator, "hajek | ht");
    analyze->add_option("--score", an.score, "tree: t | wsse");
    analyze->add_option("--gamma", an.gamma, "tree: minimum score");
    analyze->add_option("--kappa", an.kappa, "tree: minimum leaf training units");
    analyze->add_option("--honest-fraction", an.honest_fraction, "tree: training share");
    analyze->add_option("--max-depth", an.max_depth, "tree: depth cap (0 = none)");
    analyze->add_option("--metric", an.metric, "knn: identical | regcoef");
    analyze->add_option("--k-grid", an.k_grid, "knn: percent grid, e.g. 1,2,5,10,20,50");
    analyze->add_option("--assume", an.assume, "knn: nonnegative | nonpositive");
    analyze->add_option("--se-cap", an.se_cap, "knn: optional se cap for selection");
    analyze->add_option("--q", an.q, "fracq: threshold");

    SimulateOptions sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Run the synthetic replication harness");
    simulate->add_option("--preset", sim.preset, "ws-bernoulli | ws-cluster | external");
    simulate->add_option("--network", sim.network_path, "External edge list");
    simulate->add_option("--attrs", sim.attrs_path, "External attribute CSV");
    simulate->add_option("--seeds", sim.seeds, "Number of replication seeds");
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--ws-n", sim.ws_n, "Watts-Strogatz nodes");
    simulate->add_option("--ws-k", sim.ws_k, "Watts-Strogatz ring degree");
    simulate->add_option("--ws-beta", sim.ws_beta, "Watts-Strogatz rewiring rate");
    simulate->add_option("--p", sim.p, "Treatment probability");
    simulate->add_option("--levels", sim.levels, "Cluster bisection levels");
    simulate->add_option("--replicates", sim.replicates, "Exposure-probability replicates");
    simulate->add_option("--bootstrap", sim.bootstrap, "Bootstrap resamples");
    simulate->add_option("--epsilon", sim.epsilon, "Positivity epsilon");
    simulate->add_option("--delta", sim.delta, "Positivity delta");
    simulate->add_option("--k-grid", sim.k_grid, "Percent grid");
    simulate->add_option("--metric", sim.metric, "identical | regcoef");
    simulate->add_option("--assume", sim.assume, "nonnegative | nonpositive");
    simulate->add_flag("--tree", sim.with_tree, "Also fit the exposure tree");
    simulate->add_flag("--ht", sim.with_ht, "Also sweep with the HT estimator");
    simulate->add_option("--gamma", sim.gamma, "tree: minimum score");
    simulate->add_option("--kappa", sim.kappa, "tree: minimum leaf training units");
    simulate->add_option("--noise-sigma", sim.noise_sigma, "Outcome noise sd");
    simulate->add_option("--threads", sim.threads, "Worker cap (0 = hardware)");
    simulate->add_option("--out-dir", sim.out_dir, "Output directory");

    std::string report_in, report_out;
    CLI::App* report = app.add_subcommand("report", "Render a markdown summary");
    report->add_option("--in", report_in, "Directory with manifest + artifacts")->required();
    report->add_option("--out", report_out, "Output markdown path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) return run_analyze(an);
        if (simulate->parsed()) return run_simulate(sim);
        if (report->parsed()) return run_report(report_in, report_out);
    } catch (const cnm::SelectionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cnm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cnm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cnm::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cnm::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
