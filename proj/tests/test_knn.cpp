#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cnm/errors.hpp"
#include "cnm/harness.hpp"
#include "cnm/knn.hpp"
#include "support/oracles.hpp"

using namespace cnm;

namespace {

RepresentationMatrix tiny_reps(std::vector<std::vector<double>> rows) {
    RepresentationMatrix reps;
    reps.n = rows.size();
    reps.m = rows[0].size();
    for (const auto& r : rows) reps.values.insert(reps.values.end(), r.begin(), r.end());
    std::vector<std::string> codes{"Z", "2-1"};
    for (std::size_t m = 2; m < reps.m; ++m) codes.push_back("3o-" + std::to_string(m - 2));
    reps.schema = MotifSchema::from_codes(codes);
    return reps;
}

}  // namespace

TEST_CASE("identical metric is plain L1") {
    DistanceMetric metric;
    metric.kind = DistanceMetric::Kind::Identical;
    metric.weights = {1.0, 1.0};
    const std::vector<double> r{0.2, 0.4}, s{0.5, 0.1};
    CHECK(metric.distance(r, s) == doctest::Approx(0.6));
    CHECK(metric.distance(r, r) == doctest::Approx(0.0));
}

TEST_CASE("regression metric recovers the active dimension") {
    const std::size_t n = 600;
    RepresentationMatrix reps;
    reps.n = n;
    reps.m = 3;
    reps.schema = MotifSchema::from_codes({"Z", "2-1", "3o-2"});
    reps.values.resize(n * 3);
    std::vector<double> y(n);
    rng::Stream stream(4);
    for (std::size_t i = 0; i < n; ++i) {
        reps.values[i * 3 + 0] = stream.next_uniform() < 0.5 ? 1.0 : 0.0;
        reps.values[i * 3 + 1] = stream.next_uniform();
        reps.values[i * 3 + 2] = stream.next_uniform();
        y[i] = 3.0 * reps.values[i * 3 + 1] + 0.01 * stream.next_normal();
    }
    const auto metric = fit_metric(reps, y, DistanceMetric::Kind::RegressionCoefficients);
    CHECK(metric.weights[1] / std::max({metric.weights[0], metric.weights[2], 1e-12}) > 10.0);
    CHECK(metric.diagnostics.r_squared > 0.99);

    SUBCASE("identical kind ignores Y") {
        const auto ident = fit_metric(reps, y, DistanceMetric::Kind::Identical);
        CHECK(ident.weights == std::vector<double>{1.0, 1.0, 1.0});
    }
    SUBCASE("active dims restrict the weights") {
        const std::vector<std::size_t> active{0, 1};
        const auto restricted =
            fit_metric(reps, y, DistanceMetric::Kind::RegressionCoefficients, &active);
        CHECK(restricted.weights[2] == 0.0);
        CHECK(restricted.weights[1] > 0.0);
    }
}

TEST_CASE("regression metric rejects deficient designs") {
    // Constant column 1 is collinear with the intercept.
    auto reps = tiny_reps({{1.0, 0.5},
                           {0.0, 0.5},
                           {1.0, 0.5},
                           {0.0, 0.5},
                           {1.0, 0.5},
                           {0.0, 0.5},
                           {1.0, 0.5},
                           {0.0, 0.5}});
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    CHECK_THROWS_AS(
        static_cast<void>(fit_metric(reps, y, DistanceMetric::Kind::RegressionCoefficients)),
        FitError);

    auto small = tiny_reps({{1.0, 0.5}, {0.0, 0.4}, {1.0, 0.3}});
    const std::vector<double> y2{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(
        static_cast<void>(fit_metric(small, y2, DistanceMetric::Kind::RegressionCoefficients)),
        ArgumentError);
}

TEST_CASE("metric axioms hold on random triples") {
    const std::size_t m = 4;
    DistanceMetric regish;
    regish.kind = DistanceMetric::Kind::RegressionCoefficients;
    regish.weights = {0.3, 2.0, 0.0, 1.4};
    DistanceMetric ident;
    ident.kind = DistanceMetric::Kind::Identical;
    ident.weights.assign(m, 1.0);

    rng::Stream stream(6);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> a(m), b(m), c(m);
        for (std::size_t d = 0; d < m; ++d) {
            a[d] = stream.next_uniform();
            b[d] = stream.next_uniform();
            c[d] = stream.next_uniform();
        }
        for (const auto* metric : {&regish, &ident}) {
            CHECK(metric->distance(a, a) == doctest::Approx(0.0));
            CHECK(metric->distance(a, b) == doctest::Approx(metric->distance(b, a)));
            CHECK(metric->distance(a, c) <=
                  metric->distance(a, b) + metric->distance(b, c) + 1e-12);
        }
    }
}

TEST_CASE("knn condition selection and ties") {
    auto reps = tiny_reps({{1.0, 0.9}, {1.0, 0.8}, {1.0, 0.8}, {0.0, 0.1}});
    DistanceMetric ident;
    ident.weights = {1.0, 1.0};
    const std::vector<double> ref{1.0, 1.0};

    SUBCASE("K = N selects everyone") {
        const auto cond = knn_condition(reps, ident, ref, 4, "all");
        CHECK(cond.units == std::vector<NodeId>{0, 1, 2, 3});
    }
    SUBCASE("K = 1 with a unique minimizer") {
        const auto cond = knn_condition(reps, ident, ref, 1, "one");
        CHECK(cond.units == std::vector<NodeId>{0});
    }
    SUBCASE("ties at the boundary break toward the lower index") {
        // Distances: 0.1, 0.2, 0.2, 1.9 -> K=2 takes units 0 and 1.
        const auto cond = knn_condition(reps, ident, ref, 2, "two");
        CHECK(cond.units == std::vector<NodeId>{0, 1});
    }
    CHECK_THROWS_AS(static_cast<void>(knn_condition(reps, ident, ref, 0, "x")), ArgumentError);
    CHECK_THROWS_AS(static_cast<void>(knn_condition(reps, ident, ref, 5, "x")), ArgumentError);
}

TEST_CASE("single active dim orders by that dim") {
    const std::size_t n = 50;
    RepresentationMatrix reps;
    reps.n = n;
    reps.m = 2;
    reps.schema = MotifSchema::from_codes({"Z", "2-1"});
    reps.values.resize(n * 2);
    rng::Stream stream(9);
    for (std::size_t i = 0; i < n; ++i) {
        reps.values[i * 2] = 1.0;
        reps.values[i * 2 + 1] = stream.next_uniform();
    }
    DistanceMetric metric;
    metric.weights = {0.0, 1.0};  // only the full-treatment dim is active
    const std::vector<double> ref{1.0, 1.0};

    std::vector<std::size_t> by_value(n);
    std::iota(by_value.begin(), by_value.end(), 0u);
    std::sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
        return reps.at(a, 1) > reps.at(b, 1);
    });
    for (const std::size_t K : {std::size_t{5}, std::size_t{17}, std::size_t{33}}) {
        const auto cond = knn_condition(reps, metric, ref, K, "k");
        std::vector<NodeId> expect(by_value.begin(),
                                   by_value.begin() + static_cast<std::ptrdiff_t>(K));
        std::sort(expect.begin(), expect.end());
        std::vector<NodeId> expect_ids;
        for (const auto v : expect) expect_ids.push_back(static_cast<NodeId>(v));
        CHECK(cond.units == expect_ids);
    }
}

TEST_CASE("select_estimate rules") {
    std::vector<KSweepRow> rows(3);
    rows[0] = {10, 0.1, 0, 0, 0, 0, 3.9, 0.3};
    rows[1] = {20, 0.2, 0, 0, 0, 0, 3.5, 0.2};
    rows[2] = {50, 0.5, 0, 0, 0, 0, 3.0, 0.1};
    for (auto& r : rows) r.pos1.ok = r.pos0.ok = true;

    CHECK(select_estimate(rows, InterferenceAssumption::NonNegative).K == 10);
    CHECK(select_estimate(rows, InterferenceAssumption::NonPositive).K == 50);

    SUBCASE("positivity filters before optimizing") {
        rows[0].pos1.ok = false;
        CHECK(select_estimate(rows, InterferenceAssumption::NonNegative).K == 20);
    }
    SUBCASE("se cap filters") {
        CHECK(select_estimate(rows, InterferenceAssumption::NonNegative, 0.15).K == 50);
    }
    SUBCASE("ties prefer smaller K") {
        rows[1].tau = 3.9;
        CHECK(select_estimate(rows, InterferenceAssumption::NonNegative).K == 10);
    }
    SUBCASE("no passing row throws with verdicts") {
        for (auto& r : rows) r.pos0.ok = false;
        CHECK_THROWS_AS(
            static_cast<void>(select_estimate(rows, InterferenceAssumption::NonNegative)),
            SelectionError);
    }
}

TEST_CASE("sweep on a small harness") {
    HarnessConfig config;
    config.ws = {256, 6, 0.5};
    config.replicates = 300;
    config.bootstrap = 200;
    config.k_fractions = {0.05, 0.2, 1.0};
    config.seed = 14;
    config.compare_fracq = false;
    const auto result = run_replication(config);
    REQUIRE(result.knn_rows.size() == 3);

    SUBCASE("K = N row degenerates to the overall Hajek mean and tau = 0") {
        const auto& full = result.knn_rows.back();
        CHECK(full.K == 256);
        CHECK(full.tau == doctest::Approx(0.0));
        CHECK(full.mu1 == doctest::Approx(full.mu0));
    }
    SUBCASE("rows carry K/N and finite ses") {
        for (const auto& row : result.knn_rows) {
            CHECK(row.k_over_n == doctest::Approx(static_cast<double>(row.K) / 256.0));
            CHECK(std::isfinite(row.se_tau));
            CHECK(row.tau == doctest::Approx(row.mu1 - row.mu0));
        }
    }
}

TEST_CASE("membership probability is monotone in K (nesting)") {
    HarnessConfig config;
    config.ws = {128, 6, 0.5};
    config.replicates = 150;
    config.bootstrap = 64;
    config.k_fractions = {0.05, 0.1, 0.3};
    config.seed = 15;
    config.compare_fracq = false;

    const Graph g = generate_watts_strogatz(128, 6, 0.5, rng::label_seed(15, "network"));
    const auto model = attach_outcome_model(g, 0.25, 1);
    const auto schema = MotifSchema::standard(true);
    RepresentationBuilder builder(model.graph, schema, {});
    const auto design = RandomizationDesign::bernoulli(128, 0.5);
    const ReplicateCache cache(builder, design, 150, 2);
    const auto refs = reference_representations(schema);

    std::vector<double> prev;
    for (const std::size_t K : {std::size_t{6}, std::size_t{12}, std::size_t{38}}) {
        KnnConditionSpec spec{"k", refs.r1, std::vector<double>(schema.size(), 1.0), K};
        const auto probs = cache.membership_probability(ExposureCondition{spec});
        if (!prev.empty()) {
            for (std::size_t i = 0; i < probs.size(); ++i) CHECK(prev[i] <= probs[i]);
        }
        prev = probs;
    }
}
