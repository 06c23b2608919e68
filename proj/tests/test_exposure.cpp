#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cnm/errors.hpp"
#include "cnm/exposure.hpp"
#include "support/oracles.hpp"

using namespace cnm;

namespace {

Graph path3() {
    std::istringstream in("0 1\n1 2");
    return load_edge_list(in);
}

// Box for "ego treated and every neighbor treated": with the +U/+1 smoothing,
// a degree-d unit has its 2-1 entry above d/(d+1) exactly when all d neighbors
// are treated, so the cut at max_d/(max_d+1) is U-free for units of degree
// max_d and integrates U for smaller degrees (the oracle handles both).
BoxCondition all_treated_box(const MotifSchema& schema, int max_degree, std::string label) {
    BoxCondition box = BoxCondition::whole(schema.size(), std::move(label));
    box.dims[0] = {1.0, 1.0, false};
    const double theta =
        static_cast<double>(max_degree) / (static_cast<double>(max_degree) + 1.0);
    box.dims[1] = {theta, 1.0, true};
    return box;
}

}  // namespace

TEST_CASE("whole-space condition has probability B/(B+1)") {
    const Graph g = path3();
    const auto schema = MotifSchema::from_codes({"Z", "2-1"});
    const auto design = RandomizationDesign::bernoulli(3, 0.5);
    const std::size_t B = 40;
    const auto table = estimate_membership_prob(
        g, design, schema, {ExposureCondition{BoxCondition::whole(schema.size())}}, B, 5);
    for (std::size_t i = 0; i < table.n; ++i) {
        CHECK(table.at(i, 0) == doctest::Approx(static_cast<double>(B) / (B + 1.0)));
    }
}

TEST_CASE("empty box has probability exactly zero") {
    const Graph g = path3();
    const auto schema = MotifSchema::from_codes({"Z", "2-1"});
    BoxCondition empty = BoxCondition::whole(schema.size(), "empty");
    empty.dims[1] = {0.7, 0.2, false};
    const auto design = RandomizationDesign::bernoulli(3, 0.5);
    const auto table =
        estimate_membership_prob(g, design, schema, {ExposureCondition{empty}}, 100, 6);
    for (std::size_t i = 0; i < table.n; ++i) CHECK(table.at(i, 0) == 0.0);
}

TEST_CASE("middle-of-path probability approaches the enumerated 1/8") {
    const Graph g = path3();
    const auto schema = MotifSchema::from_codes({"Z", "2-1"});
    const auto design = RandomizationDesign::bernoulli(3, 0.5);
    const BoxCondition box = all_treated_box(schema, 2, "ego-and-both-neighbors");

    const auto exact = testing::exact_box_probabilities(g, schema, design, box);
    CHECK(exact[1] == doctest::Approx(0.125));

    const std::size_t B = 2000;
    const auto table =
        estimate_membership_prob(g, design, schema, {ExposureCondition{box}}, B, 99);
    for (std::size_t i = 0; i < 3; ++i) {
        const double sigma = std::sqrt(exact[i] * (1.0 - exact[i]) / static_cast<double>(B));
        CHECK(std::abs(table.at(i, 0) - exact[i]) < 3.0 * sigma);
    }
}

TEST_CASE("monte carlo converges to enumeration on small graphs") {
    const auto schema = MotifSchema::from_codes({"Z", "2-1", "3c-2"});
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Graph g = testing::random_graph(10, 0.3, seed);
        const auto design = RandomizationDesign::bernoulli(10, 0.5);

        std::vector<BoxCondition> boxes;
        boxes.push_back(BoxCondition::whole(schema.size(), "ego"));
        boxes.back().dims[0] = {1.0, 1.0, false};
        boxes.push_back(BoxCondition::whole(schema.size(), "low-frac"));
        boxes.back().dims[1] = {0.0, 0.4, false};
        boxes.push_back(BoxCondition::whole(schema.size(), "triads"));
        boxes.back().dims[2] = {0.5, 1.0, true};

        const std::size_t B = 2000;
        std::vector<ExposureCondition> conditions;
        for (const auto& b : boxes) conditions.emplace_back(b);
        const auto table = estimate_membership_prob(g, design, schema, conditions, B, seed + 7);

        std::size_t checked = 0, within = 0;
        for (std::size_t k = 0; k < boxes.size(); ++k) {
            const auto exact = testing::exact_box_probabilities(g, schema, design, boxes[k]);
            for (std::size_t i = 0; i < 10; ++i) {
                const double sigma =
                    std::sqrt(std::max(exact[i] * (1.0 - exact[i]), 1e-12) / B);
                ++checked;
                if (std::abs(table.at(i, k) - exact[i]) <= 3.0 * sigma + 1.0 / (B + 1.0)) {
                    ++within;
                }
            }
        }
        CHECK(static_cast<double>(within) / static_cast<double>(checked) >= 0.99);
    }
}

TEST_CASE("identical inputs give identical tables") {
    const Graph g = testing::random_graph(15, 0.25, 4);
    const auto schema = MotifSchema::from_codes({"Z", "2-1", "3o-2"});
    const auto design = RandomizationDesign::bernoulli(15, 0.5);
    BoxCondition box = BoxCondition::whole(schema.size(), "b");
    box.dims[1] = {0.3, 0.9, false};
    const auto t1 = estimate_membership_prob(g, design, schema, {ExposureCondition{box}}, 300, 8);
    const auto t2 = estimate_membership_prob(g, design, schema, {ExposureCondition{box}}, 300, 8);
    CHECK(t1.probs == t2.probs);
}

TEST_CASE("nested boxes give nested probabilities on a shared replicate stream") {
    const Graph g = testing::random_graph(20, 0.2, 9);
    const auto schema = MotifSchema::from_codes({"Z", "2-1", "3o-2"});
    const auto design = RandomizationDesign::bernoulli(20, 0.5);
    RepresentationBuilder builder(g, schema, {});
    const ReplicateCache cache(builder, design, 400, 11);

    BoxCondition inner = BoxCondition::whole(schema.size(), "inner");
    inner.dims[1] = {0.2, 0.6, true};
    BoxCondition outer = BoxCondition::whole(schema.size(), "outer");
    outer.dims[1] = {0.1, 0.8, true};

    const auto pi = cache.membership_probability(ExposureCondition{inner});
    const auto po = cache.membership_probability(ExposureCondition{outer});
    for (std::size_t i = 0; i < pi.size(); ++i) CHECK(pi[i] <= po[i]);
}

TEST_CASE("membership probabilities stay within [0, B/(B+1)]") {
    const Graph g = testing::random_graph(12, 0.3, 10);
    const auto schema = MotifSchema::from_codes({"Z", "2-1"});
    const auto design = RandomizationDesign::bernoulli(12, 0.5);
    const std::size_t B = 150;
    RepresentationBuilder builder(g, schema, {});
    const ReplicateCache cache(builder, design, B, 3);
    BoxCondition box = BoxCondition::whole(schema.size(), "b");
    box.dims[0] = {1.0, 1.0, false};
    for (const double p : cache.membership_probability(ExposureCondition{box})) {
        CHECK(p >= 0.0);
        CHECK(p <= static_cast<double>(B) / (B + 1.0));
    }
}

TEST_CASE("check_positivity thresholds") {
    std::vector<double> probs(100, 0.3);
    SUBCASE("no zeros") {
        const auto v = check_positivity(probs, 0.0, 0.01);
        CHECK(v.ok);
        CHECK(v.violating_fraction == 0.0);
    }
    SUBCASE("two violations out of 100") {
        probs[3] = 0.0;
        probs[77] = 0.0;
        const auto strict = check_positivity(probs, 0.0, 0.01);
        CHECK_FALSE(strict.ok);
        CHECK(strict.violating_fraction == doctest::Approx(0.02));
        const auto loose = check_positivity(probs, 0.0, 0.05);
        CHECK(loose.ok);
    }
    SUBCASE("monotone in epsilon and delta") {
        probs[0] = 0.01;
        for (double eps_lo : {0.0, 0.005}) {
            for (double eps_hi : {0.02, 0.4}) {
                const auto lo = check_positivity(probs, eps_lo, 0.001);
                const auto hi = check_positivity(probs, eps_hi, 0.001);
                CHECK(lo.violating_fraction <= hi.violating_fraction);
            }
        }
        const auto tight = check_positivity(probs, 0.02, 0.005);
        const auto relaxed = check_positivity(probs, 0.02, 0.5);
        CHECK((!tight.ok || relaxed.ok));
        CHECK(relaxed.ok);
    }
    CHECK_THROWS_AS(static_cast<void>(check_positivity(probs, -0.1, 0.01)), ArgumentError);
    CHECK_THROWS_AS(static_cast<void>(check_positivity(probs, 0.0, 1.0)), ArgumentError);
}

TEST_CASE("estimate_membership_prob validates B") {
    const Graph g = path3();
    const auto schema = MotifSchema::from_codes({"Z", "2-1"});
    const auto design = RandomizationDesign::bernoulli(3, 0.5);
    CHECK_THROWS_AS(static_cast<void>(estimate_membership_prob(
                        g, design, schema, {ExposureCondition{BoxCondition::whole(2)}}, 0, 1)),
                    ArgumentError);
}
