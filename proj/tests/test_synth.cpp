#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cnm/errors.hpp"
#include "cnm/synth.hpp"
#include "support/oracles.hpp"

using namespace cnm;

namespace {

Graph star(int leaves) {
    std::ostringstream edges;
    for (int i = 1; i <= leaves; ++i) edges << 0 << ' ' << i << '\n';
    std::istringstream in(edges.str());
    return load_edge_list(in);
}

AssignmentVector assign(std::vector<std::uint8_t> z) {
    AssignmentVector a;
    a.z = std::move(z);
    return a;
}

}  // namespace

TEST_CASE("watts-strogatz with beta 0 is the ring lattice") {
    const Graph g = generate_watts_strogatz(50, 6, 0.0, 1);
    CHECK(g.edge_count() == 50 * 6 / 2);
    for (NodeId i = 0; i < g.node_count(); ++i) CHECK(g.degree(i) == 6);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(0, 3));
    CHECK(g.has_edge(0, 47));
    CHECK_FALSE(g.has_edge(0, 4));
}

TEST_CASE("rewiring preserves the edge count") {
    for (const double beta : {0.1, 0.5, 1.0}) {
        const Graph g = generate_watts_strogatz(300, 10, beta, 7);
        CHECK(g.edge_count() == 300 * 10 / 2);
    }
}

TEST_CASE("full rewiring loses the lattice clustering") {
    const Graph g = generate_watts_strogatz(2000, 10, 1.0, 11);
    CHECK(average_clustering_coefficient(g) < 0.05);
    // And beta=0 keeps the ring-lattice clustering 3(k-2)/(4(k-1)) = 2/3 at k=10.
    const Graph ring = generate_watts_strogatz(2000, 10, 0.0, 11);
    CHECK(average_clustering_coefficient(ring) == doctest::Approx(2.0 / 3.0).epsilon(0.01));
}

TEST_CASE("watts-strogatz argument validation") {
    CHECK_THROWS_AS(static_cast<void>(generate_watts_strogatz(10, 3, 0.5, 1)), ArgumentError);
    CHECK_THROWS_AS(static_cast<void>(generate_watts_strogatz(10, 10, 0.5, 1)), ArgumentError);
    CHECK_THROWS_AS(static_cast<void>(generate_watts_strogatz(10, 4, 1.5, 1)), ArgumentError);
}

TEST_CASE("star graph has all-zero interference weights") {
    const auto model = attach_outcome_model(star(6), 0.25, 5);
    for (const auto& row : model.weights) CHECK(row.empty());

    SUBCASE("outcomes collapse to the ego-only formula") {
        const auto z = bernoulli_assignment(7, 0.5, 6);
        const auto y = realize_outcomes(model, z, std::nullopt);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(y[i] == doctest::Approx((1.0 + model.x[i]) * (1.0 + z.z[i])));
        }
    }
    SUBCASE("ground truth tau is the mean of (1 + X_i)") {
        const auto truth = ground_truth(model);
        double expect = 0.0;
        for (const auto xi : model.x) expect += 1.0 + xi;
        expect /= 7.0;
        CHECK(truth.tau == doctest::Approx(expect));
        CHECK(truth.tau == doctest::Approx(truth.mu1 - truth.mu0));
    }
}

TEST_CASE("triangle weights split evenly when X is zero") {
    std::istringstream in("0 1\n1 2\n0 2");
    Graph g = load_edge_list(in);
    // Force X = 0 by searching a seed; instead pin X by rebuilding the model's
    // fields directly through a wrapper graph attribute.
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto model = attach_outcome_model(g, 0.25, seed);
        if (model.x[0] == 0 && model.x[1] == 0 && model.x[2] == 0) {
            REQUIRE(model.weights[0].size() == 2);
            CHECK(model.weights[0][0].second == doctest::Approx(0.5));
            CHECK(model.weights[0][1].second == doctest::Approx(0.5));

            const auto y = realize_outcomes(model, assign({0, 1, 1}), std::nullopt);
            CHECK(y[0] == doctest::Approx(2.0));  // (1+0)(1 + 0 + 0.5 + 0.5)
            return;
        }
    }
    FAIL("no all-zero X draw found");
}

TEST_CASE("weight rows are normalized or empty") {
    const Graph g = generate_watts_strogatz(400, 8, 0.5, 21);
    const auto model = attach_outcome_model(g, 0.25, 22);
    for (const auto& row : model.weights) {
        if (row.empty()) continue;
        double sum = 0.0;
        for (const auto& [j, w] : row) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("non-negative interference: raising z never lowers any outcome") {
    const Graph g = generate_watts_strogatz(200, 6, 0.5, 31);
    const auto model = attach_outcome_model(g, 0.25, 32);
    rng::Stream stream(33);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::uint8_t> lo(200), hi(200);
        for (std::size_t i = 0; i < 200; ++i) {
            lo[i] = stream.next_uniform() < 0.4;
            hi[i] = lo[i] || (stream.next_uniform() < 0.3);
        }
        const auto y_lo = realize_outcomes(model, assign(std::move(lo)), std::nullopt);
        const auto y_hi = realize_outcomes(model, assign(std::move(hi)), std::nullopt);
        for (std::size_t i = 0; i < 200; ++i) CHECK(y_lo[i] <= y_hi[i] + 1e-12);
    }
}

TEST_CASE("all-zero assignment gives y = 1 + X") {
    const Graph g = generate_watts_strogatz(100, 6, 0.5, 41);
    const auto model = attach_outcome_model(g, 0.25, 42);
    const auto y = realize_outcomes(model, assign(std::vector<std::uint8_t>(100, 0)),
                                    std::nullopt);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(y[i] == doctest::Approx(1.0 + model.x[i]));
    }
}

TEST_CASE("noise has the configured scale and is centered") {
    const Graph g = star(4);
    const auto model = attach_outcome_model(g, 0.25, 51);
    CHECK(model.noise_sigma == doctest::Approx(0.25));  // variance 1/16
    const auto z = assign({1, 0, 1, 0, 1});
    const auto clean = realize_outcomes(model, z, std::nullopt);
    const std::size_t draws = 10000;
    std::vector<double> mean(5, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        const auto y = realize_outcomes(model, z, 1000 + d);
        for (std::size_t i = 0; i < 5; ++i) mean[i] += y[i];
    }
    for (std::size_t i = 0; i < 5; ++i) {
        mean[i] /= static_cast<double>(draws);
        CHECK(std::abs(mean[i] - clean[i]) < 3.0 * 0.25 / 100.0);
    }
}

TEST_CASE("ground truth equals the brute-force constant-assignment averages") {
    const Graph g = generate_watts_strogatz(150, 6, 0.5, 61);
    const auto model = attach_outcome_model(g, 0.25, 62);
    const auto truth = ground_truth(model);
    const auto y1 = realize_outcomes(model, assign(std::vector<std::uint8_t>(150, 1)),
                                     std::nullopt);
    const auto y0 = realize_outcomes(model, assign(std::vector<std::uint8_t>(150, 0)),
                                     std::nullopt);
    double m1 = 0.0, m0 = 0.0;
    for (std::size_t i = 0; i < 150; ++i) {
        m1 += y1[i];
        m0 += y0[i];
    }
    CHECK(truth.mu1 == doctest::Approx(m1 / 150.0));
    CHECK(truth.mu0 == doctest::Approx(m0 / 150.0));
    CHECK(truth.tau == doctest::Approx(truth.mu1 - truth.mu0));
}

TEST_CASE("model graph carries the covariate column") {
    const Graph g = generate_watts_strogatz(64, 6, 0.5, 71);
    const auto model = attach_outcome_model(g, 0.25, 72);
    REQUIRE(model.graph.has_attribute("X"));
    const auto col = model.graph.attribute("X");
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(col[i] == static_cast<double>(model.x[i]));
    }
}
