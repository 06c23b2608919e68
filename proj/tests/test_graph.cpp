#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cnm/errors.hpp"
#include "cnm/graph.hpp"
#include "support/oracles.hpp"

using namespace cnm;

TEST_CASE("load_edge_list basic construction") {
    std::istringstream in("0 1\n1 2");
    const Graph g = load_edge_list(in);
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 2));
    CHECK_FALSE(g.has_edge(0, 2));
}

TEST_CASE("load_edge_list drops duplicates and self-loops") {
    std::istringstream in("0 1\n1 0\n1 1");
    LoadStats stats;
    const Graph g = load_edge_list(in, nullptr, &stats);
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(stats.dropped_records() == 2);
    CHECK(stats.dropped_self_loops == 1);
    CHECK(stats.dropped_duplicates == 1);
}

TEST_CASE("load_edge_list reports malformed lines") {
    std::istringstream one_token("0 1\n7\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_edge_list(one_token)),
                         doctest::Contains("line 2"), ParseError);
    std::istringstream bad_token("0 x\n");
    CHECK_THROWS_AS(static_cast<void>(load_edge_list(bad_token)), ParseError);
}

TEST_CASE("comments and arbitrary external ids") {
    std::istringstream in("# a comment\n100 2000\n2000 5\n");
    const Graph g = load_edge_list(in);
    CHECK(g.node_count() == 3);
    CHECK(g.index_of(100) == 0);
    CHECK(g.index_of(2000) == 1);
    CHECK(g.index_of(5) == 2);
    CHECK(g.index_of(77) == -1);
    CHECK(g.external_id(2) == 5);
}

TEST_CASE("attribute table adds isolates and validates coverage") {
    SUBCASE("attr-only node becomes an isolate") {
        std::istringstream edges("0 1\n");
        std::istringstream attrs("node_id,X\n0,1\n1,0\n9,1\n");
        const Graph g = load_edge_list(edges, &attrs);
        CHECK(g.node_count() == 3);
        CHECK(g.degree(g.index_of(9)) == 0);
        CHECK(g.attribute("X")[static_cast<std::size_t>(g.index_of(9))] == 1.0);
    }
    SUBCASE("missing rows for graph nodes are an error") {
        std::istringstream edges("0 1\n1 2\n");
        std::istringstream attrs("node_id,X\n0,1\n1,0\n");
        CHECK_THROWS_WITH_AS(static_cast<void>(load_edge_list(edges, &attrs)),
                             doctest::Contains("2"), ValidationError);
    }
    SUBCASE("non-numeric cell is a parse error") {
        std::istringstream edges("0 1\n");
        std::istringstream attrs("node_id,X\n0,a\n1,0\n");
        CHECK_THROWS_AS(static_cast<void>(load_edge_list(edges, &attrs)), ParseError);
    }
}

TEST_CASE("ego_network follows the hop recursion on a path") {
    std::istringstream in("0 1\n1 2");
    const Graph g = load_edge_list(in);

    const EgoNetwork e0 = ego_network(g, 0, 0);
    CHECK(e0.members == std::vector<NodeId>{0});
    CHECK(e0.induced_edges.empty());

    const EgoNetwork e1 = ego_network(g, 0, 1);
    CHECK(e1.members == std::vector<NodeId>{0, 1});
    CHECK(e1.induced_edges == std::vector<std::pair<NodeId, NodeId>>{{0, 1}});

    const EgoNetwork e2 = ego_network(g, 0, 2);
    CHECK(e2.members == std::vector<NodeId>{0, 1, 2});
    CHECK(e2.induced_edges == std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}});

    CHECK_THROWS_AS(static_cast<void>(ego_network(g, 5, 1)), ArgumentError);
}

TEST_CASE("ego_network members are monotone in the hop count") {
    const Graph g = testing::random_graph(40, 0.08, 99);
    for (NodeId i = 0; i < g.node_count(); i += 7) {
        for (int hop = 0; hop < 4; ++hop) {
            const auto a = ego_network(g, i, hop).members;
            const auto b = ego_network(g, i, hop + 1).members;
            CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        }
    }
}

TEST_CASE("common_neighbor_count") {
    std::istringstream tri_in("0 1\n1 2\n0 2");
    const Graph tri = load_edge_list(tri_in);
    CHECK(common_neighbor_count(tri, 0, 1) == 1);

    std::istringstream path_in("0 1\n1 2");
    const Graph path = load_edge_list(path_in);
    CHECK(common_neighbor_count(path, 0, 2) == 1);
    CHECK(common_neighbor_count(path, 0, 1) == 0);
    CHECK_THROWS_AS(static_cast<void>(common_neighbor_count(path, 1, 1)), ArgumentError);
}

TEST_CASE("common_neighbor_count is symmetric") {
    const Graph g = testing::random_graph(30, 0.15, 7);
    for (NodeId u = 0; u < g.node_count(); ++u) {
        for (const NodeId v : g.neighbors(u)) {
            if (u < v) CHECK(common_neighbor_count(g, u, v) == common_neighbor_count(g, v, u));
        }
    }
    CHECK(common_neighbor_count(g, 0, g.node_count() - 1) ==
          common_neighbor_count(g, g.node_count() - 1, 0));
}

TEST_CASE("edge list round trip preserves adjacency") {
    const Graph g = testing::random_graph(25, 0.2, 11);
    std::ostringstream out;
    write_edge_list(g, out);
    std::istringstream in(out.str());
    const Graph h = load_edge_list(in);
    REQUIRE(h.node_count() == g.node_count());
    REQUIRE(h.edge_count() == g.edge_count());
    for (NodeId i = 0; i < g.node_count(); ++i) {
        const NodeId hi = h.index_of(g.external_id(i));
        REQUIRE(hi >= 0);
        const auto ga = g.neighbors(i);
        const auto ha = h.neighbors(hi);
        REQUIRE(ga.size() == ha.size());
        std::vector<ExternalId> g_ext, h_ext;
        for (const NodeId v : ga) g_ext.push_back(g.external_id(v));
        for (const NodeId v : ha) h_ext.push_back(h.external_id(v));
        std::sort(g_ext.begin(), g_ext.end());
        std::sort(h_ext.begin(), h_ext.end());
        CHECK(g_ext == h_ext);
    }
}

TEST_CASE("with_attribute replaces and appends") {
    std::istringstream in("0 1\n");
    Graph g = load_edge_list(in);
    g = g.with_attribute("X", {1.0, 0.0});
    CHECK(g.attribute("X")[0] == 1.0);
    g = g.with_attribute("X", {0.0, 0.0});
    CHECK(g.attribute("X")[0] == 0.0);
    CHECK_THROWS_AS(static_cast<void>(g.with_attribute("bad", {1.0})), ArgumentError);
    CHECK_THROWS_AS(static_cast<void>(g.attribute("missing")), ValidationError);
}

TEST_CASE("clustering coefficient on known graphs") {
    std::istringstream tri_in("0 1\n1 2\n0 2");
    CHECK(average_clustering_coefficient(load_edge_list(tri_in)) == doctest::Approx(1.0));
    std::istringstream path_in("0 1\n1 2");
    CHECK(average_clustering_coefficient(load_edge_list(path_in)) == doctest::Approx(0.0));
}
