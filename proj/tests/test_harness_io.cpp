#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cnm/errors.hpp"
#include "cnm/harness.hpp"
#include "cnm/io.hpp"
#include "support/oracles.hpp"

using namespace cnm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cnm_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("naive difference") {
    const std::vector<double> y{1.0, 2.0, 5.0, 6.0};
    const std::vector<std::uint8_t> z{0, 0, 1, 1};
    CHECK(naive_difference(y, z) == doctest::Approx(4.0));
    const std::vector<std::uint8_t> all_one{1, 1, 1, 1};
    CHECK_THROWS_AS(static_cast<void>(naive_difference(y, all_one)), EstimationError);
}

TEST_CASE("replication bundle is deterministic in the seed") {
    HarnessConfig config;
    config.ws = {192, 6, 0.5};
    config.replicates = 150;
    config.bootstrap = 100;
    config.k_fractions = {0.1, 0.3};
    config.seed = 77;
    const auto a = run_replication(config);
    const auto b = run_replication(config);
    CHECK(a.truth.tau == b.truth.tau);
    CHECK(a.naive_diff == b.naive_diff);
    REQUIRE(a.knn_rows.size() == b.knn_rows.size());
    for (std::size_t i = 0; i < a.knn_rows.size(); ++i) {
        CHECK(a.knn_rows[i].tau == b.knn_rows[i].tau);
        CHECK(a.knn_rows[i].se_tau == b.knn_rows[i].se_tau);
    }
}

TEST_CASE("cluster-design replication carries the design tag and runs the sweep") {
    HarnessConfig config;
    config.ws = {128, 6, 0.5};
    config.design = DesignKind::GraphCluster;
    config.cluster_levels = 4;
    config.replicates = 120;
    config.bootstrap = 80;
    config.k_fractions = {0.2, 0.5};
    config.compare_fracq = false;
    config.seed = 78;
    const auto result = run_replication(config);
    CHECK(result.design_tag.find("cluster(k=16") == 0);
    CHECK(result.knn_rows.size() == 2);
}

TEST_CASE("tree-enabled replication produces a gate") {
    HarnessConfig config;
    config.ws = {256, 6, 0.5};
    config.replicates = 150;
    config.bootstrap = 80;
    config.run_knn = false;
    config.run_tree = true;
    config.tree.kappa = 20;
    config.tree.gamma = 1.5;
    config.tree.bootstrap_b = 80;
    config.seed = 79;
    const auto result = run_replication(config);
    REQUIRE(result.tree.has_value());
    REQUIRE(result.tree_gate.has_value());
    CHECK(result.tree->leaf_count() >= 1);
}

TEST_CASE("assignment and outcome CSV round trips aligned by external id") {
    TempDir tmp;
    std::istringstream edges("5 9\n9 11\n");
    const Graph g = load_edge_list(edges);

    AssignmentVector z;
    z.z = {1, 0, 1};
    cnm::io::write_assignment_csv(tmp.file("z.csv"), g, z);
    const auto z2 = cnm::io::read_assignment_csv(tmp.file("z.csv"), g);
    CHECK(z2.z == z.z);

    const std::vector<double> y{0.25, -1.5, 3.75};
    cnm::io::write_outcomes_csv(tmp.file("y.csv"), g, y);
    CHECK(cnm::io::read_outcomes_csv(tmp.file("y.csv"), g) == y);

    SUBCASE("missing ids are a validation error") {
        cnm::io::write_text_file(tmp.file("short.csv"), "node_id,y\n5,1.0\n9,2.0\n");
        CHECK_THROWS_WITH_AS(
            static_cast<void>(cnm::io::read_outcomes_csv(tmp.file("short.csv"), g)),
            doctest::Contains("11"), ValidationError);
    }
    SUBCASE("unknown ids are a validation error") {
        cnm::io::write_text_file(tmp.file("extra.csv"),
                                 "node_id,y\n5,1.0\n9,2.0\n11,3.0\n42,4.0\n");
        CHECK_THROWS_WITH_AS(
            static_cast<void>(cnm::io::read_outcomes_csv(tmp.file("extra.csv"), g)),
            doctest::Contains("42"), ValidationError);
    }
}

TEST_CASE("partition CSV round trip") {
    TempDir tmp;
    std::istringstream edges("0 1\n2 3\n");
    const Graph g = load_edge_list(edges);
    ClusterPartition part;
    part.cluster_of = {0, 0, 1, 1};
    part.cluster_count = 2;
    cnm::io::write_partition_csv(tmp.file("part.csv"), g, part);
    const auto part2 = cnm::io::read_partition_csv(tmp.file("part.csv"), g);
    CHECK(part2.cluster_of == part.cluster_of);
    CHECK(part2.cluster_count == 2);
}

TEST_CASE("representation and probability CSV headers use the dim codes") {
    TempDir tmp;
    Graph g = testing::random_graph(6, 0.5, 3);
    std::vector<double> x(6, 1.0);
    g = g.with_attribute("X", x);
    const auto schema = MotifSchema::standard(true);
    const auto z = bernoulli_assignment(6, 0.5, 4);
    const auto reps = build_representation_matrix(g, z, schema, 5);
    cnm::io::write_representations_csv(tmp.file("reps.csv"), g, reps);
    const auto text = cnm::io::read_text_file(tmp.file("reps.csv"));
    CHECK(text.find("node_id,Z,2-1,3o-0,3o-2,3c-0,3c-2,4o-0,4o-3,2-1(1),2-1(0)\n") == 0);

    const auto design = RandomizationDesign::bernoulli(6, 0.5);
    const auto table = estimate_membership_prob(
        g, design, schema, {ExposureCondition{BoxCondition::whole(schema.size(), "all")}}, 50,
        6);
    cnm::io::write_probability_csv(tmp.file("probs.csv"), g, table);
    CHECK(cnm::io::read_text_file(tmp.file("probs.csv")).find("node_id,all\n") == 0);
}

TEST_CASE("sweep CSV layout") {
    TempDir tmp;
    std::vector<KSweepRow> rows(1);
    rows[0].K = 10;
    rows[0].k_over_n = 0.1;
    rows[0].mu1 = 4.5;
    rows[0].se1 = 0.2;
    rows[0].mu0 = 1.5;
    rows[0].se0 = 0.1;
    rows[0].tau = 3.0;
    rows[0].se_tau = 0.25;
    rows[0].pos1.ok = true;
    rows[0].pos0.ok = false;
    cnm::io::write_sweep_csv(tmp.file("sweep.csv"), rows);
    const auto text = cnm::io::read_text_file(tmp.file("sweep.csv"));
    CHECK(text == "K,K_over_N,mu1,se1,pos1,mu0,se0,pos0,tau,se_tau\n"
                  "10,0.1,4.5,0.2,1,1.5,0.1,0,3,0.25\n");
}

TEST_CASE("format_double round trips") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0078125}) {
        const auto s = cnm::io::format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("file digest is stable and content-sensitive") {
    TempDir tmp;
    cnm::io::write_text_file(tmp.file("a.txt"), "hello");
    cnm::io::write_text_file(tmp.file("b.txt"), "hello");
    cnm::io::write_text_file(tmp.file("c.txt"), "hellp");
    const auto da = cnm::io::fnv1a64_file(tmp.file("a.txt"));
    CHECK(da == cnm::io::fnv1a64_file(tmp.file("b.txt")));
    CHECK(da != cnm::io::fnv1a64_file(tmp.file("c.txt")));
    CHECK(cnm::io::hex64(da).size() == 16);
}
