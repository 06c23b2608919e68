#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cnm {

using NodeId = std::int32_t;
using ExternalId = std::int64_t;

/// Simple undirected graph over dense node indices 0..N-1.
///
/// Immutable after construction and safe for unrestricted concurrent reads.
/// Adjacency lists are sorted ascending so neighborhood intersections run as
/// linear merges. Node attributes live in named numeric columns; column "X"
/// is the conventional home of the binary covariate.
class Graph {
public:
    Graph() = default;

    // Builds from an (unsorted, possibly duplicated) edge list over dense ids.
    // Self-loops and duplicates are dropped; counts are reported through the
    // optional out-params used by load_edge_list.
    static Graph from_edges(NodeId node_count, std::vector<std::pair<NodeId, NodeId>> edges,
                            std::size_t* dropped_self_loops = nullptr,
                            std::size_t* dropped_duplicates = nullptr);

    NodeId node_count() const { return node_count_; }
    std::size_t edge_count() const { return adj_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId i) const {
        return {adj_.data() + offsets_[static_cast<std::size_t>(i)],
                adj_.data() + offsets_[static_cast<std::size_t>(i) + 1]};
    }
    NodeId degree(NodeId i) const {
        return static_cast<NodeId>(offsets_[static_cast<std::size_t>(i) + 1] -
                                   offsets_[static_cast<std::size_t>(i)]);
    }
    bool has_edge(NodeId u, NodeId v) const;

    // External-id mapping. Dense construction (from_edges) uses identity ids.
    ExternalId external_id(NodeId i) const { return ext_ids_[static_cast<std::size_t>(i)]; }
    // Returns -1 when the external id is unknown.
    NodeId index_of(ExternalId ext) const;

    bool has_attribute(const std::string& name) const;
    std::span<const double> attribute(const std::string& name) const;
    const std::vector<std::string>& attribute_names() const { return attr_names_; }

    // Copies the graph with one attribute column added or replaced.
    Graph with_attribute(const std::string& name, std::vector<double> column) const;

private:
    NodeId node_count_ = 0;
    std::vector<std::int64_t> offsets_{0};
    std::vector<NodeId> adj_;
    std::vector<ExternalId> ext_ids_;
    std::unordered_map<ExternalId, NodeId> ext_index_;
    std::vector<std::string> attr_names_;
    std::vector<std::vector<double>> attr_columns_;

    friend Graph load_edge_list(std::istream&, std::istream*, struct LoadStats*);
};

/// Record counts from edge-list ingestion.
struct LoadStats {
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
    std::size_t dropped_records() const { return dropped_self_loops + dropped_duplicates; }
};

// Reads "u <ws> v" lines ('#' starts a comment line). External ids are
// arbitrary integers and get densely reindexed in first-appearance order.
// When attrs is given it must be a CSV with header "node_id,<col>,..." and one
// row per node; ids present only there become isolates, and graph nodes
// missing from it are an error.
Graph load_edge_list(std::istream& edges, std::istream* attrs = nullptr,
                     LoadStats* stats = nullptr);
Graph load_edge_list_file(const std::string& edge_path, const std::string& attr_path = "",
                          LoadStats* stats = nullptr);

// One "u v" line per edge, endpoints as external ids, u listed first.
void write_edge_list(const Graph& g, std::ostream& out);

/// Vertex-induced subgraph of the n-hop neighborhood around one node.
struct EgoNetwork {
    NodeId center = 0;
    int hop = 0;
    std::vector<NodeId> members;                        // sorted ascending
    std::vector<std::pair<NodeId, NodeId>> induced_edges;  // u < v, lexicographic
};

// Hop 0 is {i} with no edges; hop n+1 adds every neighbor of the hop-n set.
EgoNetwork ego_network(const Graph& g, NodeId i, int hop);

// |N(i) ∩ N(j) \ {i,j}|. Symmetric; i == j is an error.
int common_neighbor_count(const Graph& g, NodeId i, NodeId j);

// Mean local clustering coefficient (nodes of degree < 2 contribute 0).
double average_clustering_coefficient(const Graph& g);

}  // namespace cnm
