#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/graph.hpp"

namespace cnm {

// Motif shapes around an ego: ego+1 neighbor (dyad), ego+2 neighbors without /
// with the closing edge (open / closed triad), and ego+3 pairwise non-adjacent
// neighbors (open 4-star).
enum class MotifShape { Dyad, OpenTriad, ClosedTriad, OpenStar4 };

int non_ego_count(MotifShape shape);
std::string shape_code(MotifShape shape);

/// One dimension of the representation vector.
struct MotifDim {
    enum class Kind { EgoTreatment, MotifFraction, AttrFraction };
    Kind kind = Kind::EgoTreatment;
    MotifShape shape = MotifShape::Dyad;
    int treated_count = 0;
    std::string attr_column;  // AttrFraction only
    double attr_value = 0.0;  // AttrFraction only

    static MotifDim ego();
    static MotifDim fraction(MotifShape shape, int treated_count);
    // Fraction of treated neighbors among neighbors with attr_column == value,
    // e.g. code "2-1(1)" for column X and value 1.
    static MotifDim attr_fraction(double attr_value, std::string attr_column = "X");

    std::string code() const;
    static MotifDim parse(const std::string& code);

    bool operator==(const MotifDim&) const = default;
};

/// Ordered dimension list; dim 0 is always the ego treatment.
struct MotifSchema {
    std::vector<MotifDim> dims;

    std::size_t size() const { return dims.size(); }
    void validate() const;
    // Columns referenced by AttrFraction dims must exist on the graph.
    void validate_for(const Graph& g) const;

    std::vector<std::string> codes() const;
    int index_of(const std::string& code) const;  // -1 when absent

    static MotifSchema from_codes(const std::vector<std::string>& codes);
    // Z, 2-1, 3o-0, 3o-2, 3c-0, 3c-2, 4o-0, 4o-3 [, 2-1(1), 2-1(0)]
    static MotifSchema standard(bool with_attr_dims);
};

/// Neighbor subsampling for very-high-degree nodes.
struct SamplingConfig {
    int max_exact_degree = 200;
    int sample_size = 100;
    std::uint64_t seed = 0;
};

/// Per-node motif tallies under one assignment. For every shape the causal
/// counts partition the total by the number of treated non-ego members.
struct MotifCounts {
    std::int64_t dyad_total = 0;
    std::array<std::int64_t, 2> dyad{};
    std::int64_t open_triad_total = 0;
    std::array<std::int64_t, 3> open_triad{};
    std::int64_t closed_triad_total = 0;
    std::array<std::int64_t, 3> closed_triad{};
    std::int64_t star4_total = 0;
    std::array<std::int64_t, 4> star4{};
    struct AttrCount {
        std::int64_t treated = 0;
        std::int64_t total = 0;
    };
    std::vector<AttrCount> attr;  // one per AttrFraction dim, in schema order
    bool sampled = false;

    std::int64_t count_for(const MotifSchema& schema, std::size_t dim_index) const;
    std::int64_t total_for(const MotifSchema& schema, std::size_t dim_index) const;
};

/// N x M representation matrix; entries in [0,1], column 0 is the ego
/// treatment, and columns m>0 carry the +U/+1 smoothed motif fractions.
struct RepresentationMatrix {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> values;  // row-major n*m
    std::vector<double> u;       // row-major n*(m-1); retained for provenance
    MotifSchema schema;
    std::uint64_t seed = 0;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * m, m}; }
    double at(std::size_t i, std::size_t dim) const { return values[i * m + dim]; }
};

/// Constants of the schema describing the all-treated / all-control worlds.
struct ReferenceRepresentations {
    std::vector<double> r1;
    std::vector<double> r0;
};

// r1 pins full-treatment-counting dims to 1 and full-control dims to 0 (r0 is
// symmetric); a mixed-pattern dim (e.g. 3o-1) has no such limit and is a
// schema error here even though it is fine as a tree/kNN feature.
ReferenceRepresentations reference_representations(const MotifSchema& schema);

// Pure smoothing step: row[0] = z_i, row[m] = (count + u[m-1]) / (total + 1).
std::vector<double> representation_row_from_counts(const MotifCounts& counts, int z_i,
                                                   const MotifSchema& schema,
                                                   std::span<const double> u);

/// Precomputed per-node neighborhood structure (sampled neighbor list, edges
/// and triangles among neighbors) shared by every assignment replicate.
class MotifCountingPlan {
public:
    MotifCountingPlan() = default;
    MotifCountingPlan(const Graph& g, const SamplingConfig& sampling, bool with_triangles);

    std::span<const NodeId> node_neighbors(NodeId i) const;
    std::span<const std::uint16_t> node_edges(NodeId i) const;      // (a,b) local pairs
    std::span<const std::uint16_t> node_triangles(NodeId i) const;  // (a,b,c) local triples
    bool is_sampled(NodeId i) const { return sampled_[static_cast<std::size_t>(i)] != 0; }
    bool with_triangles() const { return with_triangles_; }

private:
    bool with_triangles_ = false;
    std::vector<std::int64_t> nbr_off_{0}, edge_off_{0}, tri_off_{0};
    std::vector<NodeId> nbrs_;
    std::vector<std::uint16_t> edges_;
    std::vector<std::uint16_t> tris_;
    std::vector<std::uint8_t> sampled_;
};

/// Builds representation rows for arbitrary assignments of one graph+schema.
/// Thread-safe for concurrent row computations once constructed.
class RepresentationBuilder {
public:
    RepresentationBuilder(const Graph& g, MotifSchema schema, SamplingConfig sampling = {});

    const Graph& graph() const { return *g_; }
    const MotifSchema& schema() const { return schema_; }
    const SamplingConfig& sampling() const { return sampling_; }
    std::size_t dim_count() const { return schema_.size(); }

    MotifCounts counts(NodeId i, std::span<const std::uint8_t> z) const;

    // U entries are indexed by (u_seed, node, dim), never by draw order.
    RepresentationMatrix build(const AssignmentVector& z, std::uint64_t u_seed) const;

    // Writes one node's row; `out` has dim_count() slots.
    void row_into(NodeId i, std::span<const std::uint8_t> z, std::uint64_t u_seed,
                  double* out) const;

    std::vector<double> reference_r1() const { return reference_representations(schema_).r1; }
    std::vector<double> reference_r0() const { return reference_representations(schema_).r0; }

private:
    const Graph* g_;
    MotifSchema schema_;
    SamplingConfig sampling_;
    MotifCountingPlan plan_;
    std::vector<std::span<const double>> attr_columns_;  // per AttrFraction dim
    std::vector<double> attr_values_;
    std::vector<std::size_t> attr_dim_index_;
    bool need_star4_ = false;
};

// One-shot counting, matching RepresentationBuilder::counts.
MotifCounts count_causal_motifs(const Graph& g, NodeId i, const AssignmentVector& z,
                                const MotifSchema& schema, const SamplingConfig& sampling = {});

// Convenience wrapper over RepresentationBuilder::build.
RepresentationMatrix build_representation_matrix(const Graph& g, const AssignmentVector& z,
                                                 const MotifSchema& schema, std::uint64_t seed,
                                                 const SamplingConfig& sampling = {});

}  // namespace cnm
