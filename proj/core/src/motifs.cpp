#include "cnm/motifs.hpp"

#include <algorithm>
#include <charconv>

#include "cnm/errors.hpp"
#include "cnm/parallel.hpp"
#include "cnm/random.hpp"

namespace cnm {

int non_ego_count(MotifShape shape) {
    switch (shape) {
        case MotifShape::Dyad: return 1;
        case MotifShape::OpenTriad: return 2;
        case MotifShape::ClosedTriad: return 2;
        case MotifShape::OpenStar4: return 3;
    }
    return 0;
}

std::string shape_code(MotifShape shape) {
    switch (shape) {
        case MotifShape::Dyad: return "2";
        case MotifShape::OpenTriad: return "3o";
        case MotifShape::ClosedTriad: return "3c";
        case MotifShape::OpenStar4: return "4o";
    }
    return "?";
}

MotifDim MotifDim::ego() {
    MotifDim d;
    d.kind = Kind::EgoTreatment;
    return d;
}

MotifDim MotifDim::fraction(MotifShape shape, int treated_count) {
    if (treated_count < 0 || treated_count > non_ego_count(shape)) {
        throw SchemaError("treated count " + std::to_string(treated_count) +
                          " out of range for shape " + shape_code(shape));
    }
    MotifDim d;
    d.kind = Kind::MotifFraction;
    d.shape = shape;
    d.treated_count = treated_count;
    return d;
}

MotifDim MotifDim::attr_fraction(double attr_value, std::string attr_column) {
    MotifDim d;
    d.kind = Kind::AttrFraction;
    d.shape = MotifShape::Dyad;
    d.treated_count = 1;
    d.attr_column = std::move(attr_column);
    d.attr_value = attr_value;
    return d;
}

std::string MotifDim::code() const {
    switch (kind) {
        case Kind::EgoTreatment: return "Z";
        case Kind::MotifFraction:
            return shape_code(shape) + "-" + std::to_string(treated_count);
        case Kind::AttrFraction: {
            std::string v = std::to_string(attr_value);
            while (v.size() > 1 && v.back() == '0') v.pop_back();
            if (!v.empty() && v.back() == '.') v.pop_back();
            return "2-1(" + v + ")";
        }
    }
    return "?";
}

MotifDim MotifDim::parse(const std::string& code) {
    if (code == "Z" || code == "z") return ego();

    std::string body = code;
    std::optional<double> attr_value;
    const std::size_t paren = code.find('(');
    if (paren != std::string::npos) {
        if (code.back() != ')') throw SchemaError("bad dim code: " + code);
        const std::string inner = code.substr(paren + 1, code.size() - paren - 2);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), v);
        if (ec != std::errc{} || ptr != inner.data() + inner.size()) {
            throw SchemaError("bad attribute value in dim code: " + code);
        }
        attr_value = v;
        body = code.substr(0, paren);
    }

    const std::size_t dash = body.find('-');
    if (dash == std::string::npos) throw SchemaError("bad dim code: " + code);
    const std::string shape_tok = body.substr(0, dash);
    const std::string count_tok = body.substr(dash + 1);
    int k = 0;
    auto [ptr, ec] = std::from_chars(count_tok.data(), count_tok.data() + count_tok.size(), k);
    if (ec != std::errc{} || ptr != count_tok.data() + count_tok.size()) {
        throw SchemaError("bad treated count in dim code: " + code);
    }

    if (attr_value.has_value()) {
        if (shape_tok != "2" || k != 1) {
            throw SchemaError("attribute-conditioned dims must be of the form 2-1(v): " + code);
        }
        return attr_fraction(*attr_value);
    }
    MotifShape shape;
    if (shape_tok == "2") {
        shape = MotifShape::Dyad;
    } else if (shape_tok == "3o") {
        shape = MotifShape::OpenTriad;
    } else if (shape_tok == "3c") {
        shape = MotifShape::ClosedTriad;
    } else if (shape_tok == "4o") {
        shape = MotifShape::OpenStar4;
    } else {
        throw SchemaError("unknown motif shape in dim code: " + code);
    }
    return fraction(shape, k);
}

void MotifSchema::validate() const {
    if (dims.size() < 2) throw SchemaError("schema needs at least 2 dimensions");
    if (dims[0].kind != MotifDim::Kind::EgoTreatment) {
        throw SchemaError("schema dimension 0 must be the ego treatment (Z)");
    }
    for (std::size_t i = 1; i < dims.size(); ++i) {
        if (dims[i].kind == MotifDim::Kind::EgoTreatment) {
            throw SchemaError("ego treatment may appear only as dimension 0");
        }
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        for (std::size_t j = i + 1; j < dims.size(); ++j) {
            if (dims[i] == dims[j]) throw SchemaError("duplicate schema dim: " + dims[i].code());
        }
    }
}

void MotifSchema::validate_for(const Graph& g) const {
    validate();
    for (const auto& d : dims) {
        if (d.kind == MotifDim::Kind::AttrFraction && !g.has_attribute(d.attr_column)) {
            throw SchemaError("schema references missing attribute column: " + d.attr_column);
        }
    }
}

std::vector<std::string> MotifSchema::codes() const {
    std::vector<std::string> out;
    out.reserve(dims.size());
    for (const auto& d : dims) out.push_back(d.code());
    return out;
}

int MotifSchema::index_of(const std::string& code) const {
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i].code() == code) return static_cast<int>(i);
    }
    return -1;
}

MotifSchema MotifSchema::from_codes(const std::vector<std::string>& codes) {
    MotifSchema s;
    s.dims.reserve(codes.size());
    for (const auto& c : codes) s.dims.push_back(MotifDim::parse(c));
    s.validate();
    return s;
}

MotifSchema MotifSchema::standard(bool with_attr_dims) {
    MotifSchema s;
    s.dims = {
        MotifDim::ego(),
        MotifDim::fraction(MotifShape::Dyad, 1),
        MotifDim::fraction(MotifShape::OpenTriad, 0),
        MotifDim::fraction(MotifShape::OpenTriad, 2),
        MotifDim::fraction(MotifShape::ClosedTriad, 0),
        MotifDim::fraction(MotifShape::ClosedTriad, 2),
        MotifDim::fraction(MotifShape::OpenStar4, 0),
        MotifDim::fraction(MotifShape::OpenStar4, 3),
    };
    if (with_attr_dims) {
        s.dims.push_back(MotifDim::attr_fraction(1.0));
        s.dims.push_back(MotifDim::attr_fraction(0.0));
    }
    return s;
}

std::int64_t MotifCounts::count_for(const MotifSchema& schema, std::size_t dim_index) const {
    const MotifDim& d = schema.dims[dim_index];
    switch (d.kind) {
        case MotifDim::Kind::EgoTreatment:
            throw SchemaError("ego dimension has no motif count");
        case MotifDim::Kind::MotifFraction:
            switch (d.shape) {
                case MotifShape::Dyad: return dyad[static_cast<std::size_t>(d.treated_count)];
                case MotifShape::OpenTriad:
                    return open_triad[static_cast<std::size_t>(d.treated_count)];
                case MotifShape::ClosedTriad:
                    return closed_triad[static_cast<std::size_t>(d.treated_count)];
                case MotifShape::OpenStar4:
                    return star4[static_cast<std::size_t>(d.treated_count)];
            }
            break;
        case MotifDim::Kind::AttrFraction: {
            std::size_t slot = 0;
            for (std::size_t i = 1; i < dim_index; ++i) {
                if (schema.dims[i].kind == MotifDim::Kind::AttrFraction) ++slot;
            }
            return attr[slot].treated;
        }
    }
    return 0;
}

std::int64_t MotifCounts::total_for(const MotifSchema& schema, std::size_t dim_index) const {
    const MotifDim& d = schema.dims[dim_index];
    switch (d.kind) {
        case MotifDim::Kind::EgoTreatment:
            throw SchemaError("ego dimension has no motif total");
        case MotifDim::Kind::MotifFraction:
            switch (d.shape) {
                case MotifShape::Dyad: return dyad_total;
                case MotifShape::OpenTriad: return open_triad_total;
                case MotifShape::ClosedTriad: return closed_triad_total;
                case MotifShape::OpenStar4: return star4_total;
            }
            break;
        case MotifDim::Kind::AttrFraction: {
            std::size_t slot = 0;
            for (std::size_t i = 1; i < dim_index; ++i) {
                if (schema.dims[i].kind == MotifDim::Kind::AttrFraction) ++slot;
            }
            return attr[slot].total;
        }
    }
    return 0;
}

ReferenceRepresentations reference_representations(const MotifSchema& schema) {
    schema.validate();
    ReferenceRepresentations refs;
    refs.r1.resize(schema.size());
    refs.r0.resize(schema.size());
    for (std::size_t m = 0; m < schema.size(); ++m) {
        const MotifDim& d = schema.dims[m];
        if (d.kind == MotifDim::Kind::EgoTreatment) {
            refs.r1[m] = 1.0;
            refs.r0[m] = 0.0;
            continue;
        }
        const int full = d.kind == MotifDim::Kind::AttrFraction ? 1 : non_ego_count(d.shape);
        const int k = d.kind == MotifDim::Kind::AttrFraction ? 1 : d.treated_count;
        if (k == full) {
            refs.r1[m] = 1.0;
            refs.r0[m] = 0.0;
        } else if (k == 0) {
            refs.r1[m] = 0.0;
            refs.r0[m] = 1.0;
        } else {
            throw SchemaError(
                "dim " + d.code() +
                " counts a mixed treatment pattern and has no all-treated/all-control "
                "reference value; drop it from gate estimation or supply explicit references");
        }
    }
    return refs;
}

std::vector<double> representation_row_from_counts(const MotifCounts& counts, int z_i,
                                                   const MotifSchema& schema,
                                                   std::span<const double> u) {
    if (u.size() + 1 != schema.size()) {
        throw ArgumentError("representation row needs one U entry per non-ego dim");
    }
    std::vector<double> row(schema.size());
    row[0] = static_cast<double>(z_i);
    for (std::size_t m = 1; m < schema.size(); ++m) {
        const double count = static_cast<double>(counts.count_for(schema, m));
        const double total = static_cast<double>(counts.total_for(schema, m));
        row[m] = (count + u[m - 1]) / (total + 1.0);
    }
    return row;
}

namespace {

struct NodePlanBuf {
    std::vector<NodeId> nbrs;
    std::vector<std::uint16_t> edges;
    std::vector<std::uint16_t> tris;
    bool sampled = false;
};

void build_node_plan(const Graph& g, NodeId i, const SamplingConfig& sampling,
                     bool with_triangles, NodePlanBuf& out) {
    out.nbrs.clear();
    out.edges.clear();
    out.tris.clear();
    out.sampled = false;

    const auto full = g.neighbors(i);
    if (sampling.max_exact_degree >= 0 &&
        full.size() > static_cast<std::size_t>(sampling.max_exact_degree)) {
        // Uniform sample without replacement, fixed per (sampling seed, node).
        std::vector<NodeId> pool(full.begin(), full.end());
        rng::Stream stream(rng::derive(sampling.seed, static_cast<std::uint64_t>(i)));
        const std::size_t want = std::min<std::size_t>(
            pool.size(), static_cast<std::size_t>(std::max(1, sampling.sample_size)));
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(stream.next_below(pool.size() - k));
            std::swap(pool[k], pool[j]);
        }
        pool.resize(want);
        std::sort(pool.begin(), pool.end());
        out.nbrs = std::move(pool);
        out.sampled = out.nbrs.size() < full.size();
    } else {
        out.nbrs.assign(full.begin(), full.end());
    }

    const std::size_t d = out.nbrs.size();
    if (d < 2) return;

    // Edges among neighbors, as local index pairs (la < lb). Each neighbor's
    // adjacency is merged against the sorted neighbor list.
    for (std::size_t la = 0; la < d; ++la) {
        const auto na = g.neighbors(out.nbrs[la]);
        std::size_t pa = 0, pb = la + 1;
        while (pa < na.size() && pb < d) {
            if (na[pa] < out.nbrs[pb]) {
                ++pa;
            } else if (na[pa] > out.nbrs[pb]) {
                ++pb;
            } else {
                out.edges.push_back(static_cast<std::uint16_t>(la));
                out.edges.push_back(static_cast<std::uint16_t>(pb));
                ++pa;
                ++pb;
            }
        }
    }

    if (!with_triangles || out.edges.size() < 6 || d < 3) return;

    std::vector<std::vector<std::uint16_t>> ladj(d);
    for (std::size_t e = 0; e < out.edges.size(); e += 2) {
        ladj[out.edges[e]].push_back(out.edges[e + 1]);
        ladj[out.edges[e + 1]].push_back(out.edges[e]);
    }
    for (auto& lst : ladj) std::sort(lst.begin(), lst.end());
    for (std::size_t e = 0; e < out.edges.size(); e += 2) {
        const std::uint16_t a = out.edges[e];
        const std::uint16_t b = out.edges[e + 1];
        const auto& na = ladj[a];
        const auto& nb = ladj[b];
        std::size_t pa = 0, pb = 0;
        while (pa < na.size() && pb < nb.size()) {
            if (na[pa] < nb[pb]) {
                ++pa;
            } else if (na[pa] > nb[pb]) {
                ++pb;
            } else {
                if (na[pa] > b) {
                    out.tris.push_back(a);
                    out.tris.push_back(b);
                    out.tris.push_back(na[pa]);
                }
                ++pa;
                ++pb;
            }
        }
    }
}

inline std::int64_t choose2(std::int64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }
inline std::int64_t choose3(std::int64_t n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; }

}  // namespace

MotifCountingPlan::MotifCountingPlan(const Graph& g, const SamplingConfig& sampling,
                                     bool with_triangles)
    : with_triangles_(with_triangles) {
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    std::vector<NodePlanBuf> bufs(n);
    parallel_for(n, [&](std::size_t i) {
        build_node_plan(g, static_cast<NodeId>(i), sampling, with_triangles, bufs[i]);
    });

    nbr_off_.resize(n + 1, 0);
    edge_off_.resize(n + 1, 0);
    tri_off_.resize(n + 1, 0);
    sampled_.resize(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        nbr_off_[i + 1] = nbr_off_[i] + static_cast<std::int64_t>(bufs[i].nbrs.size());
        edge_off_[i + 1] = edge_off_[i] + static_cast<std::int64_t>(bufs[i].edges.size());
        tri_off_[i + 1] = tri_off_[i] + static_cast<std::int64_t>(bufs[i].tris.size());
        sampled_[i] = bufs[i].sampled ? 1 : 0;
    }
    nbrs_.resize(static_cast<std::size_t>(nbr_off_.back()));
    edges_.resize(static_cast<std::size_t>(edge_off_.back()));
    tris_.resize(static_cast<std::size_t>(tri_off_.back()));
    parallel_for(n, [&](std::size_t i) {
        std::copy(bufs[i].nbrs.begin(), bufs[i].nbrs.end(),
                  nbrs_.begin() + nbr_off_[i]);
        std::copy(bufs[i].edges.begin(), bufs[i].edges.end(),
                  edges_.begin() + edge_off_[i]);
        std::copy(bufs[i].tris.begin(), bufs[i].tris.end(), tris_.begin() + tri_off_[i]);
    });
}

std::span<const NodeId> MotifCountingPlan::node_neighbors(NodeId i) const {
    const auto idx = static_cast<std::size_t>(i);
    return {nbrs_.data() + nbr_off_[idx],
            static_cast<std::size_t>(nbr_off_[idx + 1] - nbr_off_[idx])};
}

std::span<const std::uint16_t> MotifCountingPlan::node_edges(NodeId i) const {
    const auto idx = static_cast<std::size_t>(i);
    return {edges_.data() + edge_off_[idx],
            static_cast<std::size_t>(edge_off_[idx + 1] - edge_off_[idx])};
}

std::span<const std::uint16_t> MotifCountingPlan::node_triangles(NodeId i) const {
    const auto idx = static_cast<std::size_t>(i);
    return {tris_.data() + tri_off_[idx],
            static_cast<std::size_t>(tri_off_[idx + 1] - tri_off_[idx])};
}

RepresentationBuilder::RepresentationBuilder(const Graph& g, MotifSchema schema,
                                             SamplingConfig sampling)
    : g_(&g), schema_(std::move(schema)), sampling_(sampling) {
    schema_.validate_for(g);
    if (sampling_.max_exact_degree < 2) {
        throw ArgumentError("sampling.max_exact_degree must be >= 2");
    }
    for (std::size_t m = 0; m < schema_.size(); ++m) {
        const MotifDim& d = schema_.dims[m];
        if (d.kind == MotifDim::Kind::MotifFraction && d.shape == MotifShape::OpenStar4) {
            need_star4_ = true;
        }
        if (d.kind == MotifDim::Kind::AttrFraction) {
            attr_columns_.push_back(g.attribute(d.attr_column));
            attr_values_.push_back(d.attr_value);
            attr_dim_index_.push_back(m);
        }
    }
    plan_ = MotifCountingPlan(g, sampling_, need_star4_);
}

MotifCounts RepresentationBuilder::counts(NodeId i, std::span<const std::uint8_t> z) const {
    if (i < 0 || i >= g_->node_count()) {
        throw ArgumentError("motif counts: node " + std::to_string(i) + " out of range");
    }
    if (z.size() != static_cast<std::size_t>(g_->node_count())) {
        throw ArgumentError("assignment length does not match graph node count");
    }

    MotifCounts c;
    c.sampled = plan_.is_sampled(i);
    const auto nbrs = plan_.node_neighbors(i);
    const auto d = static_cast<std::int64_t>(nbrs.size());

    std::int64_t t = 0;
    for (const NodeId v : nbrs) t += z[static_cast<std::size_t>(v)];
    const std::int64_t ctrl = d - t;

    c.dyad_total = d;
    c.dyad[1] = t;
    c.dyad[0] = ctrl;

    const auto edges = plan_.node_edges(i);
    for (std::size_t e = 0; e < edges.size(); e += 2) {
        const int k = z[static_cast<std::size_t>(nbrs[edges[e]])] +
                      z[static_cast<std::size_t>(nbrs[edges[e + 1]])];
        ++c.closed_triad[static_cast<std::size_t>(k)];
    }
    c.closed_triad_total = static_cast<std::int64_t>(edges.size() / 2);
    c.open_triad[2] = choose2(t) - c.closed_triad[2];
    c.open_triad[1] = t * ctrl - c.closed_triad[1];
    c.open_triad[0] = choose2(ctrl) - c.closed_triad[0];
    c.open_triad_total = choose2(d) - c.closed_triad_total;

    if (need_star4_) {
        // Independent neighbor triples by treated count, via inclusion-
        // exclusion over edges, wedges, and triangles of the neighbor graph.
        const std::size_t dn = nbrs.size();
        std::array<std::int64_t, 4> tri{};
        const auto tris = plan_.node_triangles(i);
        for (std::size_t e = 0; e < tris.size(); e += 3) {
            const int k = z[static_cast<std::size_t>(nbrs[tris[e]])] +
                          z[static_cast<std::size_t>(nbrs[tris[e + 1]])] +
                          z[static_cast<std::size_t>(nbrs[tris[e + 2]])];
            ++tri[static_cast<std::size_t>(k)];
        }
        std::vector<std::int32_t> deg_h(dn, 0), deg_t(dn, 0);
        std::int64_t m_tt = c.closed_triad[2], m_tc = c.closed_triad[1], m_cc = c.closed_triad[0];
        for (std::size_t e = 0; e < edges.size(); e += 2) {
            const std::uint16_t a = edges[e], b = edges[e + 1];
            const int za = z[static_cast<std::size_t>(nbrs[a])];
            const int zb = z[static_cast<std::size_t>(nbrs[b])];
            ++deg_h[a];
            ++deg_h[b];
            deg_t[a] += zb;
            deg_t[b] += za;
        }
        std::array<std::int64_t, 4> wedge{};
        for (std::size_t v = 0; v < dn; ++v) {
            const std::int64_t nt = deg_t[v];
            const std::int64_t nc = deg_h[v] - deg_t[v];
            const int zv = z[static_cast<std::size_t>(nbrs[v])];
            wedge[static_cast<std::size_t>(zv + 2)] += choose2(nt);
            wedge[static_cast<std::size_t>(zv + 1)] += nt * nc;
            wedge[static_cast<std::size_t>(zv + 0)] += choose2(nc);
        }
        c.star4[3] = choose3(t) - m_tt * std::max<std::int64_t>(t - 2, 0) + wedge[3] - tri[3];
        c.star4[2] = choose2(t) * ctrl - (m_tt * ctrl + m_tc * std::max<std::int64_t>(t - 1, 0)) +
                     wedge[2] - tri[2];
        c.star4[1] = t * choose2(ctrl) -
                     (m_cc * t + m_tc * std::max<std::int64_t>(ctrl - 1, 0)) + wedge[1] - tri[1];
        c.star4[0] =
            choose3(ctrl) - m_cc * std::max<std::int64_t>(ctrl - 2, 0) + wedge[0] - tri[0];
        c.star4_total = c.star4[0] + c.star4[1] + c.star4[2] + c.star4[3];
    }

    c.attr.resize(attr_columns_.size());
    for (std::size_t k = 0; k < attr_columns_.size(); ++k) {
        const auto col = attr_columns_[k];
        const double want = attr_values_[k];
        std::int64_t total = 0, treated = 0;
        for (const NodeId v : nbrs) {
            if (col[static_cast<std::size_t>(v)] == want) {
                ++total;
                treated += z[static_cast<std::size_t>(v)];
            }
        }
        c.attr[k] = {treated, total};
    }
    return c;
}

void RepresentationBuilder::row_into(NodeId i, std::span<const std::uint8_t> z,
                                     std::uint64_t u_seed, double* out) const {
    const MotifCounts c = counts(i, z);
    out[0] = static_cast<double>(z[static_cast<std::size_t>(i)]);
    for (std::size_t m = 1; m < schema_.size(); ++m) {
        const double u = rng::uniform01(rng::derive(u_seed, static_cast<std::uint64_t>(i), m));
        const double count = static_cast<double>(c.count_for(schema_, m));
        const double total = static_cast<double>(c.total_for(schema_, m));
        out[m] = (count + u) / (total + 1.0);
    }
}

RepresentationMatrix RepresentationBuilder::build(const AssignmentVector& z,
                                                  std::uint64_t u_seed) const {
    const std::size_t n = static_cast<std::size_t>(g_->node_count());
    if (z.z.size() != n) throw ArgumentError("assignment length does not match graph");
    RepresentationMatrix rep;
    rep.n = n;
    rep.m = schema_.size();
    rep.schema = schema_;
    rep.seed = u_seed;
    rep.values.resize(n * rep.m);
    rep.u.resize(n * (rep.m - 1));
    parallel_for(n, [&](std::size_t i) {
        row_into(static_cast<NodeId>(i), z.z, u_seed, rep.values.data() + i * rep.m);
        for (std::size_t m = 1; m < rep.m; ++m) {
            rep.u[i * (rep.m - 1) + (m - 1)] = rng::uniform01(rng::derive(u_seed, i, m));
        }
    });
    return rep;
}

MotifCounts count_causal_motifs(const Graph& g, NodeId i, const AssignmentVector& z,
                                const MotifSchema& schema, const SamplingConfig& sampling) {
    RepresentationBuilder builder(g, schema, sampling);
    return builder.counts(i, z.z);
}

RepresentationMatrix build_representation_matrix(const Graph& g, const AssignmentVector& z,
                                                 const MotifSchema& schema, std::uint64_t seed,
                                                 const SamplingConfig& sampling) {
    RepresentationBuilder builder(g, schema, sampling);
    return builder.build(z, seed);
}

}  // namespace cnm
