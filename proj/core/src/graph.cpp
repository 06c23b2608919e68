#include "cnm/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "cnm/errors.hpp"

namespace cnm {

namespace {

bool parse_int64(std::string_view tok, std::int64_t& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool parse_double(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_csv(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

Graph Graph::from_edges(NodeId node_count, std::vector<std::pair<NodeId, NodeId>> edges,
                        std::size_t* dropped_self_loops, std::size_t* dropped_duplicates) {
    Graph g;
    g.node_count_ = node_count;
    g.ext_ids_.resize(static_cast<std::size_t>(node_count));
    for (NodeId i = 0; i < node_count; ++i) {
        g.ext_ids_[static_cast<std::size_t>(i)] = i;
        g.ext_index_.emplace(i, i);
    }

    std::size_t self_loops = 0;
    for (auto& [u, v] : edges) {
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    std::vector<std::pair<NodeId, NodeId>> unique_edges;
    unique_edges.reserve(edges.size());
    std::size_t duplicates = 0;
    for (const auto& e : edges) {
        if (e.first == e.second) {
            ++self_loops;
            continue;
        }
        if (!unique_edges.empty() && unique_edges.back() == e) {
            ++duplicates;
            continue;
        }
        unique_edges.push_back(e);
    }
    if (dropped_self_loops) *dropped_self_loops = self_loops;
    if (dropped_duplicates) *dropped_duplicates = duplicates;

    std::vector<std::int64_t> deg(static_cast<std::size_t>(node_count) + 1, 0);
    for (const auto& [u, v] : unique_edges) {
        ++deg[static_cast<std::size_t>(u) + 1];
        ++deg[static_cast<std::size_t>(v) + 1];
    }
    g.offsets_.assign(static_cast<std::size_t>(node_count) + 1, 0);
    for (std::size_t i = 1; i < g.offsets_.size(); ++i) {
        g.offsets_[i] = g.offsets_[i - 1] + deg[i];
    }
    g.adj_.resize(static_cast<std::size_t>(g.offsets_.back()));
    std::vector<std::int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : unique_edges) {
        g.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
        g.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
    }
    // Insertion order above is sorted in u for the forward copies but not for
    // the reverse ones; sort each list.
    for (NodeId i = 0; i < node_count; ++i) {
        auto* first = g.adj_.data() + g.offsets_[static_cast<std::size_t>(i)];
        auto* last = g.adj_.data() + g.offsets_[static_cast<std::size_t>(i) + 1];
        std::sort(first, last);
    }
    return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

NodeId Graph::index_of(ExternalId ext) const {
    const auto it = ext_index_.find(ext);
    return it == ext_index_.end() ? NodeId{-1} : it->second;
}

bool Graph::has_attribute(const std::string& name) const {
    return std::find(attr_names_.begin(), attr_names_.end(), name) != attr_names_.end();
}

std::span<const double> Graph::attribute(const std::string& name) const {
    for (std::size_t c = 0; c < attr_names_.size(); ++c) {
        if (attr_names_[c] == name) return attr_columns_[c];
    }
    throw ValidationError("unknown attribute column: " + name);
}

Graph Graph::with_attribute(const std::string& name, std::vector<double> column) const {
    if (column.size() != static_cast<std::size_t>(node_count_)) {
        throw ArgumentError("attribute column length " + std::to_string(column.size()) +
                            " does not match node count " + std::to_string(node_count_));
    }
    Graph g = *this;
    for (std::size_t c = 0; c < g.attr_names_.size(); ++c) {
        if (g.attr_names_[c] == name) {
            g.attr_columns_[c] = std::move(column);
            return g;
        }
    }
    g.attr_names_.push_back(name);
    g.attr_columns_.push_back(std::move(column));
    return g;
}

Graph load_edge_list(std::istream& edges, std::istream* attrs, LoadStats* stats) {
    std::vector<ExternalId> ext_of_dense;
    std::unordered_map<ExternalId, NodeId> index;
    auto intern = [&](ExternalId ext) -> NodeId {
        const auto [it, inserted] = index.emplace(ext, static_cast<NodeId>(ext_of_dense.size()));
        if (inserted) ext_of_dense.push_back(ext);
        return it->second;
    };

    std::vector<std::pair<NodeId, NodeId>> edge_buf;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(edges, line)) {
        ++line_no;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::istringstream ls{std::string(sv)};
        std::string a, b, extra;
        if (!(ls >> a >> b)) {
            throw ParseError("edge list line " + std::to_string(line_no) +
                             ": expected two node ids, got \"" + std::string(sv) + "\"");
        }
        if (ls >> extra) {
            throw ParseError("edge list line " + std::to_string(line_no) +
                             ": trailing tokens after two node ids");
        }
        std::int64_t ua = 0, ub = 0;
        if (!parse_int64(a, ua) || !parse_int64(b, ub)) {
            throw ParseError("edge list line " + std::to_string(line_no) +
                             ": node ids must be integers, got \"" + std::string(sv) + "\"");
        }
        const NodeId du = intern(ua);  // keep first-appearance order
        const NodeId dv = intern(ub);
        edge_buf.emplace_back(du, dv);
    }

    // Attribute table: header "node_id,<col>,...", numeric cells. Rows keyed by
    // external id; ids unseen in the edge list become isolates.
    std::vector<std::string> attr_names;
    std::vector<std::pair<ExternalId, std::vector<double>>> attr_rows;
    if (attrs != nullptr) {
        std::string header;
        if (!std::getline(*attrs, header)) {
            throw ParseError("attribute table: missing header row");
        }
        std::vector<std::string_view> cells;
        split_csv(trim(header), cells);
        if (cells.empty() || trim(cells[0]) != "node_id") {
            throw ParseError("attribute table: first header column must be node_id");
        }
        for (std::size_t c = 1; c < cells.size(); ++c) {
            attr_names.emplace_back(trim(cells[c]));
        }
        std::size_t attr_line = 1;
        while (std::getline(*attrs, line)) {
            ++attr_line;
            const std::string_view sv = trim(line);
            if (sv.empty()) continue;
            split_csv(sv, cells);
            if (cells.size() != attr_names.size() + 1) {
                throw ParseError("attribute table line " + std::to_string(attr_line) +
                                 ": expected " + std::to_string(attr_names.size() + 1) +
                                 " cells, got " + std::to_string(cells.size()));
            }
            std::int64_t ext = 0;
            if (!parse_int64(trim(cells[0]), ext)) {
                throw ParseError("attribute table line " + std::to_string(attr_line) +
                                 ": node_id must be an integer");
            }
            std::vector<double> row(attr_names.size());
            for (std::size_t c = 0; c < attr_names.size(); ++c) {
                if (!parse_double(trim(cells[c + 1]), row[c])) {
                    throw ParseError("attribute table line " + std::to_string(attr_line) +
                                     ": non-numeric cell in column " + attr_names[c]);
                }
            }
            intern(ext);
            attr_rows.emplace_back(ext, std::move(row));
        }
    }

    std::size_t self_loops = 0, duplicates = 0;
    Graph g = Graph::from_edges(static_cast<NodeId>(ext_of_dense.size()), std::move(edge_buf),
                                &self_loops, &duplicates);
    if (stats) {
        stats->dropped_self_loops = self_loops;
        stats->dropped_duplicates = duplicates;
    }
    g.ext_ids_ = std::move(ext_of_dense);
    g.ext_index_ = std::move(index);

    if (attrs != nullptr) {
        const std::size_t n = static_cast<std::size_t>(g.node_count_);
        std::vector<std::vector<double>> columns(attr_names.size(), std::vector<double>(n, 0.0));
        std::vector<bool> covered(n, false);
        for (const auto& [ext, row] : attr_rows) {
            const NodeId i = g.index_of(ext);
            covered[static_cast<std::size_t>(i)] = true;
            for (std::size_t c = 0; c < row.size(); ++c) {
                columns[c][static_cast<std::size_t>(i)] = row[c];
            }
        }
        std::string missing;
        std::size_t missing_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!covered[i]) {
                ++missing_count;
                if (missing_count <= 10) {
                    if (!missing.empty()) missing += ", ";
                    missing += std::to_string(g.external_id(static_cast<NodeId>(i)));
                }
            }
        }
        if (missing_count > 0) {
            throw ValidationError("attribute table does not cover " +
                                  std::to_string(missing_count) +
                                  " graph node id(s): " + missing +
                                  (missing_count > 10 ? ", ..." : ""));
        }
        g.attr_names_ = std::move(attr_names);
        g.attr_columns_ = std::move(columns);
    }
    return g;
}

Graph load_edge_list_file(const std::string& edge_path, const std::string& attr_path,
                          LoadStats* stats) {
    std::ifstream edges(edge_path);
    if (!edges) throw ValidationError("cannot open edge list: " + edge_path);
    if (attr_path.empty()) return load_edge_list(edges, nullptr, stats);
    std::ifstream attrs(attr_path);
    if (!attrs) throw ValidationError("cannot open attribute table: " + attr_path);
    return load_edge_list(edges, &attrs, stats);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    for (NodeId u = 0; u < g.node_count(); ++u) {
        for (const NodeId v : g.neighbors(u)) {
            if (u < v) {
                out << g.external_id(u) << ' ' << g.external_id(v) << '\n';
            }
        }
    }
}

EgoNetwork ego_network(const Graph& g, NodeId i, int hop) {
    if (i < 0 || i >= g.node_count()) {
        throw ArgumentError("ego_network: node " + std::to_string(i) + " out of range");
    }
    if (hop < 0) throw ArgumentError("ego_network: hop must be >= 0");

    EgoNetwork ego;
    ego.center = i;
    ego.hop = hop;

    std::vector<NodeId> frontier{i};
    std::vector<bool> seen(static_cast<std::size_t>(g.node_count()), false);
    seen[static_cast<std::size_t>(i)] = true;
    ego.members.push_back(i);
    for (int h = 0; h < hop && !frontier.empty(); ++h) {
        std::vector<NodeId> next;
        for (const NodeId u : frontier) {
            for (const NodeId v : g.neighbors(u)) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = true;
                    next.push_back(v);
                    ego.members.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(ego.members.begin(), ego.members.end());

    for (const NodeId u : ego.members) {
        for (const NodeId v : g.neighbors(u)) {
            if (u < v && seen[static_cast<std::size_t>(v)]) {
                ego.induced_edges.emplace_back(u, v);
            }
        }
    }
    return ego;
}

int common_neighbor_count(const Graph& g, NodeId i, NodeId j) {
    if (i == j) throw ArgumentError("common_neighbor_count: i and j must differ");
    if (i < 0 || i >= g.node_count() || j < 0 || j >= g.node_count()) {
        throw ArgumentError("common_neighbor_count: node index out of range");
    }
    const auto a = g.neighbors(i);
    const auto b = g.neighbors(j);
    int count = 0;
    std::size_t pa = 0, pb = 0;
    while (pa < a.size() && pb < b.size()) {
        if (a[pa] < b[pb]) {
            ++pa;
        } else if (a[pa] > b[pb]) {
            ++pb;
        } else {
            const NodeId c = a[pa];
            if (c != i && c != j) ++count;
            ++pa;
            ++pb;
        }
    }
    return count;
}

double average_clustering_coefficient(const Graph& g) {
    if (g.node_count() == 0) return 0.0;
    double total = 0.0;
    for (NodeId i = 0; i < g.node_count(); ++i) {
        const auto nb = g.neighbors(i);
        const std::size_t d = nb.size();
        if (d < 2) continue;
        std::size_t closed = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const auto na = g.neighbors(nb[a]);
            std::size_t pa = 0, pb = a + 1;
            while (pa < na.size() && pb < d) {
                if (na[pa] < nb[pb]) {
                    ++pa;
                } else if (na[pa] > nb[pb]) {
                    ++pb;
                } else {
                    ++closed;
                    ++pa;
                    ++pb;
                }
            }
        }
        total += 2.0 * static_cast<double>(closed) / (static_cast<double>(d) * (d - 1));
    }
    return total / static_cast<double>(g.node_count());
}

}  // namespace cnm
