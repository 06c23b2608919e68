#include "cnm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cnm/errors.hpp"

namespace cnm::io {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file for digest: " + path);
    std::uint64_t h = 0xCBF29CE484222325ull;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CSV: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != table.header.size()) {
                throw ParseError(path + " line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(table.header.size()) +
                                 " cells");
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ParseError(path + ": empty CSV");
    return table;
}

std::int64_t parse_i64(const std::string& s, const std::string& context) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(context + ": expected integer, got \"" + s + "\"");
    }
    return v;
}

double parse_f64(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(context + ": expected number, got \"" + s + "\"");
    }
    return v;
}

// Aligns per-node CSV rows ("node_id,<value>") against the graph id map;
// reports missing and unknown ids.
std::vector<std::string> align_by_node(const CsvTable& table, const Graph& g,
                                       const std::string& path) {
    const std::size_t n = static_cast<std::size_t>(g.node_count());
    std::vector<std::string> out(n);
    std::vector<bool> covered(n, false);
    std::string unknown;
    std::size_t unknown_count = 0;
    for (const auto& row : table.rows) {
        const std::int64_t ext = parse_i64(row[0], path);
        const NodeId i = g.index_of(ext);
        if (i < 0) {
            ++unknown_count;
            if (unknown_count <= 10) {
                if (!unknown.empty()) unknown += ", ";
                unknown += std::to_string(ext);
            }
            continue;
        }
        covered[static_cast<std::size_t>(i)] = true;
        out[static_cast<std::size_t>(i)] = row[1];
    }
    if (unknown_count > 0) {
        throw ValidationError(path + ": " + std::to_string(unknown_count) +
                              " id(s) not present in the graph: " + unknown +
                              (unknown_count > 10 ? ", ..." : ""));
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
        throw ValidationError(path + ": missing " + std::to_string(missing_count) +
                              " graph id(s): " + missing + (missing_count > 10 ? ", ..." : ""));
    }
    return out;
}

}  // namespace

void write_assignment_csv(const std::string& path, const Graph& g, const AssignmentVector& z) {
    std::ostringstream out;
    out << "node_id,z\n";
    for (NodeId i = 0; i < g.node_count(); ++i) {
        out << g.external_id(i) << ',' << static_cast<int>(z.z[static_cast<std::size_t>(i)])
            << '\n';
    }
    write_text_file(path, out.str());
}

AssignmentVector read_assignment_csv(const std::string& path, const Graph& g) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "node_id") {
        throw ParseError(path + ": expected header node_id,z");
    }
    const auto cells = align_by_node(table, g, path);
    AssignmentVector z;
    z.z.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::int64_t v = parse_i64(cells[i], path);
        if (v != 0 && v != 1) throw ParseError(path + ": z values must be 0 or 1");
        z.z[i] = static_cast<std::uint8_t>(v);
    }
    z.design_tag = "file:" + path;
    return z;
}

void write_partition_csv(const std::string& path, const Graph& g, const ClusterPartition& part) {
    std::ostringstream out;
    out << "node_id,cluster\n";
    for (NodeId i = 0; i < g.node_count(); ++i) {
        out << g.external_id(i) << ',' << part.cluster_of[static_cast<std::size_t>(i)] << '\n';
    }
    write_text_file(path, out.str());
}

ClusterPartition read_partition_csv(const std::string& path, const Graph& g) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "node_id") {
        throw ParseError(path + ": expected header node_id,cluster");
    }
    const auto cells = align_by_node(table, g, path);
    ClusterPartition part;
    part.cluster_of.resize(cells.size());
    NodeId max_cluster = -1;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto c = static_cast<NodeId>(parse_i64(cells[i], path));
        if (c < 0) throw ParseError(path + ": cluster ids must be >= 0");
        part.cluster_of[i] = c;
        max_cluster = std::max(max_cluster, c);
    }
    part.cluster_count = max_cluster + 1;
    return part;
}

void write_outcomes_csv(const std::string& path, const Graph& g, std::span<const double> y) {
    std::ostringstream out;
    out << "node_id,y\n";
    for (NodeId i = 0; i < g.node_count(); ++i) {
        out << g.external_id(i) << ',' << format_double(y[static_cast<std::size_t>(i)]) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<double> read_outcomes_csv(const std::string& path, const Graph& g) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "node_id") {
        throw ParseError(path + ": expected header node_id,y");
    }
    const auto cells = align_by_node(table, g, path);
    std::vector<double> y(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) y[i] = parse_f64(cells[i], path);
    return y;
}

void write_attributes_csv(const std::string& path, const Graph& g) {
    std::ostringstream out;
    out << "node_id";
    for (const auto& name : g.attribute_names()) out << ',' << name;
    out << '\n';
    for (NodeId i = 0; i < g.node_count(); ++i) {
        out << g.external_id(i);
        for (const auto& name : g.attribute_names()) {
            out << ',' << format_double(g.attribute(name)[static_cast<std::size_t>(i)]);
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_representations_csv(const std::string& path, const Graph& g,
                               const RepresentationMatrix& reps) {
    std::ostringstream out;
    out << "node_id";
    for (const auto& code : reps.schema.codes()) out << ',' << code;
    out << '\n';
    for (std::size_t i = 0; i < reps.n; ++i) {
        out << g.external_id(static_cast<NodeId>(i));
        const auto row = reps.row(i);
        for (const double v : row) out << ',' << format_double(v);
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_probability_csv(const std::string& path, const Graph& g,
                           const ExposureProbabilityTable& table) {
    std::ostringstream out;
    out << "node_id";
    for (const auto& label : table.labels) out << ',' << label;
    out << '\n';
    for (std::size_t i = 0; i < table.n; ++i) {
        out << g.external_id(static_cast<NodeId>(i));
        for (std::size_t k = 0; k < table.labels.size(); ++k) {
            out << ',' << format_double(table.at(i, k));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_sweep_csv(const std::string& path, std::span<const KSweepRow> rows) {
    std::ostringstream out;
    out << "K,K_over_N,mu1,se1,pos1,mu0,se0,pos0,tau,se_tau\n";
    for (const auto& row : rows) {
        out << row.K << ',' << format_double(row.k_over_n) << ',' << format_double(row.mu1)
            << ',' << format_double(row.se1) << ',' << (row.pos1.ok ? 1 : 0) << ','
            << format_double(row.mu0) << ',' << format_double(row.se0) << ','
            << (row.pos0.ok ? 1 : 0) << ',' << format_double(row.tau) << ','
            << format_double(row.se_tau) << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace cnm::io
