#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/exposure.hpp"
#include "cnm/graph.hpp"
#include "cnm/knn.hpp"
#include "cnm/motifs.hpp"

namespace cnm::io {

// Shortest round-trip decimal form; identical across runs.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a over file bytes, for manifest input digests.
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// CSV "node_id,z" keyed by external id.
void write_assignment_csv(const std::string& path, const Graph& g, const AssignmentVector& z);
AssignmentVector read_assignment_csv(const std::string& path, const Graph& g);

// CSV "node_id,cluster".
void write_partition_csv(const std::string& path, const Graph& g, const ClusterPartition& part);
ClusterPartition read_partition_csv(const std::string& path, const Graph& g);

// CSV "node_id,y".
void write_outcomes_csv(const std::string& path, const Graph& g, std::span<const double> y);
std::vector<double> read_outcomes_csv(const std::string& path, const Graph& g);

// CSV "node_id,<attr columns...>".
void write_attributes_csv(const std::string& path, const Graph& g);

// CSV "node_id,<dim codes...>".
void write_representations_csv(const std::string& path, const Graph& g,
                               const RepresentationMatrix& reps);

// CSV "node_id,<condition labels...>".
void write_probability_csv(const std::string& path, const Graph& g,
                           const ExposureProbabilityTable& table);

// CSV "K,K_over_N,mu1,se1,pos1,mu0,se0,pos0,tau,se_tau".
void write_sweep_csv(const std::string& path, std::span<const KSweepRow> rows);

}  // namespace cnm::io
