#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "linkage/pairing.hpp"

namespace linkage {

/// Simple undirected graph over case ids; scores are retained as edge
/// metadata but communities are detected on presence/absence alone.
struct LinkGraph {
  std::vector<std::string> nodes;  // sorted, unique
  struct Edge {
    size_t a = 0, b = 0;  // indices into nodes, a < b
    double score = 0.0;
  };
  std::vector<Edge> edges;
};

/// Edge present iff score >= threshold; all cases appear as nodes,
/// including isolates.
LinkGraph build_graph(const PairwiseDataset& pairs, const std::vector<double>& scores,
                      double threshold);

struct Partition {
  std::map<std::string, int> assignment;  // node -> community id (0-based, dense)
  double resolution = 1.0;
  double modularity = 0.0;
};

/// Greedy two-phase modularity maximization with a resolution parameter.
/// Node visiting order is seeded, making runs deterministic; each
/// local-move pass never decreases modularity (asserted internally).
Partition louvain(const LinkGraph& graph, double resolution, uint64_t seed);

/// Resolution-scaled Newman modularity of an assignment; 0 for an edgeless
/// graph.
double modularity(const LinkGraph& graph, const std::map<std::string, int>& assignment,
                  double resolution);

/// Histogram of community sizes read as victims-per-suspect, ascending.
struct PrevalenceTable {
  std::vector<std::pair<size_t, size_t>> rows;  // (victims_per_suspect, suspect_count)
};

PrevalenceTable prevalence(const Partition& partition);

/// Counterfactual saving of method a over method b when each identified
/// suspect is assumed to commit one more offence of median value. Negative
/// when b identified more.
double savings_estimate(size_t identified_a, size_t identified_b, double median_loss);

void write_edges_csv(const LinkGraph& graph, const std::string& path);
/// DOT export with community-coloured nodes.
void write_dot(const LinkGraph& graph, const Partition* partition, const std::string& path);
void write_prevalence_csv(const PrevalenceTable& table, const std::string& path);
std::string prevalence_json(const PrevalenceTable& table);

}  // namespace linkage
