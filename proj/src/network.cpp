#include "linkage/network.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "linkage/csv.hpp"
#include "linkage/rng.hpp"

#include "json.hpp"

namespace linkage {

LinkGraph build_graph(const PairwiseDataset& pairs, const std::vector<double>& scores,
                      double threshold) {
  if (scores.size() != pairs.rows.size())
    throw Error("build_graph: scores not aligned to pairs");
  std::set<std::string> ids;
  for (const auto& row : pairs.rows) {
    if (row.a.empty() || row.b.empty())
      throw Error("build_graph: synthetic rows carry no case ids");
    ids.insert(row.a);
    ids.insert(row.b);
  }
  LinkGraph g;
  g.nodes.assign(ids.begin(), ids.end());
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i]] = i;
  for (size_t i = 0; i < pairs.rows.size(); ++i) {
    if (scores[i] < threshold) continue;
    size_t a = index[pairs.rows[i].a];
    size_t b = index[pairs.rows[i].b];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    g.edges.push_back({a, b, scores[i]});
  }
  return g;
}

namespace {

// Weighted working graph used across Louvain levels. Self-loop weight is
// stored separately; a self-loop of weight w contributes 2w to its node's
// degree.
struct WorkGraph {
  size_t n = 0;
  double resolution = 1.0;
  std::vector<std::vector<std::pair<size_t, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double two_m = 0.0;

  void finalise() {
    degree.assign(n, 0.0);
    for (size_t v = 0; v < n; ++v) {
      for (const auto& [u, w] : adj[v]) {
        (void)u;
        degree[v] += w;
      }
      degree[v] += 2.0 * self_loop[v];
    }
    two_m = 0.0;
    for (double d : degree) two_m += d;
  }
};

double work_modularity(const WorkGraph& g, const std::vector<int>& community) {
  if (g.two_m == 0.0) return 0.0;
  std::unordered_map<int, double> in_c, tot_c;
  for (size_t v = 0; v < g.n; ++v) {
    tot_c[community[v]] += g.degree[v];
    in_c[community[v]] += 2.0 * g.self_loop[v];
    for (const auto& [u, w] : g.adj[v])
      if (community[u] == community[v]) in_c[community[v]] += w;
  }
  double q = 0.0;
  for (const auto& [c, in] : in_c) {
    const double tot = tot_c[c];
    q += in / g.two_m - g.resolution * (tot / g.two_m) * (tot / g.two_m);
  }
  return q;
}

// One pass of local moves; returns true if any node moved. Moves are taken
// only on strictly positive gain, so the pass never lowers modularity and
// the sweep terminates.
bool local_move_pass(const WorkGraph& g, std::vector<int>& community,
                     std::vector<double>& tot_c, Rng& rng) {
  std::vector<size_t> order(g.n);
  for (size_t v = 0; v < g.n; ++v) order[v] = v;
  seeded_shuffle(order, rng);

  bool moved = false;
  std::unordered_map<int, double> weight_to;
  for (size_t v : order) {
    weight_to.clear();
    for (const auto& [u, w] : g.adj[v]) weight_to[community[u]] += w;

    const int old_c = community[v];
    const double kv = g.degree[v];
    tot_c[size_t(old_c)] -= kv;

    // Gain of joining community c once v is detached:
    //   2*k_{v,c}/two_m - 2*resolution*tot_c*k_v/two_m^2.
    auto gain = [&](int c) {
      const auto it = weight_to.find(c);
      const double to_c = it == weight_to.end() ? 0.0 : it->second;
      return 2.0 * to_c / g.two_m -
             2.0 * g.resolution * tot_c[size_t(c)] * kv / (g.two_m * g.two_m);
    };

    int best_c = old_c;
    double best_gain = gain(old_c);
    for (const auto& [c, w] : weight_to) {
      (void)w;
      if (c == old_c) continue;
      const double cand = gain(c);
      if (cand > best_gain + 1e-12 ||
          (cand > best_gain - 1e-12 && best_c != old_c && c < best_c)) {
        best_gain = cand;
        best_c = c;
      }
    }
    tot_c[size_t(best_c)] += kv;
    if (best_c != old_c) {
      community[v] = best_c;
      moved = true;
    }
  }
  return moved;
}

WorkGraph from_link_graph(const LinkGraph& graph, double resolution) {
  WorkGraph g;
  g.n = graph.nodes.size();
  g.resolution = resolution;
  g.adj.assign(g.n, {});
  g.self_loop.assign(g.n, 0.0);
  for (const auto& e : graph.edges) {
    g.adj[e.a].emplace_back(e.b, 1.0);
    g.adj[e.b].emplace_back(e.a, 1.0);
  }
  g.finalise();
  return g;
}

}  // namespace

double modularity(const LinkGraph& graph, const std::map<std::string, int>& assignment,
                  double resolution) {
  WorkGraph g = from_link_graph(graph, resolution);
  std::vector<int> community(g.n);
  for (size_t v = 0; v < g.n; ++v) {
    auto it = assignment.find(graph.nodes[v]);
    if (it == assignment.end())
      throw Error("modularity: node '" + graph.nodes[v] + "' is unassigned");
    community[v] = it->second;
  }
  return work_modularity(g, community);
}

Partition louvain(const LinkGraph& graph, double resolution, uint64_t seed) {
  if (graph.nodes.empty()) throw Error("louvain: empty node set");
  if (!(resolution > 0.0)) throw Error("louvain: resolution must be positive");

  Partition out;
  out.resolution = resolution;

  if (graph.edges.empty()) {
    for (size_t v = 0; v < graph.nodes.size(); ++v) out.assignment[graph.nodes[v]] = int(v);
    out.modularity = 0.0;
    return out;
  }

  // node -> community, composed across levels
  std::vector<int> flat(graph.nodes.size());
  for (size_t v = 0; v < flat.size(); ++v) flat[v] = int(v);

  WorkGraph g = from_link_graph(graph, resolution);
  Rng rng(derive_seed(seed, "louvain"));
  while (true) {
    std::vector<int> community(g.n);
    std::vector<double> tot_c(g.n, 0.0);
    for (size_t v = 0; v < g.n; ++v) {
      community[v] = int(v);
      tot_c[v] = g.degree[v];
    }

    const double before = work_modularity(g, community);
    bool any_move = false;
    while (local_move_pass(g, community, tot_c, rng)) any_move = true;
    const double after = work_modularity(g, community);
    assert(after >= before - 1e-12);
    (void)before;
    (void)after;

    if (!any_move) break;

    std::unordered_map<int, int> dense;
    for (int c : community)
      if (!dense.count(c)) {
        const int next_id = int(dense.size());
        dense[c] = next_id;
      }
    for (auto& c : flat) c = dense[community[size_t(c)]];
    if (dense.size() == g.n) break;

    // Aggregate communities into super-nodes; intra-community weight (and
    // existing self-loops) become the super-node's self-loop.
    WorkGraph next;
    next.n = dense.size();
    next.resolution = resolution;
    next.adj.assign(next.n, {});
    next.self_loop.assign(next.n, 0.0);
    std::map<std::pair<size_t, size_t>, double> agg;
    for (size_t v = 0; v < g.n; ++v) {
      const size_t cv = size_t(dense[community[v]]);
      next.self_loop[cv] += g.self_loop[v];
      for (const auto& [u, w] : g.adj[v]) {
        if (v >= u) continue;  // visit each undirected edge once
        const size_t cu = size_t(dense[community[u]]);
        if (cv == cu) {
          next.self_loop[cv] += w;
        } else {
          const auto key = std::minmax(cv, cu);
          agg[{key.first, key.second}] += w;
        }
      }
    }
    for (const auto& [key, w] : agg) {
      next.adj[key.first].emplace_back(key.second, w);
      next.adj[key.second].emplace_back(key.first, w);
    }
    next.finalise();
    g = std::move(next);
  }

  // Dense final ids in node order.
  std::unordered_map<int, int> dense;
  for (size_t v = 0; v < graph.nodes.size(); ++v) {
    if (!dense.count(flat[v])) {
      const int next_id = int(dense.size());
      dense[flat[v]] = next_id;
    }
    out.assignment[graph.nodes[v]] = dense[flat[v]];
  }
  out.modularity = modularity(graph, out.assignment, resolution);
  return out;
}

PrevalenceTable prevalence(const Partition& partition) {
  std::map<int, size_t> sizes;
  for (const auto& [node, c] : partition.assignment) {
    (void)node;
    sizes[c]++;
  }
  std::map<size_t, size_t> hist;
  for (const auto& [c, size] : sizes) {
    (void)c;
    hist[size]++;
  }
  PrevalenceTable table;
  for (const auto& [victims, suspects] : hist) table.rows.emplace_back(victims, suspects);
  return table;
}

double savings_estimate(size_t identified_a, size_t identified_b, double median_loss) {
  if (median_loss < 0.0) throw Error("savings_estimate: loss must be non-negative");
  return (double(identified_a) - double(identified_b)) * median_loss;
}

void write_edges_csv(const LinkGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "case_a,case_b,score\n";
  for (const auto& e : graph.edges)
    out << csv_escape(graph.nodes[e.a]) << ',' << csv_escape(graph.nodes[e.b]) << ','
        << format_double(e.score) << '\n';
}

void write_dot(const LinkGraph& graph, const Partition* partition, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "graph linkage {\n  node [style=filled];\n";
  for (size_t v = 0; v < graph.nodes.size(); ++v) {
    out << "  \"" << graph.nodes[v] << "\"";
    if (partition) {
      const int c = partition->assignment.at(graph.nodes[v]);
      // 12-colour qualitative palette, cycled
      out << " [fillcolor=\"/set312/" << (c % 12) + 1 << "\"]";
    }
    out << ";\n";
  }
  for (const auto& e : graph.edges)
    out << "  \"" << graph.nodes[e.a] << "\" -- \"" << graph.nodes[e.b] << "\";\n";
  out << "}\n";
}

void write_prevalence_csv(const PrevalenceTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "victims_per_suspect,suspect_count\n";
  for (const auto& [v, s] : table.rows) out << v << ',' << s << '\n';
}

std::string prevalence_json(const PrevalenceTable& table) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [v, s] : table.rows)
    arr.push_back({{"victims_per_suspect", v}, {"suspect_count", s}});
  return arr.dump(2) + "\n";
}

}  // namespace linkage
