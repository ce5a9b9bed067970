#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "iodetect/clustering.hpp"

namespace iodetect {

using NodeId = ClusterId;

/// Undirected simple graph over clusters; an edge joins two clusters that
/// hold consecutively collected fingerprints.
class TransitionGraph {
 public:
  TransitionGraph() = default;

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }
  const std::vector<NodeId>& neighbors(NodeId x) const { return adjacency_.at(x); }
  std::size_t degree(NodeId x) const { return neighbors(x).size(); }
  std::size_t weight(NodeId x) const { return members_.at(x).size(); }
  const std::vector<FpIndex>& members(NodeId x) const { return members_.at(x); }

  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId u = 0; u < node_count(); ++u)
      for (NodeId v : adjacency_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  /// Nodes within `hops` of `x`, grouped by BFS layer (layer 0 is {x}).
  std::vector<std::vector<NodeId>> layers(NodeId x, std::size_t hops) const {
    if (x >= node_count()) throw NodeRangeError("node " + std::to_string(x) + " out of range");
    std::vector<std::vector<NodeId>> out{{x}};
    std::vector<char> seen(node_count(), 0);
    seen[x] = 1;
    for (std::size_t d = 1; d <= hops; ++d) {
      std::vector<NodeId> next;
      for (NodeId u : out.back())
        for (NodeId v : adjacency_[u])
          if (!seen[v]) {
            seen[v] = 1;
            next.push_back(v);
          }
      if (next.empty()) break;
      out.push_back(std::move(next));
    }
    return out;
  }

  /// N_x(d): every node reachable from `x` in at most `hops` edges, ascending.
  std::vector<NodeId> neighborhood(NodeId x, std::size_t hops) const {
    std::vector<NodeId> out;
    for (const auto& layer : layers(x, hops)) out.insert(out.end(), layer.begin(), layer.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  friend TransitionGraph build_graph(const ClusterAssignment&, const FingerprintMatrix&, std::optional<std::int64_t>);

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<FpIndex>> members_;
  std::size_t edges_ = 0;
};

/// Consecutive pairs more than `max_gap_ms` apart contribute no edge when the
/// gap is set.
inline TransitionGraph build_graph(const ClusterAssignment& assignment, const FingerprintMatrix& m,
                                   std::optional<std::int64_t> max_gap_ms = std::nullopt) {
  const std::size_t t = m.scan_count();
  if (assignment.cluster_of.size() != t)
    throw CoverageError("assignment covers " + std::to_string(assignment.cluster_of.size()) + " of " +
                        std::to_string(t) + " fingerprints");
  TransitionGraph g;
  g.members_ = assignment.members;
  std::size_t covered = 0;
  for (const auto& mem : g.members_) covered += mem.size();
  if (covered != t) throw CoverageError("cluster member lists do not partition the fingerprints");

  std::vector<std::set<NodeId>> adj(g.members_.size());
  for (std::size_t i = 1; i < t; ++i) {
    const NodeId u = assignment.cluster_of[i - 1];
    const NodeId v = assignment.cluster_of[i];
    if (u == v) continue;
    if (max_gap_ms && m.timestamps_ms[i] - m.timestamps_ms[i - 1] > *max_gap_ms) continue;
    adj[u].insert(v);
    adj[v].insert(u);
  }
  g.adjacency_.resize(adj.size());
  for (std::size_t u = 0; u < adj.size(); ++u) {
    g.adjacency_[u].assign(adj[u].begin(), adj[u].end());
    g.edges_ += adj[u].size();
  }
  g.edges_ /= 2;
  return g;
}

/// Edge list, one `u v` pair per line with u < v.
inline void write_edges(std::ostream& out, const TransitionGraph& g) {
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

/// Node table `id weight size`: weight is the fingerprint count, size the
/// number of distinct APs seen by the node's fingerprints.
inline void write_nodes(std::ostream& out, const TransitionGraph& g, const FingerprintMatrix& m) {
  out << "id weight size\n";
  for (NodeId x = 0; x < g.node_count(); ++x) {
    std::set<ApId> aps;
    for (FpIndex i : g.members(x))
      for (const auto& r : m.fingerprints[i].readings) aps.insert(r.ap);
    out << x << ' ' << g.weight(x) << ' ' << aps.size() << '\n';
  }
}

}  // namespace iodetect
