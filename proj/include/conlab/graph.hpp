#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <queue>
#include <string>
#include <vector>

#include "conlab/errors.hpp"

namespace conlab {

/// Weighted directed edge: agent `target` receives the state of agent
/// `source` with weight a_{target,source} = weight.
struct Edge {
  int source = 0;
  int target = 0;
  double weight = 1.0;
};

/// Directed communication topology over M+1 leaders and N followers.
///
/// Nodes carry user-facing ids 0..node_count-1. Internally leaders are packed
/// first (in the order listed) and followers after them (ascending id), so
/// that the Laplacian blocks and all stacked state vectors share one layout.
/// Immutable after construction.
class DirectedGraph {
 public:
  DirectedGraph(int node_count, std::vector<int> leaders, std::vector<Edge> edges)
      : node_count_(node_count), leaders_(std::move(leaders)), edges_(std::move(edges)) {
    validate();
    build_index();
  }

  int node_count() const { return node_count_; }
  int leader_count() const { return static_cast<int>(leaders_.size()); }
  int follower_count() const { return node_count_ - leader_count(); }

  /// Leader user ids, in declaration order.
  const std::vector<int>& leaders() const { return leaders_; }
  /// Follower user ids, ascending.
  const std::vector<int>& followers() const { return followers_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_leader(int user_id) const {
    return std::find(leaders_.begin(), leaders_.end(), user_id) != leaders_.end();
  }

  /// Internal index (leaders first, followers second) of a user node id.
  int internal_index(int user_id) const { return to_internal_[static_cast<size_t>(user_id)]; }
  /// User node id of an internal index.
  int user_id(int internal) const { return to_user_[static_cast<size_t>(internal)]; }

  /// Adjacency matrix in internal ordering: a(i,j) = weight of edge j -> i.
  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(node_count_, node_count_);
    for (const Edge& e : edges_)
      a(internal_index(e.target), internal_index(e.source)) = e.weight;
    return a;
  }

 private:
  void validate() const {
    if (node_count_ < 1) throw InvalidGraph("node_count must be positive");
    if (leaders_.empty()) throw InvalidGraph("at least one leader is required");
    std::vector<int> seen_leaders;
    for (int l : leaders_) {
      if (l < 0 || l >= node_count_)
        throw InvalidGraph("leader index " + std::to_string(l) + " out of range");
      if (std::find(seen_leaders.begin(), seen_leaders.end(), l) != seen_leaders.end())
        throw InvalidGraph("duplicate leader index " + std::to_string(l));
      seen_leaders.push_back(l);
    }
    std::vector<std::pair<int, int>> seen_edges;
    for (const Edge& e : edges_) {
      if (e.source < 0 || e.source >= node_count_ || e.target < 0 || e.target >= node_count_)
        throw InvalidGraph("edge (" + std::to_string(e.source) + "," + std::to_string(e.target) +
                           ") out of range");
      if (e.source == e.target)
        throw InvalidGraph("self-loop at node " + std::to_string(e.source));
      if (!(e.weight > 0.0))
        throw InvalidGraph("edge weight must be strictly positive");
      if (is_leader(e.target))
        throw InvalidGraph("leader " + std::to_string(e.target) + " cannot receive an edge");
      auto key = std::make_pair(e.source, e.target);
      if (std::find(seen_edges.begin(), seen_edges.end(), key) != seen_edges.end())
        throw InvalidGraph("duplicate edge (" + std::to_string(e.source) + "," +
                           std::to_string(e.target) + ")");
      seen_edges.push_back(key);
    }
  }

  void build_index() {
    to_internal_.assign(static_cast<size_t>(node_count_), -1);
    to_user_.clear();
    to_user_.reserve(static_cast<size_t>(node_count_));
    for (int l : leaders_) {
      to_internal_[static_cast<size_t>(l)] = static_cast<int>(to_user_.size());
      to_user_.push_back(l);
    }
    for (int v = 0; v < node_count_; ++v) {
      if (!is_leader(v)) {
        followers_.push_back(v);
        to_internal_[static_cast<size_t>(v)] = static_cast<int>(to_user_.size());
        to_user_.push_back(v);
      }
    }
  }

  int node_count_;
  std::vector<int> leaders_;
  std::vector<Edge> edges_;
  std::vector<int> followers_;
  std::vector<int> to_internal_;
  std::vector<int> to_user_;
};

/// Graph Laplacian partitioned into leader and follower blocks, in internal
/// ordering (leaders occupy the first rows/columns).
struct LaplacianPartition {
  Eigen::MatrixXd L;   ///< full (node_count x node_count), leader rows zero
  Eigen::MatrixXd L1;  ///< follower x follower block
  Eigen::MatrixXd L2;  ///< follower x leader coupling block
};

/// L_ii = sum_j a_ij, L_ij = -a_ij, blocks ordered leaders-first.
inline LaplacianPartition build_laplacian(const DirectedGraph& g) {
  const int total = g.node_count();
  const int nl = g.leader_count();
  const int nf = g.follower_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(total, total);
  for (const Edge& e : g.edges()) {
    const int i = g.internal_index(e.target);
    const int j = g.internal_index(e.source);
    L(i, i) += e.weight;
    L(i, j) -= e.weight;
  }
  LaplacianPartition lp;
  lp.L = L;
  lp.L1 = L.block(nl, nl, nf, nf);
  lp.L2 = L.block(nl, 0, nf, nl);
  return lp;
}

/// Per-follower leader-reachability verdict. For a single leader the overall
/// verdict is exactly the directed-spanning-tree condition; for multiple
/// leaders it is the "some leader reaches every follower" condition.
struct AssumptionReport {
  bool satisfied = false;
  std::vector<bool> follower_reached;  ///< internal follower order
  std::vector<int> unreachable;        ///< user ids of unreached followers
};

inline AssumptionReport check_assumption(const DirectedGraph& g) {
  const int total = g.node_count();
  std::vector<std::vector<int>> out(static_cast<size_t>(total));
  for (const Edge& e : g.edges())
    out[static_cast<size_t>(g.internal_index(e.source))].push_back(g.internal_index(e.target));

  std::vector<bool> visited(static_cast<size_t>(total), false);
  std::queue<int> frontier;
  for (int l = 0; l < g.leader_count(); ++l) {
    visited[static_cast<size_t>(l)] = true;
    frontier.push(l);
  }
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int w : out[static_cast<size_t>(v)]) {
      if (!visited[static_cast<size_t>(w)]) {
        visited[static_cast<size_t>(w)] = true;
        frontier.push(w);
      }
    }
  }

  AssumptionReport report;
  report.satisfied = true;
  report.follower_reached.resize(static_cast<size_t>(g.follower_count()));
  for (int f = 0; f < g.follower_count(); ++f) {
    const int internal = g.leader_count() + f;
    const bool reached = visited[static_cast<size_t>(internal)];
    report.follower_reached[static_cast<size_t>(f)] = reached;
    if (!reached) {
      report.satisfied = false;
      report.unreachable.push_back(g.user_id(internal));
    }
  }
  std::sort(report.unreachable.begin(), report.unreachable.end());
  return report;
}

}  // namespace conlab
