#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icms/dataset.hpp"

namespace icms {

using NodeId = std::int64_t;

enum class NodeRole { kFeature, kTreatment, kOutcome };

std::string_view node_role_name(NodeRole role);
NodeRole parse_node_role(std::string_view name);

struct Node {
  NodeId id = 0;
  std::string name;
  NodeRole role = NodeRole::kFeature;
  ColumnKind kind = ColumnKind::kContinuous;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  std::optional<double> weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Directed graph over typed nodes. Construction checks ids, endpoints,
// self-loops and duplicate edges; acyclicity is checked by topological_sort
// (and by from_json / the generators, which never hand out cyclic graphs).
// Immutable once built.
class CausalDag {
 public:
  CausalDag() = default;
  CausalDag(std::vector<Node> nodes, std::vector<Edge> edges);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  bool has_node(NodeId id) const;
  const Node& node(NodeId id) const;
  const Node& node_by_name(std::string_view name) const;
  // Dense index in [0, num_nodes) of a node; nodes are kept sorted by id.
  std::size_t index_of(NodeId id) const;

  // Sorted by ascending id.
  const std::vector<NodeId>& parents(NodeId id) const;
  const std::vector<NodeId>& children(NodeId id) const;
  bool has_edge(NodeId src, NodeId dst) const;
  std::optional<double> weight(NodeId src, NodeId dst) const;

  std::set<NodeId> descendants(NodeId id) const;  // excludes id itself
  std::set<NodeId> ancestors(NodeId id) const;    // excludes id itself

  std::optional<NodeId> treatment() const;
  std::optional<NodeId> outcome() const;
  // Throws kInvalidGraph unless exactly one treatment and one outcome exist.
  std::pair<NodeId, NodeId> require_roles() const;

  bool has_all_weights() const;
  std::set<std::pair<NodeId, NodeId>> edge_set() const;

  friend bool operator==(const CausalDag& a, const CausalDag& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Node> nodes_;  // sorted by id
  std::vector<Edge> edges_;  // sorted by (src, dst)
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
};

struct CiStatement {
  NodeId a = 0;
  NodeId b = 0;
  std::set<NodeId> given;

  friend bool operator==(const CiStatement&, const CiStatement&) = default;
};

// Kahn's algorithm; among ready nodes the smallest id goes first.
std::vector<NodeId> topological_sort(const CausalDag& dag);
bool is_acyclic(const CausalDag& dag);

// The interventional graph: every edge into `treatment` removed.
CausalDag mutilate(const CausalDag& dag, NodeId treatment);

// Standard d-separation via the reachable-set (Bayes-ball) procedure.
bool d_separated(const CausalDag& dag, NodeId a, NodeId b, std::span<const NodeId> given);
bool d_separated(const CausalDag& dag, const CiStatement& statement);

// v _||_ u | parents(v) for every non-descendant non-parent u of v.
// Ordered by (v, u) ascending.
std::vector<CiStatement> local_markov_set(const CausalDag& dag);

// Same nodes, edges replaced.
CausalDag with_edges(const CausalDag& dag, std::vector<Edge> edges);

}  // namespace icms
