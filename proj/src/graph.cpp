#include "icms/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>

#include "icms/error.hpp"

namespace icms {

std::string_view node_role_name(NodeRole role) {
  switch (role) {
    case NodeRole::kFeature:
      return "feature";
    case NodeRole::kTreatment:
      return "treatment";
    case NodeRole::kOutcome:
      return "outcome";
  }
  return "feature";
}

NodeRole parse_node_role(std::string_view name) {
  if (name == "feature") return NodeRole::kFeature;
  if (name == "treatment") return NodeRole::kTreatment;
  if (name == "outcome") return NodeRole::kOutcome;
  fail(ErrorCode::kInvalidArgument, "unknown node role '" + std::string(name) + "'");
}

CausalDag::CausalDag(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].id == nodes_[i - 1].id) {
      fail(ErrorCode::kInvalidGraph, "duplicate node id " + std::to_string(nodes_[i].id));
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  parents_.assign(nodes_.size(), {});
  children_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!has_node(e.src) || !has_node(e.dst)) {
      fail(ErrorCode::kUnknownNode, "edge " + std::to_string(e.src) + "->" +
                                        std::to_string(e.dst) + " references a missing node");
    }
    if (e.src == e.dst) {
      fail(ErrorCode::kCycleDetected, "self-loop on node " + std::to_string(e.src));
    }
    if (i > 0 && edges_[i - 1].src == e.src && edges_[i - 1].dst == e.dst) {
      fail(ErrorCode::kInvalidGraph, "duplicate edge " + std::to_string(e.src) + "->" +
                                         std::to_string(e.dst));
    }
    children_[index_of(e.src)].push_back(e.dst);
    parents_[index_of(e.dst)].push_back(e.src);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());
}

bool CausalDag::has_node(NodeId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const Node& n, NodeId v) { return n.id < v; });
  return it != nodes_.end() && it->id == id;
}

std::size_t CausalDag::index_of(NodeId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const Node& n, NodeId v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) {
    fail(ErrorCode::kUnknownNode, "no node with id " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

const Node& CausalDag::node(NodeId id) const { return nodes_[index_of(id)]; }

const Node& CausalDag::node_by_name(std::string_view name) const {
  for (const auto& n : nodes_) {
    if (n.name == name) return n;
  }
  fail(ErrorCode::kUnknownNode, "no node named '" + std::string(name) + "'");
}

const std::vector<NodeId>& CausalDag::parents(NodeId id) const { return parents_[index_of(id)]; }
const std::vector<NodeId>& CausalDag::children(NodeId id) const {
  return children_[index_of(id)];
}

bool CausalDag::has_edge(NodeId src, NodeId dst) const {
  const auto& ch = children(src);
  return std::binary_search(ch.begin(), ch.end(), dst);
}

std::optional<double> CausalDag::weight(NodeId src, NodeId dst) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(src, dst),
                             [](const Edge& e, const std::pair<NodeId, NodeId>& k) {
                               return std::pair(e.src, e.dst) < k;
                             });
  if (it == edges_.end() || it->src != src || it->dst != dst) {
    fail(ErrorCode::kUnknownNode,
         "no edge " + std::to_string(src) + "->" + std::to_string(dst));
  }
  return it->weight;
}

namespace {

std::set<NodeId> reach(const CausalDag& dag, NodeId start,
                       const std::vector<NodeId>& (CausalDag::*next)(NodeId) const) {
  std::set<NodeId> seen;
  std::vector<NodeId> stack{start};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (NodeId w : (dag.*next)(v)) {
      if (seen.insert(w).second) stack.push_back(w);
    }
  }
  seen.erase(start);
  return seen;
}

}  // namespace

std::set<NodeId> CausalDag::descendants(NodeId id) const {
  return reach(*this, id, &CausalDag::children);
}

std::set<NodeId> CausalDag::ancestors(NodeId id) const {
  return reach(*this, id, &CausalDag::parents);
}

std::optional<NodeId> CausalDag::treatment() const {
  for (const auto& n : nodes_) {
    if (n.role == NodeRole::kTreatment) return n.id;
  }
  return std::nullopt;
}

std::optional<NodeId> CausalDag::outcome() const {
  for (const auto& n : nodes_) {
    if (n.role == NodeRole::kOutcome) return n.id;
  }
  return std::nullopt;
}

std::pair<NodeId, NodeId> CausalDag::require_roles() const {
  int treatments = 0;
  int outcomes = 0;
  for (const auto& n : nodes_) {
    treatments += n.role == NodeRole::kTreatment;
    outcomes += n.role == NodeRole::kOutcome;
  }
  if (treatments != 1 || outcomes != 1) {
    fail(ErrorCode::kInvalidGraph,
         "graph needs exactly one treatment and one outcome node (found " +
             std::to_string(treatments) + " and " + std::to_string(outcomes) + ")");
  }
  return {*treatment(), *outcome()};
}

bool CausalDag::has_all_weights() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.weight.has_value(); });
}

std::set<std::pair<NodeId, NodeId>> CausalDag::edge_set() const {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const auto& e : edges_) out.emplace(e.src, e.dst);
  return out;
}

std::vector<NodeId> topological_sort(const CausalDag& dag) {
  const std::size_t n = dag.num_nodes();
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& node : dag.nodes()) indegree[dag.index_of(node.id)] = dag.parents(node.id).size();
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& node : dag.nodes()) {
    if (indegree[dag.index_of(node.id)] == 0) ready.push(node.id);
  }
  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId c : dag.children(v)) {
      if (--indegree[dag.index_of(c)] == 0) ready.push(c);
    }
  }
  if (order.size() != n) fail(ErrorCode::kCycleDetected, "graph contains a directed cycle");
  return order;
}

bool is_acyclic(const CausalDag& dag) {
  try {
    topological_sort(dag);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCycleDetected) return false;
    throw;
  }
}

CausalDag with_edges(const CausalDag& dag, std::vector<Edge> edges) {
  return CausalDag(dag.nodes(), std::move(edges));
}

CausalDag mutilate(const CausalDag& dag, NodeId treatment) {
  if (!dag.has_node(treatment)) {
    fail(ErrorCode::kUnknownNode, "treatment node " + std::to_string(treatment) + " not in graph");
  }
  std::vector<Edge> kept;
  kept.reserve(dag.num_edges());
  for (const auto& e : dag.edges()) {
    if (e.dst != treatment) kept.push_back(e);
  }
  return with_edges(dag, std::move(kept));
}

bool d_separated(const CausalDag& dag, NodeId a, NodeId b, std::span<const NodeId> given) {
  if (a == b) fail(ErrorCode::kInvalidArgument, "d-separation query needs distinct endpoints");
  const std::size_t n = dag.num_nodes();
  const std::size_t ia = dag.index_of(a);
  const std::size_t ib = dag.index_of(b);
  std::vector<char> in_given(n, 0);
  for (NodeId z : given) in_given[dag.index_of(z)] = 1;
  if (in_given[ia] || in_given[ib]) {
    fail(ErrorCode::kInvalidArgument, "d-separation endpoints must not be conditioned on");
  }

  // Nodes that are in the conditioning set or have a descendant in it.
  std::vector<char> opens_collider(n, 0);
  {
    std::vector<NodeId> stack(given.begin(), given.end());
    for (NodeId z : given) opens_collider[dag.index_of(z)] = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId p : dag.parents(v)) {
        auto ip = dag.index_of(p);
        if (!opens_collider[ip]) {
          opens_collider[ip] = 1;
          stack.push_back(p);
        }
      }
    }
  }

  // visited[2*i + 0]: reached i travelling against an edge (from a child),
  // visited[2*i + 1]: reached i travelling along an edge (from a parent).
  std::vector<char> visited(2 * n, 0);
  std::deque<std::pair<NodeId, bool>> queue;
  queue.emplace_back(a, false);
  while (!queue.empty()) {
    auto [v, from_parent] = queue.front();
    queue.pop_front();
    const std::size_t iv = dag.index_of(v);
    if (visited[2 * iv + from_parent]) continue;
    visited[2 * iv + from_parent] = 1;
    if (v == b) return false;
    if (!from_parent) {
      if (in_given[iv]) continue;
      for (NodeId p : dag.parents(v)) queue.emplace_back(p, false);
      for (NodeId c : dag.children(v)) queue.emplace_back(c, true);
    } else {
      if (!in_given[iv]) {
        for (NodeId c : dag.children(v)) queue.emplace_back(c, true);
      }
      if (opens_collider[iv]) {
        for (NodeId p : dag.parents(v)) queue.emplace_back(p, false);
      }
    }
  }
  return true;
}

bool d_separated(const CausalDag& dag, const CiStatement& statement) {
  std::vector<NodeId> given(statement.given.begin(), statement.given.end());
  return d_separated(dag, statement.a, statement.b, given);
}

std::vector<CiStatement> local_markov_set(const CausalDag& dag) {
  std::vector<CiStatement> out;
  for (const auto& v : dag.nodes()) {
    const auto desc = dag.descendants(v.id);
    const auto& pa = dag.parents(v.id);
    for (const auto& u : dag.nodes()) {
      if (u.id == v.id || desc.contains(u.id)) continue;
      if (std::binary_search(pa.begin(), pa.end(), u.id)) continue;
      out.push_back(CiStatement{v.id, u.id, std::set<NodeId>(pa.begin(), pa.end())});
    }
  }
  return out;
}

}  // namespace icms
