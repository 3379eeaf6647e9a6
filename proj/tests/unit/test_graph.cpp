#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "icms/error.hpp"
#include "icms/graph.hpp"
#include "icms/rng.hpp"
#include "oracles.hpp"

using namespace icms;
using oracle::build;

namespace {

CausalDag roles_graph() {
  // X1=0, X2=1, T=2, Y=3
  std::vector<Node> nodes{{0, "X1", NodeRole::kFeature, ColumnKind::kContinuous},
                          {1, "X2", NodeRole::kFeature, ColumnKind::kContinuous},
                          {2, "T", NodeRole::kTreatment, ColumnKind::kBinary},
                          {3, "Y", NodeRole::kOutcome, ColumnKind::kContinuous}};
  return CausalDag(nodes, {{0, 2, 0.5}, {1, 2, 0.4}, {2, 3, 1.0}, {1, 3, -0.3}});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

bool is_valid_order(const CausalDag& g, const std::vector<NodeId>& order) {
  std::map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  if (pos.size() != g.num_nodes()) return false;
  for (const auto& e : g.edges())
    if (pos[e.src] >= pos[e.dst]) return false;
  return true;
}

}  // namespace

TEST(TopologicalSort, Chain) {
  EXPECT_EQ(topological_sort(build(3, {{0, 1}, {1, 2}})), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TopologicalSort, SingleNode) {
  EXPECT_EQ(topological_sort(build(1, {})), (std::vector<NodeId>{0}));
}

TEST(TopologicalSort, DiamondTieBreak) {
  const CausalDag g = build(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const auto order = topological_sort(g);
  EXPECT_EQ(order, (std::vector<NodeId>{0, 1, 2, 3}));
  // brute force: the other valid order exists, tie-break picks 1 first
  std::vector<NodeId> perm{0, 1, 2, 3};
  int valid = 0;
  do valid += is_valid_order(g, perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_EQ(valid, 2);
}

TEST(TopologicalSort, RejectsCycle) {
  const CausalDag g = build(3, {{0, 1}, {1, 2}, {2, 0}});
  EXPECT_FALSE(is_acyclic(g));
  EXPECT_EQ(code_of([&] { topological_sort(g); }), ErrorCode::kCycleDetected);
}

TEST(TopologicalSort, ValidOnEveryFourNodeDag) {
  for (const auto& g : oracle::all_dags(4)) EXPECT_TRUE(is_valid_order(g, topological_sort(g)));
}

TEST(Mutilate, RemovesTreatmentInEdges) {
  const CausalDag g = roles_graph();
  const CausalDag m = mutilate(g, 2);
  EXPECT_EQ(m.edge_set(), (std::set<std::pair<NodeId, NodeId>>{{2, 3}, {1, 3}}));
  EXPECT_EQ(m.nodes(), g.nodes());
  EXPECT_EQ(m.weight(1, 3), -0.3);
}

TEST(Mutilate, NoInEdgesIsIdentity) {
  const CausalDag g = build(3, {{0, 1}, {0, 2}});
  EXPECT_EQ(mutilate(g, 0), g);
}

TEST(Mutilate, UnknownTreatment) {
  EXPECT_EQ(code_of([] { mutilate(build(2, {}), 7); }), ErrorCode::kUnknownNode);
}

TEST(Mutilate, IdempotentAndDropsInDegree) {
  for (const auto& g : oracle::all_dags(4)) {
    for (const auto& n : g.nodes()) {
      const CausalDag once = mutilate(g, n.id);
      EXPECT_EQ(mutilate(once, n.id), once);
      EXPECT_EQ(once.num_edges(), g.num_edges() - g.parents(n.id).size());
    }
  }
}

TEST(DSeparation, ChainBlockedByMiddle) {
  const CausalDag g = build(3, {{0, 1}, {1, 2}});
  const std::vector<NodeId> m{1};
  EXPECT_TRUE(d_separated(g, 0, 2, m));
  EXPECT_FALSE(d_separated(g, 0, 2, {}));
}

TEST(DSeparation, Collider) {
  const CausalDag g = build(3, {{0, 1}, {2, 1}});
  const std::vector<NodeId> c{1};
  EXPECT_TRUE(d_separated(g, 0, 2, {}));
  EXPECT_FALSE(d_separated(g, 0, 2, c));
}

TEST(DSeparation, ColliderOpenedByDescendant) {
  const CausalDag g = build(4, {{0, 1}, {2, 1}, {1, 3}});
  const std::vector<NodeId> d{3};
  EXPECT_FALSE(d_separated(g, 0, 2, d));
}

TEST(DSeparation, RejectsBadQueries) {
  const CausalDag g = build(3, {{0, 1}});
  const std::vector<NodeId> self{0};
  EXPECT_EQ(code_of([&] { d_separated(g, 0, 0, {}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { d_separated(g, 0, 1, self); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { d_separated(g, 0, 9, {}); }), ErrorCode::kUnknownNode);
}

TEST(DSeparation, MatchesPathOracleOnFourNodes) {
  for (const auto& g : oracle::all_dags(4)) {
    for (NodeId a = 0; a < 4; ++a) {
      for (NodeId b = a + 1; b < 4; ++b) {
        std::vector<NodeId> rest;
        for (NodeId v = 0; v < 4; ++v)
          if (v != a && v != b) rest.push_back(v);
        for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
          std::vector<NodeId> z;
          for (std::size_t k = 0; k < rest.size(); ++k)
            if (mask >> k & 1u) z.push_back(rest[k]);
          const std::set<NodeId> zs(z.begin(), z.end());
          ASSERT_EQ(d_separated(g, a, b, z), oracle::path_d_separated(g, a, b, zs));
          ASSERT_EQ(d_separated(g, a, b, z), d_separated(g, b, a, z));
        }
      }
    }
  }
}

TEST(LocalMarkov, CompleteDagIsEmpty) {
  EXPECT_TRUE(local_markov_set(build(3, {{0, 1}, {0, 2}, {1, 2}})).empty());
}

TEST(LocalMarkov, IsolatedPair) {
  const auto s = local_markov_set(build(2, {}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (CiStatement{0, 1, {}}));
  EXPECT_EQ(s[1], (CiStatement{1, 0, {}}));
}

TEST(LocalMarkov, ChainHasCGivenB) {
  const auto s = local_markov_set(build(3, {{0, 1}, {1, 2}}));
  EXPECT_NE(std::find(s.begin(), s.end(), CiStatement{2, 0, {1}}), s.end());
}

TEST(LocalMarkov, EveryStatementHoldsInItsGraph) {
  for (const auto& g : oracle::all_dags(4)) {
    for (const auto& st : local_markov_set(g)) {
      EXPECT_TRUE(d_separated(g, st));
      EXPECT_FALSE(g.descendants(st.a).contains(st.b));
    }
  }
}

TEST(CausalDag, ConstructionErrors) {
  EXPECT_EQ(code_of([] { build(2, {{0, 5}}); }), ErrorCode::kUnknownNode);
  EXPECT_EQ(code_of([] { build(2, {{1, 1}}); }), ErrorCode::kCycleDetected);
  EXPECT_EQ(code_of([] { build(2, {{0, 1}, {0, 1}}); }), ErrorCode::kInvalidGraph);
}

TEST(CausalDag, RolesAndRelatives) {
  const CausalDag g = roles_graph();
  EXPECT_EQ(g.require_roles(), (std::pair<NodeId, NodeId>{2, 3}));
  EXPECT_EQ(g.ancestors(3), (std::set<NodeId>{0, 1, 2}));
  EXPECT_EQ(g.descendants(0), (std::set<NodeId>{2, 3}));
  EXPECT_TRUE(g.has_all_weights());
  EXPECT_EQ(code_of([] { build(2, {}).require_roles(); }), ErrorCode::kInvalidGraph);
}

TEST(CausalDag, RandomAncestorsAreInverseOfDescendants) {
  Rng rng(11);
  const auto dags = oracle::all_dags(4);
  for (int trial = 0; trial < 200; ++trial) {
    const CausalDag& g = dags[rng.below(dags.size())];
    for (const auto& u : g.nodes())
      for (NodeId d : g.descendants(u.id)) EXPECT_TRUE(g.ancestors(d).contains(u.id));
  }
}
