#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "icms/dgp.hpp"
#include "icms/error.hpp"
#include "icms/linalg.hpp"
#include "icms/rng.hpp"

using namespace icms;

namespace {

// X0 -> T (w_xt), X0 -> Y (w_xy), T -> Y (w_ty), X1 -> Y (0.5)
CausalDag small_graph(double w_xt, double w_xy, double w_ty) {
  std::vector<Node> nodes{{0, "X0", NodeRole::kFeature, ColumnKind::kContinuous},
                          {1, "X1", NodeRole::kFeature, ColumnKind::kContinuous},
                          {2, "T", NodeRole::kTreatment, ColumnKind::kBinary},
                          {3, "Y", NodeRole::kOutcome, ColumnKind::kContinuous}};
  return CausalDag(nodes, {{0, 2, w_xt}, {0, 3, w_xy}, {2, 3, w_ty}, {1, 3, 0.5}});
}

DgpConfig config(std::size_t n_source, std::size_t n_target, std::uint64_t seed) {
  DgpConfig cfg;
  cfg.n_source = n_source;
  cfg.n_target = n_target;
  cfg.seed = seed;
  return cfg;
}

double variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
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

}  // namespace

TEST(RandomDag, TooSmallForRoles) {
  EXPECT_EQ(code_of([] { random_dag(1, 0, 1); }), ErrorCode::kInfeasibleRoles);
  EXPECT_EQ(code_of([] { random_dag(4, 7, 1); }), ErrorCode::kInvalidArgument);
}

TEST(RandomDag, Deterministic) {
  EXPECT_EQ(random_dag(4, 6, 77), random_dag(4, 6, 77));
}

TEST(RandomDag, AcyclicBoundedAndRolesPlaced) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CausalDag g = random_dag(8, 20, seed);
    ASSERT_TRUE(is_acyclic(g));
    EXPECT_LE(g.num_edges(), 20u);
    EXPECT_GE(g.num_edges(), 7u);
    const auto [t, y] = g.require_roles();
    EXPECT_FALSE(g.parents(t).empty());
    EXPECT_TRUE(g.has_edge(t, y));
    EXPECT_TRUE(g.has_all_weights());
    EXPECT_LT(g.parents(y).size() + 1, g.num_nodes());
    for (const auto& e : g.edges()) {
      EXPECT_GE(std::abs(*e.weight), 0.25);
      EXPECT_LE(std::abs(*e.weight), 1.0);
    }
  }
}

TEST(GenObsData, Shape) {
  const CausalDag g = random_dag(9, 15, 3);
  const Dataset d = gen_obs_data(g, config(321, 10, 4));
  EXPECT_EQ(d.rows(), 321u);
  EXPECT_EQ(d.cols(), 9u);
  EXPECT_EQ(*d.treatment(), "T");
  EXPECT_EQ(*d.outcome(), "Y");
  for (double v : d.column("T").values) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(GenObsData, ZeroWeightTreatmentIsBalanced) {
  const Dataset d = gen_obs_data(small_graph(0.0, 1.0, 1.0), config(5000, 10, 5));
  double treated = 0.0;
  for (double v : d.column("T").values) treated += v;
  EXPECT_GE(treated / 5000.0, 0.45);
  EXPECT_LE(treated / 5000.0, 0.55);
}

TEST(GenObsData, LinearGaussianVariance) {
  // T has no effect, so Var(Y) = 0.8^2 Var(X0) + 0.5^2 Var(X1) + 1
  const Dataset d = gen_obs_data(small_graph(0.3, 0.8, 0.0), config(5000, 10, 6));
  const double expected = 0.64 * variance(d.column("X0").values) +
                          0.25 * variance(d.column("X1").values) + 1.0;
  EXPECT_NEAR(variance(d.column("Y").values) / expected, 1.0, 0.1);
}

TEST(GenObsData, MissingWeights) {
  std::vector<Node> nodes = small_graph(1, 1, 1).nodes();
  const CausalDag g(nodes, {{0, 2, std::nullopt}, {2, 3, 1.0}});
  EXPECT_EQ(code_of([&] { gen_obs_data(g, config(10, 10, 1)); }), ErrorCode::kMissingWeights);
}

TEST(GenTreatData, TreatedHalf) {
  const CausalDag g = random_dag(8, 12, 7);
  const auto s = gen_treat_data(g, config(10, 1001, 8), random_perturb_set(g, 9));
  double treated = 0.0;
  for (double v : s.data.column("T").values) treated += v;
  EXPECT_EQ(treated, 501.0);
  EXPECT_EQ(s.data.column("T").values[499], 0.0);
  EXPECT_EQ(s.data.column("T").values[500], 1.0);
}

TEST(GenTreatData, PerturbedRootMean) {
  DgpConfig cfg = config(10, 4000, 10);
  cfg.perturb_mean = 4.0;
  cfg.perturb_sd = 2.0;
  const auto s = gen_treat_data(small_graph(0.5, 1.0, 1.0), cfg, {1});
  double m = 0.0;
  for (double v : s.data.column("X1").values) m += v;
  m /= 4000.0;
  EXPECT_NEAR(m, 4.0, 3.0 * 2.0 / std::sqrt(4000.0));
  EXPECT_EQ(s.perturb_mean, 4.0);
}

TEST(GenTreatData, OutcomeIsStructuralSum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CausalDag g = random_dag(10, 30, seed);
    const auto s = gen_treat_data(g, config(10, 200, seed), random_perturb_set(g, seed));
    const auto [t, y] = g.require_roles();
    for (std::size_t i = 0; i < 200; ++i) {
      double expect = 0.0;
      for (NodeId p : g.parents(y)) expect += *g.weight(p, y) * s.data.column(g.node(p).name).values[i];
      EXPECT_NEAR(s.data.column("Y").values[i], expect, 1e-12);
      const auto r = static_cast<Eigen::Index>(i);
      EXPECT_NEAR(s.truth.cate(r), s.truth.y1(r) - s.truth.y0(r), 1e-12);
      EXPECT_NEAR(s.truth.cate(r), *g.weight(t, y), 1e-12);
    }
  }
}

TEST(GenTreatData, InvalidPerturbSet) {
  const CausalDag g = small_graph(0.5, 1.0, 1.0);
  EXPECT_EQ(code_of([&] { gen_treat_data(g, config(10, 10, 1), {}); }), ErrorCode::kInvalidPerturbSet);
  EXPECT_EQ(code_of([&] { gen_treat_data(g, config(10, 10, 1), {3}); }), ErrorCode::kInvalidPerturbSet);
}

TEST(GenTreatData, StructuralWeightsShared) {
  // X2's equation is untouched by treatment and perturbation in both domains
  std::vector<Node> nodes{{0, "X0", NodeRole::kFeature, ColumnKind::kContinuous},
                          {1, "X1", NodeRole::kFeature, ColumnKind::kContinuous},
                          {2, "X2", NodeRole::kFeature, ColumnKind::kContinuous},
                          {3, "T", NodeRole::kTreatment, ColumnKind::kBinary},
                          {4, "Y", NodeRole::kOutcome, ColumnKind::kContinuous}};
  const CausalDag g(nodes, {{0, 2, 0.7}, {1, 2, -0.4}, {2, 3, 0.5}, {3, 4, 1.0}, {2, 4, 0.6}});
  DgpConfig cfg = config(5000, 5000, 11);
  const Dataset src = gen_obs_data(g, cfg);
  const Dataset tgt = gen_treat_data(g, cfg, {0}).data;
  const std::vector<std::string> pa{"X0", "X1"};
  for (const Dataset* d : {&src, &tgt}) {
    const Eigen::VectorXd x2 = d->matrix(std::vector<std::string>{"X2"}).col(0);
    const auto fit = linalg::ridge(d->matrix(pa), x2, 0.0);
    EXPECT_NEAR(fit.coef(0), 0.7, 0.05);
    EXPECT_NEAR(fit.coef(1), -0.4, 0.05);
  }
}

TEST(Generation, Reproducible) {
  const CausalDag g = random_dag(8, 20, 12);
  const auto a = gen_obs_data(g, config(100, 50, 13));
  const auto b = gen_obs_data(g, config(100, 50, 13));
  EXPECT_EQ(a.column("Y").values, b.column("Y").values);
  const auto p = random_perturb_set(g, 14);
  EXPECT_EQ(p, random_perturb_set(g, 14));
  EXPECT_EQ(gen_treat_data(g, config(100, 50, 13), p).data.column("Y").values,
            gen_treat_data(g, config(100, 50, 13), p).data.column("Y").values);
}

TEST(RandomPerturbSet, NonEmptyAncestorsOfOutcome) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CausalDag g = random_dag(8, 14, seed);
    const auto [t, y] = g.require_roles();
    const auto p = random_perturb_set(g, seed + 1000);
    EXPECT_FALSE(p.empty());
    for (NodeId v : p) {
      EXPECT_NE(v, t);
      EXPECT_TRUE(g.ancestors(y).contains(v));
    }
  }
}

TEST(PerturbGraph, ZeroFractionIsIdentity) {
  const CausalDag g = random_dag(8, 20, 15);
  EXPECT_EQ(perturb_graph(g, 0.0, PerturbMode::kReverse, 1), g);
  EXPECT_EQ(perturb_graph(g, 0.0, PerturbMode::kAdd, 1), g);
}

TEST(PerturbGraph, ReverseKeepsEdgeCountAndAcyclicity) {
  Rng rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 8 + rng.below(5);
    const CausalDag g = random_dag(n, n * (n - 1) / 2, rng.next_u64());
    const double f = rng.uniform();
    const CausalDag h = perturb_graph(g, f, PerturbMode::kReverse, rng.next_u64());
    ASSERT_TRUE(is_acyclic(h));
    EXPECT_EQ(h.num_edges(), g.num_edges());
    std::size_t reversed = 0;
    for (const auto& e : g.edges()) {
      if (h.has_edge(e.dst, e.src)) {
        ++reversed;
        EXPECT_EQ(h.weight(e.dst, e.src), e.weight);
      } else {
        EXPECT_TRUE(h.has_edge(e.src, e.dst));
      }
    }
    EXPECT_EQ(reversed, static_cast<std::size_t>(std::floor(f * g.num_edges() + 1e-9)));
  }
}

TEST(PerturbGraph, FullReversalOfCompleteGraph) {
  const CausalDag g = random_dag(6, 15, 17);
  const CausalDag h = perturb_graph(g, 1.0, PerturbMode::kReverse, 18);
  for (const auto& e : g.edges()) EXPECT_TRUE(h.has_edge(e.dst, e.src));
}

TEST(PerturbGraph, AddKeepsAcyclicity) {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const CausalDag g = random_dag(10, 15, rng.next_u64());
    const double f = rng.uniform();
    const CausalDag h = perturb_graph(g, f, PerturbMode::kAdd, rng.next_u64());
    ASSERT_TRUE(is_acyclic(h));
    EXPECT_EQ(h.num_edges(), g.num_edges() + static_cast<std::size_t>(std::floor(f * g.num_edges() + 1e-9)));
    for (const auto& e : g.edges()) EXPECT_TRUE(h.has_edge(e.src, e.dst));
  }
}

TEST(PerturbGraph, Deterministic) {
  const CausalDag g = random_dag(10, 30, 20);
  EXPECT_EQ(perturb_graph(g, 0.5, PerturbMode::kReverse, 21),
            perturb_graph(g, 0.5, PerturbMode::kReverse, 21));
  EXPECT_EQ(parse_perturb_mode(perturb_mode_name(PerturbMode::kAdd)), PerturbMode::kAdd);
}
