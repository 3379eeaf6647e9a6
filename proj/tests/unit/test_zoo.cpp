#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "icms/dgp.hpp"
#include "icms/error.hpp"
#include "icms/harness.hpp"
#include "icms/rng.hpp"
#include "icms/zoo.hpp"

using namespace icms;

namespace {

// y = 1 + 2 x1 - x2 + t (0.5 + 3 x2) + noise
Dataset two_arm(std::size_t n, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x1(n), x2(n), t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.normal();
    x2[i] = rng.normal();
    t[i] = rng.bernoulli(0.5);
    y[i] = 1 + 2 * x1[i] - x2[i] + t[i] * (0.5 + 3 * x2[i]) + noise * rng.normal();
  }
  return Dataset({{"X1", ColumnKind::kContinuous, x1},
                  {"X2", ColumnKind::kContinuous, x2},
                  {"T", ColumnKind::kBinary, t},
                  {"Y", ColumnKind::kContinuous, y}},
                 "T", "Y");
}

Dataset point(double x1, double x2) {
  return Dataset({{"X1", ColumnKind::kContinuous, {x1}}, {"X2", ColumnKind::kContinuous, {x2}}});
}

ModelSpec spec(ModelFamily f, std::map<std::string, double> hp,
               std::shared_ptr<const CausalDag> g = nullptr) {
  return ModelSpec{f, std::move(hp), std::move(g), std::nullopt};
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

TEST(TRidge, RecoversArmCoefficients) {
  const auto m = fit_candidate(spec(ModelFamily::kTRidge, {{"penalty", 1e-8}}), two_arm(500, 0.0, 1), 0);
  const double c0 = m.predict(point(0, 0), 0)(0), c1 = m.predict(point(0, 0), 1)(0);
  EXPECT_NEAR(c0, 1.0, 1e-6);
  EXPECT_NEAR(c1, 1.5, 1e-6);
  EXPECT_NEAR(m.predict(point(1, 0), 0)(0) - c0, 2.0, 1e-6);
  EXPECT_NEAR(m.predict(point(0, 1), 0)(0) - c0, -1.0, 1e-6);
  EXPECT_NEAR(m.predict(point(1, 0), 1)(0) - c1, 2.0, 1e-6);
  EXPECT_NEAR(m.predict(point(0, 1), 1)(0) - c1, 2.0, 1e-6);
}

TEST(TRidge, CateCloseToTruth) {
  const auto m = fit_candidate(spec(ModelFamily::kTRidge, {{"penalty", 1e-3}}), two_arm(2000, 0.1, 2), 0);
  const Dataset test = two_arm(1000, 0.1, 3);
  const auto po = predict_po(m, test);
  Eigen::VectorXd truth(1000);
  for (int i = 0; i < 1000; ++i) truth(i) = 0.5 + 3 * test.column("X2").values[i];
  EXPECT_LT(std::sqrt(pehe(po.cate, truth)), 0.1);
}

TEST(SPoly, FitsQuadraticSurface) {
  Rng rng(4);
  std::vector<double> x(400), t(400), y(400);
  for (int i = 0; i < 400; ++i) {
    x[i] = rng.uniform(-2, 2);
    t[i] = i % 2;
    y[i] = x[i] * x[i] + t[i] * x[i];
  }
  const Dataset d({{"X1", ColumnKind::kContinuous, x}, {"T", ColumnKind::kBinary, t},
                   {"Y", ColumnKind::kContinuous, y}},
                  "T", "Y");
  const auto m2 = fit_candidate(spec(ModelFamily::kSPoly, {{"degree", 2}, {"penalty", 1e-8}}), d, 0);
  const auto m1 = fit_candidate(spec(ModelFamily::kSPoly, {{"degree", 1}, {"penalty", 1e-8}}), d, 0);
  const Dataset q({{"X1", ColumnKind::kContinuous, {1.5}}});
  EXPECT_NEAR(m2.predict(q, 1)(0), 2.25 + 1.5, 1e-6);
  EXPECT_NEAR(m2.predict(q, 0)(0), 2.25, 1e-6);
  const Dataset origin({{"X1", ColumnKind::kContinuous, {0.0}}});
  EXPECT_NEAR(m2.predict(origin, 0)(0), 0.0, 1e-6);
  EXPECT_GT(std::abs(m1.predict(origin, 0)(0)), 0.5);
}

TEST(TKnn, OneNeighbourReturnsArmTrainingValue) {
  const Dataset d = two_arm(100, 0.5, 5);
  const auto m = fit_candidate(spec(ModelFamily::kTKnn, {{"k", 1}}), d, 0);
  const auto pred = m.predict(d, 0);
  for (std::size_t i = 0; i < 100; ++i)
    if (d.column("T").values[i] == 0.0) EXPECT_EQ(pred(static_cast<Eigen::Index>(i)), d.column("Y").values[i]);
}

TEST(TKnn, KLargerThanArmAveragesArm) {
  const Dataset d = two_arm(60, 0.5, 6);
  const auto m = fit_candidate(spec(ModelFamily::kTKnn, {{"k", 1000}}), d, 0);
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < 60; ++i)
    if (d.column("T").values[i] == 1.0) {
      sum += d.column("Y").values[i];
      ++count;
    }
  EXPECT_NEAR(m.predict(point(0.3, -2), 1)(0), sum / count, 1e-12);
}

TEST(Oracle, ReproducesPotentialOutcomes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = std::make_shared<const CausalDag>(random_dag(9, 25, seed));
    DgpConfig cfg;
    cfg.n_source = 300;
    cfg.n_target = 300;
    cfg.seed = seed;
    const auto target = gen_treat_data(*g, cfg, random_perturb_set(*g, seed));
    const auto m = fit_candidate(spec(ModelFamily::kOracle, {}, g), gen_obs_data(*g, cfg), 0);
    const auto po = predict_po(m, target.data.covariates());
    EXPECT_LT((po.y0 - target.truth.y0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((po.y1 - target.truth.y1).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CorruptedOracle, ShiftsTreatedArmBySpuriousTerm) {
  auto g = std::make_shared<const CausalDag>(random_dag(8, 20, 7));
  DgpConfig cfg;
  cfg.n_source = 200;
  cfg.seed = 8;
  const Dataset train = gen_obs_data(*g, cfg);
  const auto oracle = fit_candidate(spec(ModelFamily::kOracle, {}, g), train, 0);
  const auto bad = fit_candidate(spec(ModelFamily::kCorruptedOracle, {{"coefficient", 0.5}}, g), train, 0);
  const std::string u = g->node(spurious_node(*g)).name;
  const Dataset x = train.covariates();
  const Eigen::VectorXd xu = x.matrix(std::vector<std::string>{u}).col(0);
  EXPECT_LT((bad.predict(x, 0) - oracle.predict(x, 0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((bad.predict(x, 1) - oracle.predict(x, 1) - 0.5 * xu).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpuriousNode, PrefersNonDescendant) {
  std::vector<Node> nodes{{0, "X0", NodeRole::kFeature, ColumnKind::kContinuous},
                          {1, "X1", NodeRole::kFeature, ColumnKind::kContinuous},
                          {2, "T", NodeRole::kTreatment, ColumnKind::kBinary},
                          {3, "Y", NodeRole::kOutcome, ColumnKind::kContinuous},
                          {4, "X4", NodeRole::kFeature, ColumnKind::kContinuous}};
  const CausalDag a(nodes, {{0, 2, 1}, {2, 3, 1}, {1, 3, 1}, {3, 4, 1}});
  EXPECT_EQ(spurious_node(a), 0);
  const CausalDag b(nodes, {{0, 2, 1}, {2, 3, 1}, {1, 3, 1}, {0, 3, 1}, {3, 4, 1}});
  EXPECT_EQ(spurious_node(b), 4);
  const CausalDag c(nodes, {{0, 2, 1}, {2, 3, 1}, {1, 3, 1}, {0, 3, 1}, {4, 3, 1}});
  EXPECT_EQ(code_of([&] { spurious_node(c); }), ErrorCode::kInvalidArgument);
}

TEST(PredictPo, HandBuiltModels) {
  const auto lin = CandidateModel::from_function(
      "lin", {"X1"}, "T", "Y", [](std::span<const double> x, int t) { return x[0] + t; });
  const auto flat = CandidateModel::from_function(
      "flat", {"X1"}, "T", "Y", [](std::span<const double> x, int) { return 3 * x[0]; });
  const Dataset x({{"X1", ColumnKind::kContinuous, {0.1, -4, 7}}});
  for (double c : predict_po(lin, x).cate) EXPECT_EQ(c, 1.0);
  for (double c : predict_po(flat, x).cate) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(code_of([&] { predict_po(lin, Dataset({{"X9", ColumnKind::kContinuous, {1}}})); }),
            ErrorCode::kSchemaMismatch);
}

TEST(PredictPo, RowOrderEquivariantAndDeterministic) {
  const Dataset d = two_arm(300, 0.3, 9);
  const Dataset test = two_arm(50, 0.3, 10).covariates();
  std::vector<std::size_t> perm(50);
  for (std::size_t i = 0; i < 50; ++i) perm[i] = (i * 17) % 50;
  const Dataset shuffled = test.subset_rows(perm);
  for (const auto& s : expand_grid(ZooGrid{.include_oracle = false, .corruption_coefficients = {}}, nullptr)) {
    const auto m1 = fit_candidate(s, d, 1);
    const auto m2 = fit_candidate(s, d, 1);
    const auto a = predict_po(m1, test), b = predict_po(m2, shuffled);
    EXPECT_EQ(a.cate, predict_po(m2, test).cate);
    for (std::size_t i = 0; i < 50; ++i)
      EXPECT_EQ(a.cate(static_cast<Eigen::Index>(perm[i])), b.cate(static_cast<Eigen::Index>(i)));
  }
}

TEST(ZooGrid, DefaultExpansion) {
  auto g = std::make_shared<const CausalDag>(random_dag(8, 20, 11));
  const auto specs = expand_grid(ZooGrid{}, g);
  ASSERT_EQ(specs.size(), 24u);
  EXPECT_EQ(ZooGrid{}.size(), 24u);
  EXPECT_EQ(specs.front().id(), "t_ridge(penalty=0.0001)");
  EXPECT_EQ(specs[7].id(), "s_poly(degree=1,penalty=0.01)");
  EXPECT_EQ(specs[16].id(), "t_knn(k=1)");
  EXPECT_EQ(specs[19].id(), "oracle");
  EXPECT_EQ(specs.back().id(), "corrupted_oracle(coefficient=2)");
  std::set<std::string> ids;
  for (const auto& s : specs) ids.insert(s.id());
  EXPECT_EQ(ids.size(), specs.size());
}

TEST(ZooGrid, TruePeheSpreadIsNonConstant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = std::make_shared<const CausalDag>(random_dag(10, 45, derive_seed(seed, {0})));
    DgpConfig cfg;
    cfg.seed = derive_seed(seed, {1});
    const Dataset train = gen_obs_data(*g, cfg);
    const auto target = gen_treat_data(*g, cfg, random_perturb_set(*g, cfg.seed));
    const auto specs = expand_grid(ZooGrid{}, g);
    std::vector<double> p;
    for (const auto& m : fit_zoo(specs, train, seed))
      p.push_back(pehe(predict_po(m, target.data.covariates()).cate, target.truth.cate));
    EXPECT_GT(*std::max_element(p.begin(), p.end()) - *std::min_element(p.begin(), p.end()), 1e-6);
  }
}

TEST(FitCandidate, Errors) {
  const Dataset d = two_arm(50, 0.1, 12);
  EXPECT_EQ(code_of([&] { fit_candidate(spec(ModelFamily::kTRidge, {}), d, 0); }), ErrorCode::kConfig);
  std::vector<std::size_t> control;
  for (std::size_t i = 0; i < 50; ++i)
    if (d.column("T").values[i] == 0.0) control.push_back(i);
  EXPECT_EQ(code_of([&] { fit_candidate(spec(ModelFamily::kTKnn, {{"k", 3}}), d.subset_rows(control), 0); }),
            ErrorCode::kSingleArmData);
  Dataset no_y = d;
  no_y.set_outcome(std::nullopt);
  EXPECT_EQ(code_of([&] { fit_candidate(spec(ModelFamily::kTKnn, {{"k", 3}}), no_y, 0); }),
            ErrorCode::kMissingOutcome);
  EXPECT_EQ(code_of([] { parse_model_family("forest"); }), ErrorCode::kConfig);

  std::vector<Node> nodes{{0, "X1", NodeRole::kFeature, ColumnKind::kContinuous},
                          {1, "X2", NodeRole::kFeature, ColumnKind::kContinuous},
                          {2, "T", NodeRole::kTreatment, ColumnKind::kBinary},
                          {3, "Y", NodeRole::kOutcome, ColumnKind::kContinuous}};
  auto unweighted = std::make_shared<const CausalDag>(
      nodes, std::vector<Edge>{{0, 2, std::nullopt}, {2, 3, std::nullopt}, {0, 3, std::nullopt}});
  EXPECT_EQ(code_of([&] { fit_candidate(spec(ModelFamily::kOracle, {}, unweighted), d, 0); }),
            ErrorCode::kMissingWeights);
}
