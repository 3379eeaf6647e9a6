#include <gtest/gtest.h>

#include "fixture.hpp"
#include "icms/dgp.hpp"
#include "icms/error.hpp"
#include "icms/io.hpp"

using namespace icms;
using it::ScratchDir;
namespace fs = std::filesystem;

namespace {

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

TEST(GraphJson, PreservesGraph) {
  const CausalDag g = random_dag(9, 20, 1);
  ScratchDir dir("graph");
  write_graph(dir / "g.json", g);
  EXPECT_EQ(read_graph(dir / "g.json"), g);
}

TEST(GraphJson, RejectsCyclesAndBadFields) {
  const Json cyc = Json::parse(R"({"nodes":[{"id":0,"name":"A"},{"id":1,"name":"B"}],
                                  "edges":[{"src":0,"dst":1},{"src":1,"dst":0}]})");
  EXPECT_EQ(code_of([&] { graph_from_json(cyc); }), ErrorCode::kCycleDetected);
  const Json dangling = Json::parse(R"({"nodes":[{"id":0,"name":"A"}],"edges":[{"src":0,"dst":4}]})");
  EXPECT_EQ(code_of([&] { graph_from_json(dangling); }), ErrorCode::kUnknownNode);
  const Json role = Json::parse(R"({"nodes":[{"id":0,"name":"A","role":"judge"}],"edges":[]})");
  EXPECT_THROW(graph_from_json(role), Error);
}

TEST(DatasetCsv, ValuesSurviveExactly) {
  Dataset d({{"X1", ColumnKind::kContinuous, {0.1, -1e-300, 3.141592653589793}},
             {"T", ColumnKind::kBinary, {0, 1, 1}},
             {"G", ColumnKind::kCategorical, {2, 0, 1}},
             {"Y", ColumnKind::kContinuous, {1.0 / 3.0, 2, -7}}},
            "T", "Y");
  ScratchDir dir("csv");
  write_dataset(dir / "d.csv", d);
  EXPECT_TRUE(fs::exists(dir / "d.meta.json"));
  const Dataset back = read_dataset(dir / "d.csv");
  ASSERT_EQ(back.cols(), 4u);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(back.column(c).name, d.column(c).name);
    EXPECT_EQ(back.column(c).kind, d.column(c).kind);
    EXPECT_EQ(back.column(c).values, d.column(c).values);
  }
  EXPECT_EQ(back.treatment(), d.treatment());
  EXPECT_EQ(back.outcome(), d.outcome());
}

TEST(DatasetCsv, Errors) {
  ScratchDir dir("csv_err");
  EXPECT_EQ(code_of([&] { read_dataset(dir / "missing.csv"); }), ErrorCode::kIo);

  it::spit(dir / "a.csv", "X1,Y\n1,abc\n");
  it::spit(dir / "a.meta.json",
           R"({"columns":[{"name":"X1","kind":"continuous"},{"name":"Y","kind":"continuous"}],"outcome":"Y"})");
  EXPECT_EQ(code_of([&] { read_dataset(dir / "a.csv"); }), ErrorCode::kNonNumericColumn);

  it::spit(dir / "b.csv", "X1,Z\n1,2\n");
  it::spit(dir / "b.meta.json", it::slurp(dir / "a.meta.json"));
  EXPECT_EQ(code_of([&] { read_dataset(dir / "b.csv"); }), ErrorCode::kSchemaMismatch);
}

TEST(TruthCsv, ReadsBack) {
  PotentialOutcomeTruth t;
  t.y0 = Eigen::VectorXd::LinSpaced(5, -1, 1);
  t.y1 = t.y0.array() + 0.7;
  t.cate = t.y1 - t.y0;
  ScratchDir dir("truth");
  write_truth(dir / "t.csv", t);
  const auto back = read_truth(dir / "t.csv");
  EXPECT_EQ(back.y0, t.y0);
  EXPECT_EQ(back.y1, t.y1);
  EXPECT_EQ(back.cate, t.cate);
}

TEST(ConfigJson, ParsesFields) {
  const auto cfg = experiment_config_from_json(Json::parse(R"j({
    "seed": 9, "n_dags": 4, "lambda": "edge_ratio", "methods": ["mse", "dev(iptw)"],
    "nodes": {"min": 5, "max": 6}, "dgp": {"n_source": 100, "perturb_mean": 2.5},
    "sweeps": {"mode": "add", "risk": "iwcv(mse)"}, "density_ratio": {"clip": [0.1, 10]}})j"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.n_dags, 4u);
  EXPECT_EQ(cfg.lambda.kind, LambdaPolicy::Kind::kEdgeRatio);
  ASSERT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.methods[1].name(), "dev(iptw)");
  EXPECT_EQ(cfg.min_nodes, 5u);
  EXPECT_EQ(cfg.dgp.n_source, 100u);
  EXPECT_EQ(*cfg.dgp.perturb_mean, 2.5);
  EXPECT_EQ(cfg.sweep_mode, PerturbMode::kAdd);
  EXPECT_EQ(cfg.sweep_risk.name(), "iwcv(mse)");
  EXPECT_EQ(cfg.weight_clip.hi, 10.0);
}

TEST(ConfigJson, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(code_of([] { experiment_config_from_json(Json::parse(R"({"sed": 1})")); }),
            ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { experiment_config_from_json(Json::parse(R"({"dgp": {"n_src": 1}})")); }),
            ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { experiment_config_from_json(Json::parse(R"({"lambda": "auto"})")); }),
            ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { experiment_config_from_json(Json::parse(R"({"n_dags": 0})")); }),
            ErrorCode::kConfig);
}

TEST(Reports, CurveCsvLayout) {
  SweepReport r;
  r.kind = "lambda";
  CurvePoint p;
  p.parameter = 0.5;
  p.pehe10 = {0.25, 0.125, 3};
  p.delta = {-0.5, 0.0625, 3};
  r.points.push_back(p);
  const std::string csv = curve_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "parameter,mean_pehe10,se_pehe10,mean_delta,se_delta");
  EXPECT_NE(csv.find("0.5,0.25,0.125,-0.5,0.0625"), std::string::npos);
}

TEST(Reports, JsonIsSortedWithTrailingNewline) {
  ScratchDir dir("json");
  write_json(dir / "x.json", Json{{"b", 1}, {"a", 2}});
  const std::string s = it::slurp(dir / "x.json");
  EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
  EXPECT_EQ(s.back(), '\n');
}
