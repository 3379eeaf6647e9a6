#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icms/dgp.hpp"
#include "icms/error.hpp"
#include "icms/fitness.hpp"
#include "icms/harness.hpp"
#include "icms/independence.hpp"
#include "icms/io.hpp"
#include "icms/rng.hpp"
#include "icms/selection.hpp"
#include "icms/zoo.hpp"

namespace fs = std::filesystem;
using namespace icms;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{}
                                          : experiment_config_from_json(read_json(g.config));
  if (g.seed_given) cfg.seed = g.seed;
  cfg.validate();
  return cfg;
}

Dataset load(const std::string& csv, const std::string& meta) {
  return meta.empty() ? read_dataset(csv) : read_dataset(csv, meta);
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::pair<Dataset, Dataset> split(const Dataset& source, double val_fraction, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {5}));
  const auto perm = rng.permutation(source.rows());
  const auto n_val = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(source.rows())));
  const auto cut = perm.begin() + static_cast<std::ptrdiff_t>(n_val);
  return {source.subset_rows(sorted({cut, perm.end()})),
          source.subset_rows(sorted({perm.begin(), cut}))};
}

// Oracle families need a weighted graph; without one they are left out.
std::vector<ModelSpec> zoo_specs(const ExperimentConfig& cfg,
                                 const std::shared_ptr<const CausalDag>& graph) {
  ZooGrid grid = cfg.zoo;
  if (!graph || !graph->has_all_weights()) {
    grid.include_oracle = false;
    grid.corruption_coefficients.clear();
  }
  return expand_grid(grid, graph);
}

// Inputs shared by rank and evaluate.
struct RankInputs {
  std::string source, source_meta, train, train_meta, val, val_meta, target, target_meta;
  std::string graph, prior, discovered;
  std::string lambda;
};

void add_rank_options(CLI::App* cmd, RankInputs& in) {
  cmd->add_option("--source", in.source, "Labeled source CSV, split into train/validation");
  cmd->add_option("--source-meta", in.source_meta, "Metadata for --source");
  cmd->add_option("--train", in.train, "Training CSV (instead of --source)");
  cmd->add_option("--train-meta", in.train_meta, "Metadata for --train");
  cmd->add_option("--val", in.val, "Validation CSV (instead of --source)");
  cmd->add_option("--val-meta", in.val_meta, "Metadata for --val");
  cmd->add_option("--target", in.target, "Unlabeled target CSV")->required();
  cmd->add_option("--target-meta", in.target_meta, "Metadata for --target");
  cmd->add_option("--graph", in.graph, "Causal graph JSON")->required();
  cmd->add_option("--prior", in.prior, "Prior-knowledge graph for the edge-ratio lambda");
  cmd->add_option("--discovered", in.discovered, "Discovered graph for the edge-ratio lambda");
  cmd->add_option("--lambda", in.lambda, "Number or 'edge_ratio' (default from config)");
}

struct Prepared {
  std::shared_ptr<const CausalDag> graph;
  Dataset train, val, target_x;
  std::vector<CandidateModel> models;
  std::vector<std::string> ids;
  double lambda = 1.0;
};

Prepared prepare(const ExperimentConfig& cfg, const RankInputs& in) {
  Prepared p;
  p.graph = std::make_shared<const CausalDag>(read_graph(in.graph));
  if (!in.source.empty()) {
    std::tie(p.train, p.val) = split(load(in.source, in.source_meta), cfg.validation_fraction, cfg.seed);
  } else if (!in.train.empty() && !in.val.empty()) {
    p.train = load(in.train, in.train_meta);
    p.val = load(in.val, in.val_meta);
  } else {
    fail(ErrorCode::kConfig, "give --source, or both --train and --val");
  }
  p.target_x = load(in.target, in.target_meta).covariates();
  p.models = fit_zoo(zoo_specs(cfg, p.graph), p.train, derive_seed(cfg.seed, {6}));
  for (const auto& m : p.models) p.ids.push_back(m.id());

  LambdaPolicy policy = cfg.lambda;
  if (!in.lambda.empty()) {
    if (in.lambda == "edge_ratio") {
      policy.kind = LambdaPolicy::Kind::kEdgeRatio;
    } else {
      std::size_t used = 0;
      try {
        policy.value = std::stod(in.lambda, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != in.lambda.size() || policy.value < 0.0) {
        fail(ErrorCode::kConfig, "--lambda must be a non-negative number or 'edge_ratio'");
      }
      policy.kind = LambdaPolicy::Kind::kFixed;
    }
  }
  const CausalDag prior = in.prior.empty() ? *p.graph : read_graph(in.prior);
  const CausalDag discovered = in.discovered.empty() ? *p.graph : read_graph(in.discovered);
  p.lambda = policy.resolve(*p.graph, prior, discovered);
  return p;
}

RiskInputs risk_inputs(const ExperimentConfig& cfg, const Prepared& p) {
  RiskInputs r;
  r.propensity = fit_propensity(p.train, cfg.propensity_clip, cfg.propensity_l2);
  r.weights = density_ratio(p.val.covariates(), p.target_x, cfg.weight_clip, cfg.discriminator_l2);
  return r;
}

int cmd_gen_dag(const Globals& g, std::size_t nodes, std::optional<std::size_t> max_edges) {
  const ExperimentConfig cfg = load_config(g);
  const std::size_t full = nodes * (nodes - 1) / 2;
  const CausalDag dag =
      random_dag(nodes, max_edges.value_or(full), derive_seed(cfg.seed, {0}), cfg.dgp.weights);
  write_graph(fs::path(g.out) / "graph.json", dag);
  return 0;
}

int cmd_gen_data(const Globals& g, const std::string& graph_path,
                 const std::vector<std::string>& perturb_names) {
  const ExperimentConfig cfg = load_config(g);
  const CausalDag dag = read_graph(graph_path);
  DgpConfig dgp = cfg.dgp;
  dgp.n_nodes = std::max<std::size_t>(dag.num_nodes(), 3);
  std::set<NodeId> perturbed;
  if (perturb_names.empty()) {
    perturbed = random_perturb_set(dag, derive_seed(cfg.seed, {4}));
  } else {
    for (const auto& name : perturb_names) perturbed.insert(dag.node_by_name(name).id);
  }
  dgp.seed = derive_seed(cfg.seed, {2});
  const Dataset source = gen_obs_data(dag, dgp);
  dgp.seed = derive_seed(cfg.seed, {3});
  const TargetSample target = gen_treat_data(dag, dgp, perturbed);

  const fs::path out(g.out);
  write_dataset(out / "source.csv", source);
  write_dataset(out / "target.csv", target.data.covariates());
  write_truth(out / "target_truth.csv", target.truth);
  std::vector<std::string> names;
  for (NodeId id : perturbed) names.push_back(dag.node(id).name);
  write_json(out / "dgp.json", {{"perturbed", names},
                                {"perturb_mean", target.perturb_mean},
                                {"n_source", source.rows()},
                                {"n_target", target.data.rows()},
                                {"eval_only", "target_truth.csv"}});
  return 0;
}

int cmd_fit_zoo(const Globals& g, const std::string& train_path, const std::string& train_meta,
                const std::string& graph_path, const std::string& predict_path,
                const std::string& predict_meta) {
  const ExperimentConfig cfg = load_config(g);
  const Dataset train = load(train_path, train_meta);
  std::shared_ptr<const CausalDag> graph;
  if (!graph_path.empty()) graph = std::make_shared<const CausalDag>(read_graph(graph_path));
  const auto models = fit_zoo(zoo_specs(cfg, graph), train, derive_seed(cfg.seed, {6}));

  Json zoo = Json::array();
  for (const auto& m : models) {
    zoo.push_back({{"model_id", m.id()},
                   {"family", std::string(model_family_name(m.family()))},
                   {"hyperparams", m.hyperparams()},
                   {"train_mse", factual_mse(m, train).values.mean()}});
  }
  const fs::path out(g.out);
  write_json(out / "zoo.json", {{"models", zoo}});
  if (!predict_path.empty()) {
    const Dataset x = load(predict_path, predict_meta);
    std::string csv = "model_id,row,y0,y1,cate\n";
    char buf[128];
    for (const auto& m : models) {
      const PotentialOutcomes po = predict_po(m, x);
      for (Eigen::Index i = 0; i < po.y0.size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%ld,%.17g,%.17g,%.17g\n", static_cast<long>(i),
                      po.y0(i), po.y1(i), po.cate(i));
        csv += m.id() + buf;
      }
    }
    write_text(out / "predictions.csv", csv);
  }
  return 0;
}

int cmd_rank(const Globals& g, const RankInputs& in, const std::string& risk_name, bool with_nci) {
  const ExperimentConfig cfg = load_config(g);
  Prepared p = prepare(cfg, in);
  const ValidationRisk risk =
      risk_name.empty() ? cfg.methods.front() : ValidationRisk::parse(risk_name);
  const auto reports =
      rank_models(p.models, p.val, p.target_x, *p.graph, p.lambda, risk, risk_inputs(cfg, p));
  Json j = {{"risk", risk.name()}, {"lambda", p.lambda}, {"reports", to_json(reports)}};
  if (with_nci) {
    const auto [t, y] = p.graph->require_roles();
    (void)y;
    const CausalDag interventional = mutilate(*p.graph, t);
    CiTestConfig ci;
    ci.alpha = cfg.ci_alpha;
    Json nci = Json::object();
    for (const auto& m : p.models) {
      const AugmentedTargetSet aug = augment_target(m, p.target_x);
      nci[m.id()] = nci_count(interventional, aug.data, ci, aug.source_size);
    }
    j["nci"] = nci;
  }
  write_json(fs::path(g.out) / "ranking.json", j);
  return 0;
}

int cmd_evaluate(const Globals& g, const RankInputs& in, const std::string& truth_path) {
  const ExperimentConfig cfg = load_config(g);
  Prepared p = prepare(cfg, in);
  const PotentialOutcomeTruth truth = read_truth(truth_path);
  std::map<std::string, double> true_pehe;
  for (const auto& m : p.models) true_pehe[m.id()] = pehe(predict_po(m, p.target_x).cate, truth.cate);

  const auto [t, y] = p.graph->require_roles();
  (void)y;
  RiskInputs inputs = risk_inputs(cfg, p);
  const auto c_r = causal_risks(p.models, p.target_x, mutilate(*p.graph, t));
  Json methods = Json::array();
  for (const auto& method : cfg.methods) {
    const auto v_r = validation_risks(p.models, p.val, p.target_x, method, inputs);
    for (bool icms : {false, true}) {
      auto reports = rank_scores(p.ids, v_r, c_r, icms ? p.lambda : 0.0);
      for (auto& r : reports) r.true_pehe = true_pehe.at(r.model_id);
      methods.push_back({{"name", icms ? "icms(" + method.name() + ")" : method.name()},
                         {"pehe10", pehe_top_decile(reports, true_pehe, true)},
                         {"inversion", inversion_count_normalized(reports, true_pehe)},
                         {"reports", to_json(reports)}});
    }
  }
  write_json(fs::path(g.out) / "evaluation.json",
             {{"lambda", p.lambda}, {"true_pehe", true_pehe}, {"methods", methods}});
  return 0;
}

void write_sweep(const Globals& g, const std::string& stem, const SweepReport& report,
                 const ExperimentConfig& cfg) {
  const fs::path out(g.out);
  Json j = to_json(report);
  j["config"] = to_json(cfg);
  write_json(out / (stem + ".json"), j);
  write_text(out / (stem + ".csv"), curve_csv(report));
}

int cmd_experiment(const Globals& g) {
  ExperimentConfig cfg = load_config(g);
  cfg.output_dir = fs::path(g.out);
  const ExperimentReport report = run_experiment(cfg);
  Json j = to_json(report);
  j["config"] = to_json(cfg);
  write_json(fs::path(g.out) / "experiment.json", j);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Causal model selection for treatment-effect models under domain shift"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config JSON");
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (overrides config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::size_t nodes = 10;
  std::size_t max_edges = 0;
  auto* gen_dag = app.add_subcommand("gen-dag", "Draw a random causal graph");
  gen_dag->add_option("--nodes", nodes, "Number of nodes")->capture_default_str();
  auto* max_edges_opt = gen_dag->add_option("--max-edges", max_edges, "Edge cap (default n(n-1)/2)");

  std::string graph_path;
  std::vector<std::string> perturb;
  auto* gen_data = app.add_subcommand("gen-data", "Generate source and shifted target samples");
  gen_data->add_option("--graph", graph_path, "Weighted graph JSON")->required();
  gen_data->add_option("--perturb", perturb, "Node names to shift (default: random ancestors of Y)")
      ->delimiter(',');

  std::string train_path, train_meta, predict_path, predict_meta, zoo_graph;
  auto* fit = app.add_subcommand("fit-zoo", "Fit the candidate model zoo");
  fit->add_option("--train", train_path, "Training CSV")->required();
  fit->add_option("--train-meta", train_meta, "Metadata for --train");
  fit->add_option("--graph", zoo_graph, "Weighted graph enabling the oracle families");
  fit->add_option("--predict", predict_path, "CSV to predict potential outcomes on");
  fit->add_option("--predict-meta", predict_meta, "Metadata for --predict");

  RankInputs rank_in;
  std::string risk_name;
  bool with_nci = false;
  auto* rank = app.add_subcommand("rank", "Rank the zoo by ICMS score");
  add_rank_options(rank, rank_in);
  rank->add_option("--risk", risk_name, "Validation risk, e.g. mse, iptw, dev(mse)");
  rank->add_flag("--nci", with_nci, "Also report the NCI count per model");

  RankInputs eval_in;
  std::string truth_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score every selection method against the truth");
  add_rank_options(evaluate, eval_in);
  evaluate->add_option("--truth", truth_path, "Evaluation-only potential outcomes CSV")->required();

  auto* sl = app.add_subcommand("sweep-lambda", "Lambda sensitivity sweep");
  auto* sm = app.add_subcommand("sweep-misspec", "Graph misspecification sweep");
  auto* ss = app.add_subcommand("sweep-subgraph", "Known outcome-parent subgraph sweep");
  auto* ex = app.add_subcommand("experiment", "Full synthetic benchmark");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  g.seed_given = static_cast<bool>(*seed_opt);

  if (*gen_dag) {
    return cmd_gen_dag(g, nodes, *max_edges_opt ? std::optional(max_edges) : std::nullopt);
  }
  if (*gen_data) return cmd_gen_data(g, graph_path, perturb);
  if (*fit) return cmd_fit_zoo(g, train_path, train_meta, zoo_graph, predict_path, predict_meta);
  if (*rank) return cmd_rank(g, rank_in, risk_name, with_nci);
  if (*evaluate) return cmd_evaluate(g, eval_in, truth_path);
  if (*sl) {
    const auto cfg = load_config(g);
    write_sweep(g, "sweep_lambda", sweep_lambda(cfg, cfg.sweep_lambdas), cfg);
    return 0;
  }
  if (*sm) {
    const auto cfg = load_config(g);
    write_sweep(g, "sweep_misspec", sweep_misspec(cfg, cfg.sweep_fractions, cfg.sweep_mode), cfg);
    return 0;
  }
  if (*ss) {
    const auto cfg = load_config(g);
    write_sweep(g, "sweep_subgraph", sweep_subgraph(cfg, cfg.sweep_kept), cfg);
    return 0;
  }
  if (*ex) return cmd_experiment(g);
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_config_error() ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
