#include "icms/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "icms/error.hpp"
#include "icms/io.hpp"
#include "icms/rng.hpp"

namespace icms {

namespace {

// Runs f(0..n-1) on up to `threads` workers. Results must be written by
// index; the exception of the lowest failing index is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(n));
  for (unsigned k = 0; k < count; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

const double& lookup(const std::map<std::string, double>& table, const std::string& id) {
  auto it = table.find(id);
  if (it == table.end()) fail(ErrorCode::kInvalidArgument, "no true PEHE for model " + id);
  return it->second;
}

void attach_truth(std::vector<ScoreReport>& reports, const std::map<std::string, double>& truth) {
  for (auto& r : reports) r.true_pehe = lookup(truth, r.model_id);
}

double unit_pehe10(const DagUnit& unit, const std::vector<double>& v_r,
                   const std::vector<double>& c_r, double lambda) {
  const auto reports = rank_scores(unit.model_ids, v_r, c_r, lambda);
  return pehe_top_decile(reports, unit.true_pehe, true);
}

void flush_record(const ExperimentConfig& cfg, const DagRecord& record) {
  if (!cfg.output_dir) return;
  const auto dir = *cfg.output_dir / "dags";
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof(name), "dag_%03zu.json", record.index);
  write_json(dir / name, to_json(record));
}

std::vector<std::size_t> sorted_rows(std::vector<std::size_t> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

double pehe(const Eigen::VectorXd& cate_hat, const Eigen::VectorXd& cate_true) {
  if (cate_hat.size() != cate_true.size()) {
    fail(ErrorCode::kLengthMismatch, "CATE vectors differ in length");
  }
  if (cate_hat.size() == 0) fail(ErrorCode::kEmptyInput, "PEHE of an empty sample");
  return (cate_true - cate_hat).squaredNorm() / static_cast<double>(cate_hat.size());
}

std::size_t top_decile_size(std::size_t n_models) { return std::max<std::size_t>(1, n_models / 10); }

double pehe_top_decile(std::span<const ScoreReport> ranked,
                       const std::map<std::string, double>& true_pehe, bool normalize) {
  if (ranked.empty()) fail(ErrorCode::kEmptyInput, "no ranked models");
  std::vector<double> values;
  values.reserve(ranked.size());
  for (const auto& r : ranked) values.push_back(lookup(true_pehe, r.model_id));
  if (normalize) values = minmax_normalize(values);
  const std::size_t k = top_decile_size(ranked.size());
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
         static_cast<double>(k);
}

double inversion_count_normalized(std::span<const ScoreReport> ranked,
                                  const std::map<std::string, double>& true_pehe) {
  const std::size_t n = ranked.size();
  if (n < 2) fail(ErrorCode::kTooFewModels, "inversion count needs at least two models");
  std::vector<double> values;
  values.reserve(n);
  for (const auto& r : ranked) values.push_back(lookup(true_pehe, r.model_id));
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (values[i] > values[j]) ++inversions;
    }
  }
  return static_cast<double>(inversions) / (static_cast<double>(n) * (n - 1) / 2.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::kLengthMismatch, "spearman inputs differ in length");
  if (x.size() < 2) fail(ErrorCode::kEmptyInput, "spearman needs two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  // A constant input carries no ordering information.
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

double LambdaPolicy::resolve(const CausalDag& g, const CausalDag& prior,
                             const CausalDag& discovered) const {
  if (kind == Kind::kFixed) return value;
  return lambda_from_graphs(g, prior, discovered);
}

std::string LambdaPolicy::name() const {
  if (kind == Kind::kEdgeRatio) return "edge_ratio";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "fixed(%g)", value);
  return buf;
}

void ExperimentConfig::validate() const {
  DgpConfig probe = dgp;
  probe.n_nodes = std::max<std::size_t>(min_nodes, 3);
  probe.validate();
  if (min_nodes < 3 || min_nodes > max_nodes) {
    fail(ErrorCode::kConfig, "node range must satisfy 3 <= min_nodes <= max_nodes");
  }
  if (n_dags == 0) fail(ErrorCode::kConfig, "n_dags must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail(ErrorCode::kConfig, "validation_fraction must lie in (0, 1)");
  }
  if (methods.empty()) fail(ErrorCode::kConfig, "at least one selection method is required");
  if (lambda.kind == LambdaPolicy::Kind::kFixed && !(lambda.value >= 0.0)) {
    fail(ErrorCode::kConfig, "lambda must be non-negative");
  }
  if (zoo.size() < 2) fail(ErrorCode::kConfig, "the zoo needs at least two models");
  if (threads == 0) fail(ErrorCode::kConfig, "threads must be at least 1");
}

DagUnit prepare_dag(const ExperimentConfig& cfg, std::size_t index) {
  DagUnit unit;
  unit.index = index;
  unit.seed = derive_seed(cfg.seed, {index});

  Rng size_rng(derive_seed(unit.seed, {1}));
  const auto n = static_cast<std::size_t>(size_rng.between(
      static_cast<std::int64_t>(cfg.min_nodes), static_cast<std::int64_t>(cfg.max_nodes)));
  const std::size_t full = n * (n - 1) / 2;
  const std::size_t max_edges = cfg.max_edges ? std::min(*cfg.max_edges, full) : full;
  unit.dag = std::make_shared<const CausalDag>(
      random_dag(n, max_edges, derive_seed(unit.seed, {0}), cfg.dgp.weights));

  DgpConfig dgp = cfg.dgp;
  dgp.n_nodes = n;
  dgp.seed = derive_seed(unit.seed, {2});
  const Dataset source = gen_obs_data(*unit.dag, dgp);
  unit.perturbed = random_perturb_set(*unit.dag, derive_seed(unit.seed, {4}));
  dgp.seed = derive_seed(unit.seed, {3});
  TargetSample target = gen_treat_data(*unit.dag, dgp, unit.perturbed);
  unit.truth = std::move(target.truth);
  unit.perturb_mean = target.perturb_mean;
  unit.target_x = target.data.covariates();

  Rng split_rng(derive_seed(unit.seed, {5}));
  const auto perm = split_rng.permutation(source.rows());
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.validation_fraction * static_cast<double>(source.rows())));
  unit.val = source.subset_rows(
      sorted_rows(std::vector<std::size_t>(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val))));
  unit.train = source.subset_rows(
      sorted_rows(std::vector<std::size_t>(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end())));

  const auto specs = expand_grid(cfg.zoo, unit.dag);
  unit.models = fit_zoo(specs, unit.train, derive_seed(unit.seed, {6}));
  for (const auto& m : unit.models) {
    if (unit.true_pehe.contains(m.id())) {
      fail(ErrorCode::kConfig, "duplicate model id " + m.id() + " in the zoo");
    }
    unit.model_ids.push_back(m.id());
    unit.true_pehe[m.id()] = pehe(predict_po(m, unit.target_x).cate, unit.truth.cate);
  }
  unit.risk_inputs.propensity = fit_propensity(unit.train, cfg.propensity_clip, cfg.propensity_l2);
  unit.risk_inputs.weights =
      density_ratio(unit.val.covariates(), unit.target_x, cfg.weight_clip, cfg.discriminator_l2);
  return unit;
}

std::vector<DagUnit> prepare_units(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<DagUnit> units(cfg.n_dags);
  parallel_for(cfg.n_dags, cfg.threads, [&](std::size_t i) { units[i] = prepare_dag(cfg, i); });
  return units;
}

std::vector<double> unit_validation_risk(DagUnit& unit, ValidationRisk kind) {
  return validation_risks(unit.models, unit.val, unit.target_x, kind, unit.risk_inputs);
}

std::vector<double> unit_causal_risk(const DagUnit& unit, const CausalDag& graph) {
  const auto [t, y] = graph.require_roles();
  (void)y;
  return causal_risks(unit.models, unit.target_x, mutilate(graph, t));
}

DagRecord evaluate_unit(const ExperimentConfig& cfg, DagUnit& unit) {
  DagRecord record;
  record.index = unit.index;
  record.seed = unit.seed;
  record.n_nodes = unit.dag->num_nodes();
  record.n_edges = unit.dag->num_edges();
  record.perturb_mean = unit.perturb_mean;
  for (NodeId p : unit.perturbed) record.perturbed.push_back(unit.dag->node(p).name);
  record.true_pehe = unit.true_pehe;

  const double lambda = cfg.lambda.resolve(*unit.dag, *unit.dag, *unit.dag);
  const auto c_r = unit_causal_risk(unit, *unit.dag);
  std::vector<MethodRecord> wrapped;
  for (const auto& method : cfg.methods) {
    const auto v_r = unit_validation_risk(unit, method);
    for (bool icms : {false, true}) {
      MethodRecord m;
      m.baseline = method.name();
      m.name = icms ? "icms(" + m.baseline + ")" : m.baseline;
      m.icms = icms;
      m.lambda = icms ? lambda : 0.0;
      m.reports = rank_scores(unit.model_ids, v_r, c_r, m.lambda);
      attach_truth(m.reports, unit.true_pehe);
      m.pehe10 = pehe_top_decile(m.reports, unit.true_pehe, true);
      m.inversion = inversion_count_normalized(m.reports, unit.true_pehe);
      (icms ? wrapped : record.methods).push_back(std::move(m));
    }
  }
  for (auto& m : wrapped) record.methods.push_back(std::move(m));
  return record;
}

ExperimentReport aggregate(std::vector<DagRecord> dags) {
  ExperimentReport report;
  report.dags = std::move(dags);
  if (report.dags.empty()) return report;
  const auto& first = report.dags.front().methods;
  for (std::size_t k = 0; k < first.size(); ++k) {
    std::vector<double> p, inv;
    for (const auto& d : report.dags) {
      p.push_back(d.methods.at(k).pehe10);
      inv.push_back(d.methods.at(k).inversion);
    }
    report.aggregates.push_back({first[k].name, summarize(p), summarize(inv)});
  }
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (!first[k].icms) continue;
    std::size_t base = first.size();
    for (std::size_t j = 0; j < first.size(); ++j) {
      if (!first[j].icms && first[j].name == first[k].baseline) base = j;
    }
    if (base == first.size()) continue;
    std::vector<double> dp, di;
    for (const auto& d : report.dags) {
      dp.push_back(d.methods.at(k).pehe10 - d.methods.at(base).pehe10);
      di.push_back(d.methods.at(k).inversion - d.methods.at(base).inversion);
    }
    report.comparisons.push_back({first[base].name, first[k].name, summarize(dp), summarize(di)});
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<DagRecord> records(cfg.n_dags);
  parallel_for(cfg.n_dags, cfg.threads, [&](std::size_t i) {
    DagUnit unit = prepare_dag(cfg, i);
    records[i] = evaluate_unit(cfg, unit);
    flush_record(cfg, records[i]);
  });
  return aggregate(std::move(records));
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::vector<DagUnit>& units) {
  cfg.validate();
  std::vector<DagRecord> records(units.size());
  parallel_for(units.size(), cfg.threads, [&](std::size_t i) {
    records[i] = evaluate_unit(cfg, units[i]);
    flush_record(cfg, records[i]);
  });
  return aggregate(std::move(records));
}

namespace {

// per_point[p][d] holds the value of point p on graph d.
void fill_points(SweepReport& report, std::span<const double> params,
                 const std::vector<std::vector<double>>& per_point,
                 const std::vector<std::vector<double>>& deltas) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    CurvePoint point;
    point.parameter = params[p];
    point.per_dag = per_point[p];
    point.pehe10 = summarize(per_point[p]);
    point.delta = summarize(deltas[p]);
    report.points.push_back(std::move(point));
  }
}

std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& by_dag,
                                           std::size_t points) {
  std::vector<std::vector<double>> out(points, std::vector<double>(by_dag.size()));
  for (std::size_t d = 0; d < by_dag.size(); ++d) {
    for (std::size_t p = 0; p < points; ++p) out[p][d] = by_dag[d][p];
  }
  return out;
}

}  // namespace

SweepReport sweep_lambda(const ExperimentConfig& cfg, std::span<const double> lambdas) {
  auto units = prepare_units(cfg);
  return sweep_lambda(cfg, units, lambdas);
}

SweepReport sweep_lambda(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                         std::span<const double> lambdas) {
  if (lambdas.empty()) fail(ErrorCode::kConfig, "no lambda values to sweep");
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::kConfig, "lambda values must be >= 0");
  }
  SweepReport report;
  report.kind = "lambda";
  report.risk = cfg.sweep_risk.name();
  report.baseline_per_dag.resize(units.size());
  std::vector<std::vector<double>> values(units.size()), deltas(units.size());
  parallel_for(units.size(), cfg.threads, [&](std::size_t d) {
    const auto v = unit_validation_risk(units[d], cfg.sweep_risk);
    const auto c = unit_causal_risk(units[d], *units[d].dag);
    const double base = unit_pehe10(units[d], v, c, 0.0);
    report.baseline_per_dag[d] = base;
    for (double l : lambdas) {
      values[d].push_back(unit_pehe10(units[d], v, c, l));
      deltas[d].push_back(values[d].back() - base);
    }
  });
  report.baseline = summarize(report.baseline_per_dag);
  fill_points(report, lambdas, transpose(values, lambdas.size()), transpose(deltas, lambdas.size()));
  return report;
}

SweepReport sweep_misspec(const ExperimentConfig& cfg, std::span<const double> fractions,
                          PerturbMode mode) {
  auto units = prepare_units(cfg);
  return sweep_misspec(cfg, units, fractions, mode);
}

SweepReport sweep_misspec(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                          std::span<const double> fractions, PerturbMode mode) {
  if (fractions.empty()) fail(ErrorCode::kConfig, "no fractions to sweep");
  SweepReport report;
  report.kind = "misspec";
  report.risk = cfg.sweep_risk.name();
  report.mode = std::string(perturb_mode_name(mode));
  report.baseline_per_dag.resize(units.size());
  std::vector<std::vector<double>> values(units.size()), deltas(units.size());
  parallel_for(units.size(), cfg.threads, [&](std::size_t d) {
    DagUnit& unit = units[d];
    const CausalDag& truth = *unit.dag;
    const auto v = unit_validation_risk(unit, cfg.sweep_risk);
    report.baseline_per_dag[d] = unit_pehe10(unit, v, unit_causal_risk(unit, truth), 0.0);
    const double reference = unit_pehe10(unit, v, unit_causal_risk(unit, truth),
                                         cfg.lambda.resolve(truth, truth, truth));
    for (std::size_t k = 0; k < fractions.size(); ++k) {
      const CausalDag g = perturb_graph(truth, fractions[k], mode, derive_seed(unit.seed, {7, k}));
      const double value =
          unit_pehe10(unit, v, unit_causal_risk(unit, g), cfg.lambda.resolve(g, truth, truth));
      values[d].push_back(value);
      deltas[d].push_back(value - reference);
    }
  });
  report.baseline = summarize(report.baseline_per_dag);
  const auto by_point = transpose(deltas, fractions.size());
  fill_points(report, fractions, transpose(values, fractions.size()), by_point);
  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    for (double delta : by_point[p]) {
      xs.push_back(fractions[p]);
      ys.push_back(delta);
    }
  }
  if (xs.size() >= 2) report.spearman = spearman(xs, ys);
  return report;
}

CausalDag outcome_subgraph(const CausalDag& dag, double kept, std::uint64_t seed) {
  if (!(kept >= 0.0 && kept <= 1.0)) fail(ErrorCode::kInvalidArgument, "kept must lie in [0, 1]");
  const auto [t, y] = dag.require_roles();
  std::vector<NodeId> features;
  for (NodeId p : dag.parents(y)) {
    if (p != t) features.push_back(p);
  }
  Rng rng(seed);
  rng.shuffle(features);
  const auto keep = static_cast<std::size_t>(
      std::ceil(kept * static_cast<double>(features.size()) - 1e-9));
  std::set<NodeId> dropped(features.begin() + static_cast<std::ptrdiff_t>(keep), features.end());
  std::vector<Edge> edges;
  for (const auto& e : dag.edges()) {
    if (e.dst == y && dropped.contains(e.src)) continue;
    edges.push_back(e);
  }
  return with_edges(dag, std::move(edges));
}

SweepReport sweep_subgraph(const ExperimentConfig& cfg, std::span<const double> kept_fractions) {
  auto units = prepare_units(cfg);
  return sweep_subgraph(cfg, units, kept_fractions);
}

SweepReport sweep_subgraph(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                           std::span<const double> kept_fractions) {
  if (kept_fractions.empty()) fail(ErrorCode::kConfig, "no kept fractions to sweep");
  SweepReport report;
  report.kind = "subgraph";
  report.risk = cfg.sweep_risk.name();
  report.baseline_per_dag.resize(units.size());
  std::vector<std::vector<double>> values(units.size()), deltas(units.size());
  parallel_for(units.size(), cfg.threads, [&](std::size_t d) {
    DagUnit& unit = units[d];
    const CausalDag& truth = *unit.dag;
    const auto v = unit_validation_risk(unit, cfg.sweep_risk);
    const double base = unit_pehe10(unit, v, unit_causal_risk(unit, truth), 0.0);
    report.baseline_per_dag[d] = base;
    for (double kept : kept_fractions) {
      const CausalDag g = outcome_subgraph(truth, kept, derive_seed(unit.seed, {8}));
      const double value =
          unit_pehe10(unit, v, unit_causal_risk(unit, g), cfg.lambda.resolve(g, truth, truth));
      values[d].push_back(value);
      deltas[d].push_back(value - base);
    }
  });
  report.baseline = summarize(report.baseline_per_dag);
  fill_points(report, kept_fractions, transpose(values, kept_fractions.size()),
              transpose(deltas, kept_fractions.size()));
  return report;
}

}  // namespace icms
