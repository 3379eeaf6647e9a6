#include "icms/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "icms/error.hpp"
#include "icms/fitness.hpp"

namespace icms {

namespace {

std::set<std::pair<NodeId, std::string>> node_keys(const CausalDag& g) {
  std::set<std::pair<NodeId, std::string>> out;
  for (const auto& n : g.nodes()) out.emplace(n.id, n.name);
  return out;
}

}  // namespace

double lambda_from_graphs(const CausalDag& g, const CausalDag& g_prior,
                          const CausalDag& g_discovered) {
  const auto keys = node_keys(g);
  if (keys != node_keys(g_prior) || keys != node_keys(g_discovered)) {
    fail(ErrorCode::kNodeSetMismatch, "lambda needs three graphs over the same nodes");
  }
  auto edges = g_prior.edge_set();
  const auto discovered = g_discovered.edge_set();
  edges.insert(discovered.begin(), discovered.end());
  if (edges.empty()) return 1.0;
  return static_cast<double>(g.num_edges()) / static_cast<double>(edges.size());
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "nothing to normalize");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "cannot normalize non-finite value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.0);
  const double range = *hi - *lo;
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  }
  return out;
}

std::string ValidationRisk::name() const {
  const std::string base = loss == LossKind::kMse ? "mse" : "iptw";
  switch (adaptation) {
    case Adaptation::kNone:
      return base;
    case Adaptation::kIwcv:
      return "iwcv(" + base + ")";
    case Adaptation::kDev:
      return "dev(" + base + ")";
  }
  return base;
}

ValidationRisk ValidationRisk::parse(std::string_view name) {
  for (auto loss : {LossKind::kMse, LossKind::kIptw}) {
    for (auto adaptation : {Adaptation::kNone, Adaptation::kIwcv, Adaptation::kDev}) {
      const ValidationRisk candidate{loss, adaptation};
      if (candidate.name() == name) return candidate;
    }
  }
  fail(ErrorCode::kConfig, "unknown validation risk '" + std::string(name) + "'");
}

std::vector<double> validation_risks(std::span<const CandidateModel> models, const Dataset& val,
                                     const Dataset& target_x, ValidationRisk kind,
                                     RiskInputs& inputs) {
  if (kind.loss == LossKind::kIptw && !inputs.propensity) {
    inputs.propensity = fit_propensity(val);
  }
  if (kind.adaptation != Adaptation::kNone && !inputs.weights) {
    inputs.weights = density_ratio(val.covariates(), target_x.covariates());
  }
  std::vector<double> out;
  out.reserve(models.size());
  for (const auto& m : models) {
    const SampleLoss loss = kind.loss == LossKind::kMse ? factual_mse(m, val)
                                                        : iptw_risk(m, val, *inputs.propensity);
    switch (kind.adaptation) {
      case Adaptation::kNone:
        out.push_back(loss.values.mean());
        break;
      case Adaptation::kIwcv:
        out.push_back(iwcv_risk(loss, *inputs.weights));
        break;
      case Adaptation::kDev:
        out.push_back(dev_risk(loss, *inputs.weights));
        break;
    }
  }
  return out;
}

std::vector<double> causal_risks(std::span<const CandidateModel> models, const Dataset& target_x,
                                 const CausalDag& mutilated_dag) {
  std::vector<double> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(causal_risk(m, target_x, mutilated_dag));
  return out;
}

std::vector<ScoreReport> rank_scores(std::span<const std::string> model_ids,
                                     std::span<const double> v_r, std::span<const double> c_r,
                                     double lambda) {
  if (model_ids.empty()) fail(ErrorCode::kEmptyInput, "no models to rank");
  if (v_r.size() != model_ids.size() || c_r.size() != model_ids.size()) {
    fail(ErrorCode::kLengthMismatch, "one risk per model is required");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::kInvalidArgument, "lambda must be finite and non-negative");
  }
  if (std::set<std::string>(model_ids.begin(), model_ids.end()).size() != model_ids.size()) {
    fail(ErrorCode::kInvalidArgument, "model ids must be unique");
  }
  const auto v_norm = minmax_normalize(v_r);
  const auto c_norm = minmax_normalize(c_r);
  std::vector<ScoreReport> reports(model_ids.size());
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    auto& r = reports[i];
    r.model_id = model_ids[i];
    r.v_r_raw = v_r[i];
    r.c_r_raw = c_r[i];
    r.v_r_norm = v_norm[i];
    r.c_r_norm = c_norm[i];
    r.lambda = lambda;
    r.icms = icms_score(v_norm[i], c_norm[i], lambda);
  }
  std::sort(reports.begin(), reports.end(), [](const ScoreReport& a, const ScoreReport& b) {
    if (a.icms != b.icms) return a.icms < b.icms;
    return a.model_id < b.model_id;
  });
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = static_cast<int>(i) + 1;
  return reports;
}

std::vector<ScoreReport> rank_models(std::span<const CandidateModel> models, const Dataset& val,
                                     const Dataset& target_x, const CausalDag& dag, double lambda,
                                     ValidationRisk kind, RiskInputs inputs) {
  if (models.empty()) fail(ErrorCode::kEmptyInput, "no models to rank");
  const auto [t, y] = dag.require_roles();
  (void)y;
  const CausalDag interventional = mutilate(dag, t);
  const auto v_r = validation_risks(models, val, target_x, kind, inputs);
  const auto c_r = causal_risks(models, target_x, interventional);
  std::vector<std::string> ids;
  ids.reserve(models.size());
  for (const auto& m : models) ids.push_back(m.id());
  return rank_scores(ids, v_r, c_r, lambda);
}

}  // namespace icms
