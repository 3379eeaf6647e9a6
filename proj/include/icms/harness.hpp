#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icms/dgp.hpp"
#include "icms/risks.hpp"
#include "icms/selection.hpp"
#include "icms/zoo.hpp"

namespace icms {

// ---- metrics --------------------------------------------------------------

double pehe(const Eigen::VectorXd& cate_hat, const Eigen::VectorXd& cate_true);

// max(1, floor(n / 10))
std::size_t top_decile_size(std::size_t n_models);

// Mean true PEHE of the top-ranked decile. With `normalize`, true PEHEs are
// min-max normalized over the ranked models first.
double pehe_top_decile(std::span<const ScoreReport> ranked,
                       const std::map<std::string, double>& true_pehe, bool normalize);

// Share of model pairs the ranking orders against true PEHE. Ties in true
// PEHE never count as inversions.
double inversion_count_normalized(std::span<const ScoreReport> ranked,
                                  const std::map<std::string, double>& true_pehe);

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(n); 0 for a single value
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

// ---- experiment -----------------------------------------------------------

struct LambdaPolicy {
  enum class Kind { kFixed, kEdgeRatio };
  Kind kind = Kind::kFixed;
  double value = 1.0;

  double resolve(const CausalDag& g, const CausalDag& prior, const CausalDag& discovered) const;
  std::string name() const;
};

struct ExperimentConfig {
  // n_nodes is ignored; each graph draws its size from [min_nodes, max_nodes].
  DgpConfig dgp;
  std::size_t min_nodes = 8;
  std::size_t max_nodes = 12;
  std::optional<std::size_t> max_edges;  // n(n-1)/2 when unset
  ZooGrid zoo;
  std::vector<ValidationRisk> methods{
      {LossKind::kMse, Adaptation::kNone},  {LossKind::kIptw, Adaptation::kNone},
      {LossKind::kMse, Adaptation::kIwcv},  {LossKind::kMse, Adaptation::kDev},
      {LossKind::kIptw, Adaptation::kIwcv}, {LossKind::kIptw, Adaptation::kDev}};
  LambdaPolicy lambda;
  std::size_t n_dags = 20;
  double validation_fraction = 0.2;
  ClipBounds propensity_clip = kPropensityClip;
  ClipBounds weight_clip = kWeightClip;
  double propensity_l2 = 1e-2;
  double discriminator_l2 = 1.0;
  // Validation risk the sweeps wrap, and the swept values.
  ValidationRisk sweep_risk{LossKind::kMse, Adaptation::kDev};
  std::vector<double> sweep_lambdas{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> sweep_fractions{0.0, 0.1, 0.25, 0.5, 1.0};
  PerturbMode sweep_mode = PerturbMode::kReverse;
  std::vector<double> sweep_kept{0.25, 0.5, 0.75, 1.0};
  // Significance level of the NCI diagnostic.
  double ci_alpha = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Per-graph records are written to <output_dir>/dags as they finish.
  std::optional<std::filesystem::path> output_dir;

  void validate() const;
};

// Everything one synthetic graph contributes: data, fitted zoo and truth.
// Sweeps reuse these so data and models stay fixed across swept values.
struct DagUnit {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const CausalDag> dag;
  Dataset train;
  Dataset val;
  Dataset target_x;
  PotentialOutcomeTruth truth;
  std::set<NodeId> perturbed;
  double perturb_mean = 0.0;
  std::vector<CandidateModel> models;
  std::vector<std::string> model_ids;
  std::map<std::string, double> true_pehe;
  RiskInputs risk_inputs;
};

DagUnit prepare_dag(const ExperimentConfig& cfg, std::size_t index);
std::vector<DagUnit> prepare_units(const ExperimentConfig& cfg);

std::vector<double> unit_validation_risk(DagUnit& unit, ValidationRisk kind);
// c_r of every model under `graph` (mutilated here).
std::vector<double> unit_causal_risk(const DagUnit& unit, const CausalDag& graph);

struct MethodRecord {
  std::string name;       // e.g. "dev(mse)" or "icms(dev(mse))"
  std::string baseline;   // the v_r it wraps; equal to name for baselines
  bool icms = false;
  double lambda = 0.0;
  double pehe10 = 0.0;    // normalized
  double inversion = 0.0;
  std::vector<ScoreReport> reports;
};

struct DagRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double perturb_mean = 0.0;
  std::vector<std::string> perturbed;
  std::map<std::string, double> true_pehe;
  std::vector<MethodRecord> methods;
};

struct MethodAggregate {
  std::string name;
  Summary pehe10;
  Summary inversion;
};

// ICMS-wrapped minus baseline, paired over graphs.
struct PairedComparison {
  std::string baseline;
  std::string icms;
  Summary pehe10_diff;
  Summary inversion_diff;
};

struct ExperimentReport {
  std::vector<DagRecord> dags;
  std::vector<MethodAggregate> aggregates;
  std::vector<PairedComparison> comparisons;
};

DagRecord evaluate_unit(const ExperimentConfig& cfg, DagUnit& unit);
ExperimentReport aggregate(std::vector<DagRecord> dags);
ExperimentReport run_experiment(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::vector<DagUnit>& units);

// ---- sweeps ---------------------------------------------------------------

struct CurvePoint {
  double parameter = 0.0;
  Summary pehe10;             // ICMS at this parameter
  Summary delta;              // against the reference curve point, per graph
  std::vector<double> per_dag;
};

struct SweepReport {
  std::string kind;   // "lambda", "misspec", "subgraph"
  std::string risk;   // validation risk being wrapped
  std::string mode;   // misspec only
  Summary baseline;   // lambda = 0
  std::vector<double> baseline_per_dag;
  std::vector<CurvePoint> points;
  std::optional<double> spearman;  // misspec: delta vs fraction, pooled
};

SweepReport sweep_lambda(const ExperimentConfig& cfg, std::span<const double> lambdas);
SweepReport sweep_lambda(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                         std::span<const double> lambdas);

// delta = PEHE-10 under the perturbed graph minus PEHE-10 under the true one.
SweepReport sweep_misspec(const ExperimentConfig& cfg, std::span<const double> fractions,
                          PerturbMode mode);
SweepReport sweep_misspec(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                          std::span<const double> fractions, PerturbMode mode);

// Keeps ceil(kept * k) of the k feature->outcome edges (a nested prefix of one
// seeded order) and always the treatment->outcome edge. delta is against the
// baseline.
CausalDag outcome_subgraph(const CausalDag& dag, double kept, std::uint64_t seed);
SweepReport sweep_subgraph(const ExperimentConfig& cfg, std::span<const double> kept_fractions);
SweepReport sweep_subgraph(const ExperimentConfig& cfg, std::vector<DagUnit>& units,
                           std::span<const double> kept_fractions);

}  // namespace icms
