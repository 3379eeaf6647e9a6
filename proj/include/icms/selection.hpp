#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icms/dataset.hpp"
#include "icms/graph.hpp"
#include "icms/risks.hpp"
#include "icms/zoo.hpp"

namespace icms {

struct ScoreReport {
  std::string model_id;
  double v_r_raw = 0.0;
  double c_r_raw = 0.0;
  double v_r_norm = 0.0;
  double c_r_norm = 0.0;
  double lambda = 0.0;
  double icms = 0.0;
  int rank = 0;
  std::optional<double> true_pehe;
};

// |E(g)| / |E(g_prior) U E(g_discovered)|, or 1 when the union is empty.
double lambda_from_graphs(const CausalDag& g, const CausalDag& g_prior,
                          const CausalDag& g_discovered);

// (v - min) / (max - min); all zeros when the range is degenerate.
std::vector<double> minmax_normalize(std::span<const double> values);

inline double icms_score(double v_norm, double c_norm, double lambda) {
  return v_norm + lambda * c_norm;
}

enum class LossKind { kMse, kIptw };
enum class Adaptation { kNone, kIwcv, kDev };

// Which validation risk v_r a ranking uses, e.g. "mse", "iptw", "dev(mse)".
struct ValidationRisk {
  LossKind loss = LossKind::kMse;
  Adaptation adaptation = Adaptation::kNone;

  std::string name() const;
  static ValidationRisk parse(std::string_view name);
  friend bool operator==(const ValidationRisk&, const ValidationRisk&) = default;
};

// Fitted pieces v_r may need. Whatever is missing is estimated from the
// validation and target sets on demand.
struct RiskInputs {
  std::optional<PropensityModel> propensity;
  std::optional<ImportanceWeights> weights;
};

std::vector<double> validation_risks(std::span<const CandidateModel> models, const Dataset& val,
                                     const Dataset& target_x, ValidationRisk kind,
                                     RiskInputs& inputs);

// c_r for every model against an already mutilated graph.
std::vector<double> causal_risks(std::span<const CandidateModel> models, const Dataset& target_x,
                                 const CausalDag& mutilated_dag);

// Normalizes both risk vectors, scores, and returns reports in rank order
// (ascending score, ties by model id).
std::vector<ScoreReport> rank_scores(std::span<const std::string> model_ids,
                                     std::span<const double> v_r, std::span<const double> c_r,
                                     double lambda);

std::vector<ScoreReport> rank_models(std::span<const CandidateModel> models, const Dataset& val,
                                     const Dataset& target_x, const CausalDag& dag, double lambda,
                                     ValidationRisk kind, RiskInputs inputs = {});

}  // namespace icms
