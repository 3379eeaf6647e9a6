#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "icms/dataset.hpp"
#include "icms/graph.hpp"
#include "icms/zoo.hpp"

namespace icms {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr int kEntropyBins = 4;

// H(child | parents) in nats.
//   discrete child, discrete parents: plug-in estimate from joint counts
//   continuous child: 0.5 ln(2 pi e s2), s2 = RSS / N of least squares on the
//     parents (categorical parents one-hot), floored at kVarianceFloor
//   discrete child, some continuous parent: those parents are cut into
//     kEntropyBins equal-frequency bins first
double conditional_entropy(const Dataset& data, const std::string& child,
                           std::span<const std::string> parents);

// -N * sum_i H(X_i | PA_i). Nodes map to columns by name.
double log_likelihood(const CausalDag& dag, const Dataset& data);

// (log2 N / 2) * (|nodes| + |edges|).
double bic_penalty(std::size_t n, const CausalDag& dag);
double bic_score(const CausalDag& dag, const Dataset& data);

// Target covariates stacked twice: first every row under t = 0 with the
// model's y(0), then every row under t = 1 with y(1).
struct AugmentedTargetSet {
  Dataset data;
  std::size_t source_size = 0;
};

AugmentedTargetSet augment_target(const CandidateModel& model, const Dataset& target_covariates);

// -log_likelihood(mutilated_dag, augment_target(model, target)).
double causal_risk(const CandidateModel& model, const Dataset& target_covariates,
                   const CausalDag& mutilated_dag);
double causal_risk(const AugmentedTargetSet& augmented, const CausalDag& mutilated_dag);

}  // namespace icms
