#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icms/dataset.hpp"
#include "icms/linalg.hpp"
#include "icms/zoo.hpp"

namespace icms {

struct ClipBounds {
  double lo = 0.0;
  double hi = 1.0;
};

inline constexpr ClipBounds kPropensityClip{0.05, 0.95};
inline constexpr ClipBounds kWeightClip{0.01, 100.0};

// Per-validation-sample losses.
struct SampleLoss {
  Eigen::VectorXd values;
};

// Per-validation-sample target/source density ratios.
struct ImportanceWeights {
  Eigen::VectorXd values;
  ClipBounds clip = kWeightClip;
};

// Anything producing per-sample validation losses for a model. The shipped
// producers are factual_mse and iptw_risk; other estimators plug in here.
using SampleLossFn = std::function<SampleLoss(const CandidateModel&, const Dataset&)>;

// (y_i - f(x_i, t_i))^2.
SampleLoss factual_mse(const CandidateModel& model, const Dataset& val);

// Logistic p(t = 1 | x) with clipped output.
class PropensityModel {
 public:
  PropensityModel(linalg::LogisticModel model, std::vector<std::string> features, ClipBounds clip)
      : model_(std::move(model)), features_(std::move(features)), clip_(clip) {}

  Eigen::VectorXd predict(const Dataset& data) const;
  const std::vector<std::string>& features() const { return features_; }

 private:
  linalg::LogisticModel model_;
  std::vector<std::string> features_;
  ClipBounds clip_;
};

PropensityModel fit_propensity(const Dataset& train, ClipBounds clip = kPropensityClip,
                               double l2 = 1e-2);

// Factual squared error divided by p(t_i | x_i).
SampleLoss iptw_risk(const CandidateModel& model, const Dataset& val,
                     const PropensityModel& propensity);

// w = p(d=1|x) / p(d=0|x) * (n_source / n_target), clipped.
ImportanceWeights weights_from_probabilities(const Eigen::VectorXd& target_probability,
                                             std::size_t n_source, std::size_t n_target,
                                             ClipBounds clip = kWeightClip);

// Fits a logistic source-vs-target discriminator on the covariates and
// returns weights at the source rows.
ImportanceWeights density_ratio(const Dataset& source_x, const Dataset& target_x,
                                ClipBounds clip = kWeightClip, double l2 = 1.0);

// mean(w * l)
double iwcv_risk(const SampleLoss& losses, const ImportanceWeights& weights);

// mean(w * l) + eta * (mean(w) - 1), eta = -Cov(w l, w) / Var(w); eta = 0
// when Var(w) < 1e-12.
double dev_risk(const SampleLoss& losses, const ImportanceWeights& weights);

}  // namespace icms
