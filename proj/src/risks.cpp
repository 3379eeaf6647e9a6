#include "icms/risks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "icms/error.hpp"

namespace icms {

namespace {

struct Factual {
  Eigen::VectorXd t;
  Eigen::VectorXd y;
};

Factual factual_columns(const Dataset& data) {
  if (!data.treatment()) fail(ErrorCode::kSchemaMismatch, "validation data has no treatment");
  if (!data.outcome()) fail(ErrorCode::kMissingOutcome, "validation data has no outcome");
  const auto& t = data.column(*data.treatment()).values;
  const auto& y = data.column(*data.outcome()).values;
  const auto n = static_cast<Eigen::Index>(data.rows());
  return {Eigen::Map<const Eigen::VectorXd>(t.data(), n),
          Eigen::Map<const Eigen::VectorXd>(y.data(), n)};
}

Eigen::VectorXd factual_squared_error(const CandidateModel& model, const Dataset& val,
                                      const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd x = model.feature_matrix(val);
  const Eigen::VectorXd y0 = model.predict_matrix(x, 0);
  const Eigen::VectorXd y1 = model.predict_matrix(x, 1);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pred = t(i) != 0.0 ? y1(i) : y0(i);
    out(i) = (y(i) - pred) * (y(i) - pred);
  }
  return out;
}

void check_lengths(const SampleLoss& losses, const ImportanceWeights& weights) {
  if (losses.values.size() != weights.values.size()) {
    fail(ErrorCode::kLengthMismatch, "losses and weights differ in length");
  }
  if (losses.values.size() == 0) fail(ErrorCode::kEmptyInput, "no validation samples");
}

}  // namespace

SampleLoss factual_mse(const CandidateModel& model, const Dataset& val) {
  const Factual f = factual_columns(val);
  return {factual_squared_error(model, val, f.t, f.y)};
}

Eigen::VectorXd PropensityModel::predict(const Dataset& data) const {
  for (const auto& name : features_) {
    if (!data.has_column(name)) {
      fail(ErrorCode::kSchemaMismatch, "propensity feature '" + name + "' missing");
    }
  }
  const Eigen::VectorXd p = model_.predict_proba(data.matrix(features_));
  return p.unaryExpr([this](double v) { return std::clamp(v, clip_.lo, clip_.hi); });
}

PropensityModel fit_propensity(const Dataset& train, ClipBounds clip, double l2) {
  if (!train.treatment()) fail(ErrorCode::kSchemaMismatch, "training data has no treatment");
  const auto& t = train.column(*train.treatment()).values;
  Eigen::VectorXd labels(static_cast<Eigen::Index>(t.size()));
  bool any0 = false;
  bool any1 = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != 0.0 && t[i] != 1.0) {
      fail(ErrorCode::kDegenerateTreatment, "treatment must be binary 0/1");
    }
    labels(static_cast<Eigen::Index>(i)) = t[i];
    (t[i] != 0.0 ? any1 : any0) = true;
  }
  if (!any0 || !any1) fail(ErrorCode::kDegenerateTreatment, "treatment takes a single value");
  std::vector<std::string> features = train.covariate_names();
  auto model = linalg::LogisticModel::fit(train.matrix(features), labels, l2);
  return PropensityModel(std::move(model), std::move(features), clip);
}

SampleLoss iptw_risk(const CandidateModel& model, const Dataset& val,
                     const PropensityModel& propensity) {
  const Factual f = factual_columns(val);
  Eigen::VectorXd loss = factual_squared_error(model, val, f.t, f.y);
  const Eigen::VectorXd p = propensity.predict(val);
  for (Eigen::Index i = 0; i < loss.size(); ++i) {
    loss(i) /= f.t(i) != 0.0 ? p(i) : 1.0 - p(i);
  }
  return {loss};
}

ImportanceWeights weights_from_probabilities(const Eigen::VectorXd& target_probability,
                                             std::size_t n_source, std::size_t n_target,
                                             ClipBounds clip) {
  if (n_target == 0) fail(ErrorCode::kEmptyDataset, "target set is empty");
  const double ratio = static_cast<double>(n_source) / static_cast<double>(n_target);
  ImportanceWeights w;
  w.clip = clip;
  w.values = target_probability.unaryExpr([&](double p) {
    const double odds = p >= 1.0 ? clip.hi : p / (1.0 - p);
    return std::clamp(odds * ratio, clip.lo, clip.hi);
  });
  return w;
}

ImportanceWeights density_ratio(const Dataset& source_x, const Dataset& target_x,
                                ClipBounds clip, double l2) {
  if (source_x.empty() || target_x.empty()) {
    fail(ErrorCode::kEmptyDataset, "density ratio needs non-empty source and target");
  }
  const std::vector<std::string> names = source_x.covariate_names();
  const std::vector<std::string> other = target_x.covariate_names();
  if (std::set<std::string>(names.begin(), names.end()) !=
      std::set<std::string>(other.begin(), other.end())) {
    fail(ErrorCode::kSchemaMismatch, "source and target covariates differ");
  }
  const Eigen::MatrixXd xs = source_x.matrix(names);
  const Eigen::MatrixXd xt = target_x.matrix(names);
  Eigen::MatrixXd x(xs.rows() + xt.rows(), xs.cols());
  x << xs, xt;
  Eigen::VectorXd labels(x.rows());
  labels.head(xs.rows()).setZero();
  labels.tail(xt.rows()).setOnes();
  const auto disc = linalg::LogisticModel::fit(x, labels, l2);
  return weights_from_probabilities(disc.predict_proba(xs), source_x.rows(), target_x.rows(),
                                    clip);
}

double iwcv_risk(const SampleLoss& losses, const ImportanceWeights& weights) {
  check_lengths(losses, weights);
  return losses.values.cwiseProduct(weights.values).mean();
}

double dev_risk(const SampleLoss& losses, const ImportanceWeights& weights) {
  check_lengths(losses, weights);
  const Eigen::VectorXd& w = weights.values;
  const Eigen::VectorXd wl = losses.values.cwiseProduct(w);
  const double n = static_cast<double>(w.size());
  const double mean_w = w.mean();
  const double mean_wl = wl.mean();
  double eta = 0.0;
  if (w.size() >= 2) {
    const double var_w = (w.array() - mean_w).square().sum() / (n - 1.0);
    if (var_w >= 1e-12) {
      const double cov = ((wl.array() - mean_wl) * (w.array() - mean_w)).sum() / (n - 1.0);
      eta = -cov / var_w;
    }
  }
  return mean_wl + eta * (mean_w - 1.0);
}

}  // namespace icms
