#pragma once

#include <Eigen/Dense>

namespace icms::linalg {

// Residuals of an ordinary least-squares fit of y on [1, X]. With zero
// columns this is y minus its mean.
Eigen::VectorXd ols_residuals(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Per-column mean and standard deviation (population). Zero deviations are
// replaced by 1 so constant columns standardize to 0.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// y ~ intercept + x * coef. The penalty acts on coef only.
struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    return (x * coef).array() + intercept;
  }
};

LinearFit ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double penalty);

// Ridge fitted on standardized columns, mapped back to the raw scale.
LinearFit standardized_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double penalty);

// L2-penalised logistic regression fitted by damped Newton iterations on
// standardized features.
class LogisticModel {
 public:
  static LogisticModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels, double l2,
                           int max_iter = 100);

  // P(label = 1 | x) for each row.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;

  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coef() const { return coef_; }

 private:
  Standardizer standardizer_;
  double intercept_ = 0.0;
  Eigen::VectorXd coef_;
};

double sigmoid(double z);

}  // namespace icms::linalg
