#include "icms/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace icms::linalg {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::VectorXd ols_residuals(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  if (x.cols() == 0) return y.array() - y.mean();
  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::VectorXd beta = qr.solve(y);
  return y - design * beta;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / std::max(n, 1.0);
    s.scale(j) = var > 0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

LinearFit ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double penalty) {
  LinearFit fit;
  const double y_mean = y.mean();
  if (x.cols() == 0) {
    fit.intercept = y_mean;
    fit.coef = Eigen::VectorXd(0);
    return fit;
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += penalty;
  fit.coef = gram.ldlt().solve(xc.transpose() * yc);
  fit.intercept = y_mean - x_mean.dot(fit.coef);
  return fit;
}

LinearFit standardized_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double penalty) {
  const Standardizer s = Standardizer::fit(x);
  LinearFit z = ridge(s.apply(x), y, penalty);
  LinearFit out;
  out.coef = z.coef.array() / s.scale.transpose().array();
  out.intercept = z.intercept - s.mean.dot(out.coef);
  return out;
}

namespace {

double penalised_nll(const Eigen::MatrixXd& z, const Eigen::VectorXd& labels, double b0,
                     const Eigen::VectorXd& b, double l2) {
  const Eigen::VectorXd eta = (z * b).array() + b0;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) - y * eta, computed stably.
    const double e = eta(i);
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    nll += softplus - labels(i) * e;
  }
  return nll + 0.5 * l2 * b.squaredNorm();
}

}  // namespace

LogisticModel LogisticModel::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& labels,
                                 double l2, int max_iter) {
  LogisticModel m;
  m.standardizer_ = Standardizer::fit(x);
  const Eigen::MatrixXd z = m.standardizer_.apply(x);
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = z;

  const double prevalence = std::clamp(labels.mean(), 1e-6, 1.0 - 1e-6);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  beta(0) = std::log(prevalence / (1.0 - prevalence));

  auto objective = [&](const Eigen::VectorXd& bt) {
    return penalised_nll(z, labels, bt(0), bt.tail(p), l2);
  };
  double current = objective(beta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = sigmoid(eta(i));
      w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-12);
    }
    Eigen::VectorXd grad = design.transpose() * (mu - labels);
    grad.tail(p) += l2 * beta.tail(p);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal().tail(p).array() += l2;
    hess(0, 0) += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);

    double scale = 1.0;
    Eigen::VectorXd next = beta - step;
    double value = objective(next);
    while (value > current && scale > 1e-8) {
      scale *= 0.5;
      next = beta - scale * step;
      value = objective(next);
    }
    const double improvement = current - value;
    if (value <= current) {
      beta = next;
      current = value;
    }
    if (improvement < 1e-10 * (1.0 + std::abs(current))) break;
  }
  m.intercept_ = beta(0);
  m.coef_ = beta.tail(p);
  return m;
}

Eigen::VectorXd LogisticModel::predict_proba(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = (standardizer_.apply(x) * coef_).array() + intercept_;
  return eta.unaryExpr([](double e) { return sigmoid(e); });
}

}  // namespace icms::linalg
