#include "icms/independence.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "icms/error.hpp"
#include "icms/linalg.hpp"

namespace icms {

namespace {

constexpr double kDegenerateResidual = 1e-20;

const Column& numeric_column(const Dataset& data, const std::string& name) {
  const Column& c = data.column(name);
  if (c.kind == ColumnKind::kCategorical) {
    fail(ErrorCode::kNonNumericColumn, "column '" + name + "' is categorical");
  }
  return c;
}

Eigen::VectorXd as_vector(const Column& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.values.data(),
                                           static_cast<Eigen::Index>(c.values.size()));
}

// True when the residual carries no variation beyond rounding noise.
bool degenerate(const Eigen::VectorXd& raw, const Eigen::VectorXd& residual) {
  const double tss = (raw.array() - raw.mean()).square().sum();
  if (tss <= 0.0) return true;
  return residual.squaredNorm() <= kDegenerateResidual * tss;
}

}  // namespace

void CiTestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::kConfig, "alpha must lie in (0, 1)");
  }
  if (!(correlation_clamp > 0.0 && correlation_clamp < 1.0)) {
    fail(ErrorCode::kConfig, "correlation_clamp must lie in (0, 1)");
  }
}

CiTestResult fisher_z(const Dataset& data, const std::string& a, const std::string& b,
                      std::span<const std::string> given, const CiTestConfig& cfg,
                      std::optional<std::size_t> effective_n) {
  cfg.validate();
  if (a == b) fail(ErrorCode::kInvalidArgument, "CI test needs two distinct columns");
  if (std::find(given.begin(), given.end(), a) != given.end() ||
      std::find(given.begin(), given.end(), b) != given.end()) {
    fail(ErrorCode::kInvalidArgument, "CI test endpoints must not be conditioned on");
  }
  const std::size_t n = effective_n.value_or(data.rows());
  if (data.rows() <= given.size() + 3 || n <= given.size() + 3) {
    fail(ErrorCode::kInsufficientSamples,
         "need more than " + std::to_string(given.size() + 3) + " samples");
  }

  const Eigen::VectorXd va = as_vector(numeric_column(data, a));
  const Eigen::VectorXd vb = as_vector(numeric_column(data, b));
  Eigen::MatrixXd z(static_cast<Eigen::Index>(data.rows()),
                    static_cast<Eigen::Index>(given.size()));
  for (std::size_t j = 0; j < given.size(); ++j) {
    z.col(static_cast<Eigen::Index>(j)) = as_vector(numeric_column(data, given[j]));
  }
  const Eigen::VectorXd ra = linalg::ols_residuals(z, va);
  const Eigen::VectorXd rb = linalg::ols_residuals(z, vb);

  CiTestResult result;
  const boost::math::normal standard;
  result.critical_value = boost::math::quantile(standard, 1.0 - cfg.alpha / 2.0);
  if (degenerate(va, ra) || degenerate(vb, rb)) {
    result.independent = true;
    return result;
  }
  double r = ra.dot(rb) / std::sqrt(ra.squaredNorm() * rb.squaredNorm());
  r = std::clamp(r, -cfg.correlation_clamp, cfg.correlation_clamp);
  result.partial_correlation = r;
  const double dof = static_cast<double>(n - given.size() - 3);
  result.statistic = std::abs(std::atanh(r)) * std::sqrt(dof);
  result.independent = result.statistic <= result.critical_value;
  return result;
}

bool fisher_z_test(const Dataset& data, const std::string& a, const std::string& b,
                   std::span<const std::string> given, const CiTestConfig& cfg,
                   std::optional<std::size_t> effective_n) {
  return fisher_z(data, a, b, given, cfg, effective_n).independent;
}

std::vector<CiStatement> violated_statements(const CausalDag& dag, const Dataset& data,
                                             const CiTestConfig& cfg,
                                             std::optional<std::size_t> effective_n) {
  for (const auto& node : dag.nodes()) {
    if (!data.has_column(node.name)) {
      fail(ErrorCode::kColumnMismatch, "graph node '" + node.name + "' has no data column");
    }
  }
  std::vector<CiStatement> out;
  for (const auto& s : local_markov_set(dag)) {
    std::vector<std::string> given;
    given.reserve(s.given.size());
    for (NodeId g : s.given) given.push_back(dag.node(g).name);
    if (!fisher_z_test(data, dag.node(s.a).name, dag.node(s.b).name, given, cfg, effective_n)) {
      out.push_back(s);
    }
  }
  return out;
}

std::size_t nci_count(const CausalDag& dag, const Dataset& data, const CiTestConfig& cfg,
                      std::optional<std::size_t> effective_n) {
  return violated_statements(dag, data, cfg, effective_n).size();
}

}  // namespace icms
