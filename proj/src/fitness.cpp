#include "icms/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "icms/error.hpp"

namespace icms {

namespace {

// Dense level codes of a discrete column.
struct Codes {
  std::vector<std::uint32_t> code;
  std::uint32_t levels = 0;
};

Codes discrete_codes(const std::vector<double>& values) {
  Codes out;
  out.code.resize(values.size());
  if (values.empty()) return out;
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    lo = v < lo ? v : lo;
    hi = v > hi ? v : hi;
  }
  // Small integral range (the usual binary column): codes are v - lo.
  if (hi - lo < 64.0) {
    bool integral = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = values[i] - lo;
      const auto c = static_cast<std::int32_t>(d);
      out.code[i] = static_cast<std::uint32_t>(c);
      integral &= static_cast<double>(c) == d;
    }
    if (integral) {
      out.levels = static_cast<std::uint32_t>(hi - lo) + 1;
      return out;
    }
  }
  std::vector<double> uniq(values);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.code[i] = static_cast<std::uint32_t>(
        std::lower_bound(uniq.begin(), uniq.end(), values[i]) - uniq.begin());
  }
  out.levels = static_cast<std::uint32_t>(uniq.size());
  return out;
}

// Equal-frequency bins: the cut points are the order statistics at N/4, N/2
// and 3N/4, so tied values always share a bin.
Codes quantile_codes(const std::vector<double>& values) {
  Codes out;
  const std::size_t n = values.size();
  out.code.resize(n);
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int k = 1; k < kEntropyBins; ++k) {
    cuts.push_back(sorted[static_cast<std::size_t>(k) * n / kEntropyBins]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.code[i] = static_cast<std::uint32_t>(
        std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
  }
  out.levels = kEntropyBins;
  return out;
}

// c * ln(c) for counts up to n, cached per thread since N repeats across calls.
double xlogx(std::size_t c) {
  thread_local std::vector<double> table;
  if (c >= table.size()) {
    const std::size_t old = table.size();
    table.resize(std::max<std::size_t>(c + 1, 2 * old));
    for (std::size_t k = old; k < table.size(); ++k) {
      table[k] = k == 0 ? 0.0 : static_cast<double>(k) * std::log(static_cast<double>(k));
    }
  }
  return table[c];
}

double plug_in_entropy(const Codes& child, const std::vector<const Codes*>& parents,
                       std::size_t n) {
  // Mixed-radix parent configuration index. Falls back to sorting when the
  // configuration space is too large for a count array.
  std::uint64_t configs = 1;
  bool dense = true;
  for (const Codes* p : parents) {
    configs *= std::max<std::uint32_t>(p->levels, 1);
    if (configs > (std::uint64_t{1} << 20)) {
      dense = false;
      break;
    }
  }
  const double nd = static_cast<double>(n);
  double sum_joint = 0.0;
  double sum_parent = 0.0;

  if (dense && configs * child.levels <= (std::uint64_t{1} << 22)) {
    thread_local std::vector<std::size_t> joint;
    const std::size_t levels = child.levels;
    joint.assign(configs * levels, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t config = 0;
      for (const Codes* p : parents) config = config * p->levels + p->code[i];
      ++joint[config * levels + child.code[i]];
    }
    for (std::size_t k = 0; k < configs; ++k) {
      std::size_t marginal = 0;
      for (std::size_t c = 0; c < levels; ++c) {
        marginal += joint[k * levels + c];
        sum_joint += xlogx(joint[k * levels + c]);
      }
      sum_parent += xlogx(marginal);
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
      for (const Codes* p : parents) {
        if (p->code[a] != p->code[b]) return p->code[a] < p->code[b];
      }
      return child.code[a] < child.code[b];
    };
    auto same_parents = [&](std::size_t a, std::size_t b) {
      for (const Codes* p : parents) {
        if (p->code[a] != p->code[b]) return false;
      }
      return true;
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t run_joint = 0;
    std::size_t run_parent = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0 && !same_parents(order[k - 1], order[k])) {
        sum_joint += xlogx(run_joint);
        sum_parent += xlogx(run_parent);
        run_joint = run_parent = 0;
      } else if (k > 0 && child.code[order[k - 1]] != child.code[order[k]]) {
        sum_joint += xlogx(run_joint);
        run_joint = 0;
      }
      ++run_joint;
      ++run_parent;
    }
    sum_joint += xlogx(run_joint);
    sum_parent += xlogx(run_parent);
  }
  // H = -sum n(c,p)/N log(n(c,p)/n(p))
  return -(sum_joint - sum_parent) / nd;
}

double gaussian_entropy(const Dataset& data, const Column& child,
                        std::span<const std::string> parents) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  std::vector<Eigen::VectorXd> design_cols;
  for (const auto& name : parents) {
    const Column& p = data.column(name);
    if (p.kind == ColumnKind::kCategorical) {
      const Codes codes = discrete_codes(p.values);
      for (std::uint32_t level = 1; level < codes.levels; ++level) {
        Eigen::VectorXd col(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          col(i) = codes.code[static_cast<std::size_t>(i)] == level ? 1.0 : 0.0;
        }
        design_cols.push_back(std::move(col));
      }
    } else {
      design_cols.push_back(Eigen::Map<const Eigen::VectorXd>(p.values.data(), n));
    }
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(child.values.data(), n);
  double rss;
  if (design_cols.empty()) {
    rss = (y.array() - y.mean()).square().sum();
  } else {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(design_cols.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t j = 0; j < design_cols.size(); ++j) {
      x.col(static_cast<Eigen::Index>(j) + 1) = design_cols[j];
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    rss = (y - x * beta).squaredNorm();
  }
  const double var = std::max(rss / static_cast<double>(n), kVarianceFloor);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

}  // namespace

double conditional_entropy(const Dataset& data, const std::string& child,
                           std::span<const std::string> parents) {
  if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "entropy of an empty dataset");
  const Column& c = data.column(child);
  if (!is_discrete(c.kind)) return gaussian_entropy(data, c, parents);

  std::vector<Codes> parent_codes;
  parent_codes.reserve(parents.size());
  for (const auto& name : parents) {
    const Column& p = data.column(name);
    parent_codes.push_back(is_discrete(p.kind) ? discrete_codes(p.values)
                                               : quantile_codes(p.values));
  }
  std::vector<const Codes*> ptrs;
  for (const auto& pc : parent_codes) ptrs.push_back(&pc);
  return plug_in_entropy(discrete_codes(c.values), ptrs, data.rows());
}

double log_likelihood(const CausalDag& dag, const Dataset& data) {
  for (const auto& node : dag.nodes()) {
    if (!data.has_column(node.name)) {
      fail(ErrorCode::kColumnMismatch, "graph node '" + node.name + "' has no data column");
    }
  }
  if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "entropy of an empty dataset");
  // Level codes are computed once per column rather than once per family.
  const std::size_t v = dag.num_nodes();
  std::vector<const Column*> cols(v);
  std::vector<std::optional<Codes>> codes(v);
  for (const auto& node : dag.nodes()) cols[node.id] = &data.column(node.name);
  auto codes_of = [&](NodeId id) -> const Codes& {
    if (!codes[id]) {
      const Column& c = *cols[id];
      codes[id] = is_discrete(c.kind) ? discrete_codes(c.values) : quantile_codes(c.values);
    }
    return *codes[id];
  };

  double total = 0.0;
  std::vector<std::string> names;
  std::vector<const Codes*> parent_codes;
  for (const auto& node : dag.nodes()) {
    const auto& pa = dag.parents(node.id);
    if (!is_discrete(cols[node.id]->kind)) {
      names.clear();
      for (NodeId p : pa) names.push_back(dag.node(p).name);
      total += gaussian_entropy(data, *cols[node.id], names);
      continue;
    }
    parent_codes.clear();
    for (NodeId p : pa) parent_codes.push_back(&codes_of(p));
    total += plug_in_entropy(codes_of(node.id), parent_codes, data.rows());
  }
  return -static_cast<double>(data.rows()) * total;
}

double bic_penalty(std::size_t n, const CausalDag& dag) {
  const double size = static_cast<double>(dag.num_nodes() + dag.num_edges());
  return std::log2(static_cast<double>(n)) / 2.0 * size;
}

double bic_score(const CausalDag& dag, const Dataset& data) {
  return -log_likelihood(dag, data) + bic_penalty(data.rows(), dag);
}

AugmentedTargetSet augment_target(const CandidateModel& model, const Dataset& target_covariates) {
  const PotentialOutcomes po = predict_po(model, target_covariates);
  const std::size_t n = target_covariates.rows();

  std::vector<Column> columns;
  for (const auto& c : target_covariates.columns()) {
    if (c.name == model.treatment() || c.name == model.outcome()) continue;
    Column doubled{c.name, c.kind, {}};
    doubled.values.reserve(2 * n);
    doubled.values.insert(doubled.values.end(), c.values.begin(), c.values.end());
    doubled.values.insert(doubled.values.end(), c.values.begin(), c.values.end());
    columns.push_back(std::move(doubled));
  }
  Column t{model.treatment(), ColumnKind::kBinary, std::vector<double>(2 * n, 0.0)};
  std::fill(t.values.begin() + static_cast<std::ptrdiff_t>(n), t.values.end(), 1.0);
  Column y{model.outcome(), ColumnKind::kContinuous, std::vector<double>(2 * n)};
  for (std::size_t i = 0; i < n; ++i) {
    y.values[i] = po.y0(static_cast<Eigen::Index>(i));
    y.values[n + i] = po.y1(static_cast<Eigen::Index>(i));
  }
  columns.push_back(std::move(t));
  columns.push_back(std::move(y));

  AugmentedTargetSet out;
  out.data = Dataset(std::move(columns), model.treatment(), model.outcome());
  out.source_size = n;
  return out;
}

double causal_risk(const AugmentedTargetSet& augmented, const CausalDag& mutilated_dag) {
  const auto [t, y] = mutilated_dag.require_roles();
  (void)y;
  if (!mutilated_dag.parents(t).empty()) {
    fail(ErrorCode::kNotMutilated, "treatment node still has incoming edges");
  }
  return -log_likelihood(mutilated_dag, augmented.data);
}

double causal_risk(const CandidateModel& model, const Dataset& target_covariates,
                   const CausalDag& mutilated_dag) {
  return causal_risk(augment_target(model, target_covariates), mutilated_dag);
}

}  // namespace icms
