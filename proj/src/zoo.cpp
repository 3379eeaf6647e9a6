#include "icms/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "icms/error.hpp"
#include "icms/linalg.hpp"

namespace icms {

std::string_view model_family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kTRidge:
      return "t_ridge";
    case ModelFamily::kSPoly:
      return "s_poly";
    case ModelFamily::kTKnn:
      return "t_knn";
    case ModelFamily::kCorruptedOracle:
      return "corrupted_oracle";
    case ModelFamily::kOracle:
      return "oracle";
    case ModelFamily::kCustom:
      return "custom";
  }
  return "custom";
}

ModelFamily parse_model_family(std::string_view name) {
  for (auto f : {ModelFamily::kTRidge, ModelFamily::kSPoly, ModelFamily::kTKnn,
                 ModelFamily::kCorruptedOracle, ModelFamily::kOracle, ModelFamily::kCustom}) {
    if (model_family_name(f) == name) return f;
  }
  fail(ErrorCode::kConfig, "unknown model family '" + std::string(name) + "'");
}

CandidateModel::CandidateModel(std::string model_id, ModelFamily family,
                               std::map<std::string, double> hyperparams,
                               std::vector<std::string> features, std::string treatment,
                               std::string outcome, std::shared_ptr<const Predictor> predictor)
    : id_(std::move(model_id)),
      family_(family),
      hyperparams_(std::move(hyperparams)),
      features_(std::move(features)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      predictor_(std::move(predictor)) {}

namespace {

class FunctionPredictor final : public Predictor {
 public:
  explicit FunctionPredictor(std::function<double(std::span<const double>, int)> fn)
      : fn_(std::move(fn)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const override {
    Eigen::VectorXd out(x.rows());
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
      out(i) = fn_(row, treatment);
    }
    return out;
  }

 private:
  std::function<double(std::span<const double>, int)> fn_;
};

// One linear fit per arm.
class TRidgePredictor final : public Predictor {
 public:
  TRidgePredictor(linalg::LinearFit control, linalg::LinearFit treated)
      : arms_{std::move(control), std::move(treated)} {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const override {
    return arms_[treatment != 0].predict(x);
  }

 private:
  linalg::LinearFit arms_[2];
};

using Monomial = std::vector<int>;  // variable indices; index p is the treatment

std::vector<Monomial> monomials(int p, int degree) {
  std::vector<Monomial> out;
  Monomial current;
  // Non-decreasing index sequences of length 1..degree over [0, p], where the
  // treatment (index p) appears at most once since t^2 = t.
  std::function<void(int)> extend = [&](int start) {
    if (!current.empty()) out.push_back(current);
    if (static_cast<int>(current.size()) == degree) return;
    for (int v = start; v <= p; ++v) {
      if (v == p && !current.empty() && current.back() == p) continue;
      current.push_back(v);
      extend(v);
      current.pop_back();
    }
  };
  extend(0);
  return out;
}

class SPolyPredictor final : public Predictor {
 public:
  SPolyPredictor(linalg::Standardizer standardizer, std::vector<Monomial> terms,
                 linalg::LinearFit fit)
      : standardizer_(std::move(standardizer)), terms_(std::move(terms)), fit_(std::move(fit)) {}

  static Eigen::MatrixXd expand(const Eigen::MatrixXd& z, const Eigen::VectorXd& t,
                                const std::vector<Monomial>& terms) {
    const Eigen::Index p = z.cols();
    Eigen::MatrixXd phi(z.rows(), static_cast<Eigen::Index>(terms.size()));
    for (std::size_t k = 0; k < terms.size(); ++k) {
      Eigen::VectorXd col = Eigen::VectorXd::Ones(z.rows());
      for (int v : terms[k]) {
        if (v == p) {
          col.array() *= t.array();
        } else {
          col.array() *= z.col(v).array();
        }
      }
      phi.col(static_cast<Eigen::Index>(k)) = col;
    }
    return phi;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const override {
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(x.rows(), treatment != 0 ? 1.0 : 0.0);
    return fit_.predict(expand(standardizer_.apply(x), t, terms_));
  }

 private:
  linalg::Standardizer standardizer_;
  std::vector<Monomial> terms_;
  linalg::LinearFit fit_;
};

class TKnnPredictor final : public Predictor {
 public:
  struct Arm {
    Eigen::MatrixXd z;
    Eigen::VectorXd y;
  };

  TKnnPredictor(linalg::Standardizer standardizer, Arm control, Arm treated, int k)
      : standardizer_(std::move(standardizer)), arms_{std::move(control), std::move(treated)}, k_(k) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const override {
    const Arm& arm = arms_[treatment != 0];
    const Eigen::MatrixXd z = standardizer_.apply(x);
    const Eigen::Index m = arm.z.rows();
    const Eigen::Index k = std::min<Eigen::Index>(k_, m);
    Eigen::VectorXd out(z.rows());
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        dist[static_cast<std::size_t>(j)] = {(arm.z.row(j) - z.row(i)).squaredNorm(), j};
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      double sum = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) sum += arm.y(dist[static_cast<std::size_t>(j)].second);
      out(i) = sum / static_cast<double>(k);
    }
    return out;
  }

 private:
  linalg::Standardizer standardizer_;
  Arm arms_[2];
  int k_;
};

// Structural equation of the outcome, optionally with a spurious treated-arm
// term.
class StructuralPredictor final : public Predictor {
 public:
  StructuralPredictor(std::vector<std::pair<Eigen::Index, double>> terms, double treatment_weight,
                      std::optional<std::pair<Eigen::Index, double>> spurious)
      : terms_(std::move(terms)), treatment_weight_(treatment_weight), spurious_(spurious) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const override {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (const auto& [col, w] : terms_) out += w * x.col(col);
    if (treatment != 0) {
      out.array() += treatment_weight_;
      if (spurious_) out += spurious_->second * x.col(spurious_->first);
    }
    return out;
  }

 private:
  std::vector<std::pair<Eigen::Index, double>> terms_;
  double treatment_weight_;
  std::optional<std::pair<Eigen::Index, double>> spurious_;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double require_param(const ModelSpec& spec, const std::string& key) {
  auto it = spec.hyperparams.find(key);
  if (it == spec.hyperparams.end()) {
    fail(ErrorCode::kConfig, std::string(model_family_name(spec.family)) +
                                 " needs hyperparameter '" + key + "'");
  }
  return it->second;
}

Eigen::Index feature_index(const std::vector<std::string>& features, const std::string& name) {
  auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) {
    fail(ErrorCode::kSchemaMismatch, "structural parent '" + name + "' is not a covariate");
  }
  return static_cast<Eigen::Index>(it - features.begin());
}

std::shared_ptr<const Predictor> structural_predictor(const ModelSpec& spec,
                                                      const std::vector<std::string>& features,
                                                      const std::string& treatment_name,
                                                      const std::string& outcome_name) {
  if (!spec.structure) {
    fail(ErrorCode::kConfig, "oracle families need the structural graph");
  }
  const CausalDag& dag = *spec.structure;
  const Node& y = dag.node_by_name(outcome_name);
  const Node& t = dag.node_by_name(treatment_name);
  std::vector<std::pair<Eigen::Index, double>> terms;
  double treatment_weight = 0.0;
  for (NodeId p : dag.parents(y.id)) {
    auto w = dag.weight(p, y.id);
    if (!w) fail(ErrorCode::kMissingWeights, "oracle needs weights on every outcome edge");
    if (p == t.id) {
      treatment_weight = *w;
    } else {
      terms.emplace_back(feature_index(features, dag.node(p).name), *w);
    }
  }
  std::optional<std::pair<Eigen::Index, double>> spurious;
  if (spec.family == ModelFamily::kCorruptedOracle) {
    const std::string node =
        spec.corrupt_node ? *spec.corrupt_node : dag.node(spurious_node(dag)).name;
    spurious.emplace(feature_index(features, node), require_param(spec, "coefficient"));
  }
  return std::make_shared<StructuralPredictor>(std::move(terms), treatment_weight, spurious);
}

}  // namespace

CandidateModel CandidateModel::from_function(
    std::string model_id, std::vector<std::string> features, std::string treatment,
    std::string outcome, std::function<double(std::span<const double>, int)> fn) {
  return CandidateModel(std::move(model_id), ModelFamily::kCustom, {}, std::move(features),
                        std::move(treatment), std::move(outcome),
                        std::make_shared<FunctionPredictor>(std::move(fn)));
}

Eigen::MatrixXd CandidateModel::feature_matrix(const Dataset& data) const {
  for (const auto& f : features_) {
    if (!data.has_column(f)) {
      fail(ErrorCode::kSchemaMismatch, "model " + id_ + " needs column '" + f + "'");
    }
  }
  return data.matrix(features_);
}

Eigen::VectorXd CandidateModel::predict(const Dataset& data, int treatment) const {
  return predictor_->predict(feature_matrix(data), treatment);
}

std::string ModelSpec::id() const {
  std::string out(model_family_name(family));
  if (hyperparams.empty() && !corrupt_node) return out;
  out += "(";
  bool first = true;
  for (const auto& [k, v] : hyperparams) {
    if (!first) out += ",";
    out += k + "=" + format_number(v);
    first = false;
  }
  if (corrupt_node) out += std::string(first ? "" : ",") + "node=" + *corrupt_node;
  out += ")";
  return out;
}

NodeId spurious_node(const CausalDag& dag) {
  const auto [t, y] = dag.require_roles();
  const auto& pa = dag.parents(y);
  const auto desc = dag.descendants(y);
  std::optional<NodeId> fallback;
  for (const auto& n : dag.nodes()) {
    if (n.id == t || n.id == y) continue;
    if (std::binary_search(pa.begin(), pa.end(), n.id)) continue;
    if (!desc.contains(n.id)) return n.id;
    if (!fallback) fallback = n.id;
  }
  if (!fallback) {
    fail(ErrorCode::kInvalidArgument, "every covariate is a parent of the outcome");
  }
  return *fallback;
}

CandidateModel fit_candidate(const ModelSpec& spec, const Dataset& train, std::uint64_t seed) {
  (void)seed;  // every shipped family is closed-form or exact
  if (!train.treatment()) fail(ErrorCode::kSchemaMismatch, "training data has no treatment column");
  if (!train.outcome()) fail(ErrorCode::kMissingOutcome, "training data has no outcome column");
  const std::string& tname = *train.treatment();
  const std::string& yname = *train.outcome();
  const std::vector<std::string> features = train.covariate_names();

  const auto& t = train.column(tname).values;
  std::vector<std::size_t> arm_rows[2];
  for (std::size_t i = 0; i < t.size(); ++i) arm_rows[t[i] != 0.0].push_back(i);
  if (arm_rows[0].empty() || arm_rows[1].empty()) {
    fail(ErrorCode::kSingleArmData, "both treatment arms must be present to fit " + spec.id());
  }

  const Eigen::MatrixXd x = train.matrix(features);
  const auto& yv = train.column(yname).values;
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));

  auto arm_matrix = [&](int arm) {
    Eigen::MatrixXd xa(static_cast<Eigen::Index>(arm_rows[arm].size()), x.cols());
    Eigen::VectorXd ya(xa.rows());
    for (std::size_t i = 0; i < arm_rows[arm].size(); ++i) {
      const auto r = static_cast<Eigen::Index>(arm_rows[arm][i]);
      xa.row(static_cast<Eigen::Index>(i)) = x.row(r);
      ya(static_cast<Eigen::Index>(i)) = y(r);
    }
    return std::pair(xa, ya);
  };

  std::shared_ptr<const Predictor> predictor;
  switch (spec.family) {
    case ModelFamily::kTRidge: {
      const double penalty = require_param(spec, "penalty");
      auto [x0, y0] = arm_matrix(0);
      auto [x1, y1] = arm_matrix(1);
      predictor = std::make_shared<TRidgePredictor>(linalg::standardized_ridge(x0, y0, penalty),
                                                    linalg::standardized_ridge(x1, y1, penalty));
      break;
    }
    case ModelFamily::kSPoly: {
      const int degree = static_cast<int>(require_param(spec, "degree"));
      const double penalty = require_param(spec, "penalty");
      if (degree < 1) fail(ErrorCode::kConfig, "s_poly degree must be >= 1");
      auto standardizer = linalg::Standardizer::fit(x);
      auto terms = monomials(static_cast<int>(x.cols()), degree);
      Eigen::VectorXd tv =
          Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
      tv = (tv.array() != 0.0).cast<double>();
      const Eigen::MatrixXd phi = SPolyPredictor::expand(standardizer.apply(x), tv, terms);
      predictor = std::make_shared<SPolyPredictor>(std::move(standardizer), std::move(terms),
                                                   linalg::ridge(phi, y, penalty));
      break;
    }
    case ModelFamily::kTKnn: {
      const int k = static_cast<int>(require_param(spec, "k"));
      if (k < 1) fail(ErrorCode::kConfig, "t_knn needs k >= 1");
      auto standardizer = linalg::Standardizer::fit(x);
      auto [x0, y0] = arm_matrix(0);
      auto [x1, y1] = arm_matrix(1);
      TKnnPredictor::Arm a0{standardizer.apply(x0), y0};
      TKnnPredictor::Arm a1{standardizer.apply(x1), y1};
      predictor = std::make_shared<TKnnPredictor>(std::move(standardizer), std::move(a0),
                                                  std::move(a1), k);
      break;
    }
    case ModelFamily::kOracle:
    case ModelFamily::kCorruptedOracle:
      predictor = structural_predictor(spec, features, tname, yname);
      break;
    case ModelFamily::kCustom:
      fail(ErrorCode::kConfig, "custom models are built with CandidateModel::from_function");
  }
  return CandidateModel(spec.id(), spec.family, spec.hyperparams, features, tname, yname,
                        std::move(predictor));
}

PotentialOutcomes predict_po(const CandidateModel& model, const Dataset& x) {
  const Eigen::MatrixXd m = model.feature_matrix(x);
  PotentialOutcomes po;
  po.y0 = model.predict_matrix(m, 0);
  po.y1 = model.predict_matrix(m, 1);
  po.cate = po.y1 - po.y0;
  return po;
}

std::size_t ZooGrid::size() const {
  return ridge_penalties.size() + poly_degrees.size() * poly_penalties.size() + knn_k.size() +
         (include_oracle ? 1 : 0) + corruption_coefficients.size();
}

std::vector<ModelSpec> expand_grid(const ZooGrid& grid,
                                   std::shared_ptr<const CausalDag> structure) {
  std::vector<ModelSpec> out;
  for (double p : grid.ridge_penalties) {
    out.push_back({ModelFamily::kTRidge, {{"penalty", p}}, nullptr, std::nullopt});
  }
  for (int d : grid.poly_degrees) {
    for (double p : grid.poly_penalties) {
      out.push_back({ModelFamily::kSPoly,
                     {{"degree", static_cast<double>(d)}, {"penalty", p}},
                     nullptr,
                     std::nullopt});
    }
  }
  for (int k : grid.knn_k) {
    out.push_back({ModelFamily::kTKnn, {{"k", static_cast<double>(k)}}, nullptr, std::nullopt});
  }
  if (grid.include_oracle) out.push_back({ModelFamily::kOracle, {}, structure, std::nullopt});
  for (double c : grid.corruption_coefficients) {
    out.push_back({ModelFamily::kCorruptedOracle, {{"coefficient", c}}, structure, std::nullopt});
  }
  return out;
}

std::vector<CandidateModel> fit_zoo(std::span<const ModelSpec> specs, const Dataset& train,
                                    std::uint64_t seed) {
  std::vector<CandidateModel> out;
  out.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.push_back(fit_candidate(specs[i], train, seed + i));
  }
  return out;
}

}  // namespace icms
