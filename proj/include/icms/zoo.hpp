#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "icms/dataset.hpp"
#include "icms/graph.hpp"

namespace icms {

enum class ModelFamily { kTRidge, kSPoly, kTKnn, kCorruptedOracle, kOracle, kCustom };

std::string_view model_family_name(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);

// Outcome predictor over a fixed feature order. `x` has one column per
// feature of the owning CandidateModel.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x, int treatment) const = 0;
};

struct PotentialOutcomes {
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;
  Eigen::VectorXd cate;  // y1 - y0
};

// A fitted f(x, t). Cheap to copy; the fitted state is shared and immutable.
class CandidateModel {
 public:
  CandidateModel(std::string model_id, ModelFamily family,
                 std::map<std::string, double> hyperparams, std::vector<std::string> features,
                 std::string treatment, std::string outcome,
                 std::shared_ptr<const Predictor> predictor);

  // Wraps an arbitrary row function; used for hand-built models and as the
  // plug-in point for externally trained learners.
  static CandidateModel from_function(
      std::string model_id, std::vector<std::string> features, std::string treatment,
      std::string outcome, std::function<double(std::span<const double>, int)> fn);

  const std::string& id() const { return id_; }
  ModelFamily family() const { return family_; }
  const std::map<std::string, double>& hyperparams() const { return hyperparams_; }
  const std::vector<std::string>& features() const { return features_; }
  const std::string& treatment() const { return treatment_; }
  const std::string& outcome() const { return outcome_; }

  // Feature matrix of `data` in model order; kSchemaMismatch on missing columns.
  Eigen::MatrixXd feature_matrix(const Dataset& data) const;
  Eigen::VectorXd predict(const Dataset& data, int treatment) const;
  Eigen::VectorXd predict_matrix(const Eigen::MatrixXd& x, int treatment) const {
    return predictor_->predict(x, treatment);
  }

 private:
  std::string id_;
  ModelFamily family_;
  std::map<std::string, double> hyperparams_;
  std::vector<std::string> features_;
  std::string treatment_;
  std::string outcome_;
  std::shared_ptr<const Predictor> predictor_;
};

// What to fit. Hyperparameter keys per family:
//   t_ridge: penalty            s_poly: degree, penalty
//   t_knn:   k                  corrupted_oracle: coefficient
// The oracle families read the structural equations of `structure`;
// corrupted_oracle adds coefficient * x_u to the treated-arm prediction,
// where u is `corrupt_node` or, if unset, spurious_node(structure).
struct ModelSpec {
  ModelFamily family = ModelFamily::kTRidge;
  std::map<std::string, double> hyperparams;
  std::shared_ptr<const CausalDag> structure;
  std::optional<std::string> corrupt_node;

  std::string id() const;
};

CandidateModel fit_candidate(const ModelSpec& spec, const Dataset& train, std::uint64_t seed);

PotentialOutcomes predict_po(const CandidateModel& model, const Dataset& x);

// The non-parent of the outcome used by corrupted oracles: the smallest-id
// node that is neither a parent nor a descendant of the outcome (nor the
// treatment); failing that, the smallest-id non-parent descendant.
NodeId spurious_node(const CausalDag& dag);

struct ZooGrid {
  std::vector<double> ridge_penalties{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::vector<int> poly_degrees{1, 2, 3};
  std::vector<double> poly_penalties{1e-2, 1.0, 100.0};
  std::vector<int> knn_k{1, 5, 25};
  bool include_oracle = true;
  std::vector<double> corruption_coefficients{0.25, 0.5, 1.0, 2.0};

  std::size_t size() const;
};

// Expands the grid into specs; oracle families get `structure`. Order is
// fixed: t_ridge, s_poly, t_knn, oracle, corrupted_oracle.
std::vector<ModelSpec> expand_grid(const ZooGrid& grid,
                                   std::shared_ptr<const CausalDag> structure);

std::vector<CandidateModel> fit_zoo(std::span<const ModelSpec> specs, const Dataset& train,
                                    std::uint64_t seed);

}  // namespace icms
