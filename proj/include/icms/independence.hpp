#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icms/dataset.hpp"
#include "icms/graph.hpp"

namespace icms {

struct CiTestConfig {
  double alpha = 0.05;
  // |r| is clamped to this before the Fisher transform.
  double correlation_clamp = 1.0 - 1e-7;

  void validate() const;
};

struct CiTestResult {
  double partial_correlation = 0.0;
  double statistic = 0.0;  // |z|
  double critical_value = 0.0;
  bool independent = true;
};

// Partial-correlation test of a _||_ b | given. Residuals come from least
// squares on the conditioning columns. `effective_n` overrides the number of
// rows in the statistic when rows are not independent draws (the augmented
// target set holds every covariate vector twice).
//
// A residual that vanishes (relative to the raw column) means the variable is
// a deterministic function of the conditioning set and is reported as
// independent of everything given that set.
CiTestResult fisher_z(const Dataset& data, const std::string& a, const std::string& b,
                      std::span<const std::string> given, const CiTestConfig& cfg,
                      std::optional<std::size_t> effective_n = std::nullopt);

bool fisher_z_test(const Dataset& data, const std::string& a, const std::string& b,
                   std::span<const std::string> given, const CiTestConfig& cfg,
                   std::optional<std::size_t> effective_n = std::nullopt);

// Number of local-Markov statements of `dag` that the data rejects. Nodes map
// to columns by name.
std::size_t nci_count(const CausalDag& dag, const Dataset& data, const CiTestConfig& cfg,
                      std::optional<std::size_t> effective_n = std::nullopt);

// Statements of the local-Markov set the data rejects.
std::vector<CiStatement> violated_statements(const CausalDag& dag, const Dataset& data,
                                             const CiTestConfig& cfg,
                                             std::optional<std::size_t> effective_n = std::nullopt);

}  // namespace icms
