#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>

#include <Eigen/Dense>

#include "icms/dataset.hpp"
#include "icms/graph.hpp"

namespace icms {

struct WeightRange {
  double lo = 0.25;
  double hi = 1.0;
  bool random_sign = true;  // negate each weight with probability 1/2
};

struct DgpConfig {
  std::size_t n_nodes = 10;
  double noise_mean = 0.0;
  double noise_sd = 1.0;
  WeightRange weights;
  std::size_t n_source = 2000;
  std::size_t n_target = 1000;
  // Drawn uniformly from [1, 10] per graph when unset.
  std::optional<double> perturb_mean;
  double perturb_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Random DAG on nodes 0..n-1 (ids follow a topological order). The edge
// count is uniform in [min(n-1, max_edges), max_edges]. Roles: the treatment
// has at least one parent and a direct edge into the outcome, and some
// covariate is not a parent of the outcome. Features are
// named X<id>, the treatment T and the outcome Y.
CausalDag random_dag(std::size_t n, std::size_t max_edges, std::uint64_t seed,
                     const WeightRange& weights = {});

// Observational sample: every node is the weighted sum of its parents plus
// Gaussian(noise_mean, noise_sd) noise, in topological order. The treatment
// is passed through a sigmoid and thresholded at 0.5 where it is generated,
// so its children see the binary value. n_source rows.
Dataset gen_obs_data(const CausalDag& dag, const DgpConfig& cfg);

// Evaluation-only truth for a target sample.
struct PotentialOutcomeTruth {
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;
  Eigen::VectorXd cate;
};

struct TargetSample {
  Dataset data;  // covariates, assigned treatment, factual outcome
  PotentialOutcomeTruth truth;
  double perturb_mean = 0.0;
};

// Interventional sample with mean-shifted noise on the perturbed nodes.
// Propagation skips the treatment and the outcome, whose children therefore
// see their raw noise draws. The first floor(n/2) rows get t = 0, the rest
// t = 1; the outcome is the weighted sum of its parents with t set to each
// arm, without noise.
TargetSample gen_treat_data(const CausalDag& dag, const DgpConfig& cfg,
                            const std::set<NodeId>& perturb_nodes);

// Non-treatment ancestors of the outcome, each kept with probability 1/2,
// at least one kept.
std::set<NodeId> random_perturb_set(const CausalDag& dag, std::uint64_t seed);

enum class PerturbMode { kReverse, kAdd };

std::string_view perturb_mode_name(PerturbMode mode);
PerturbMode parse_perturb_mode(std::string_view name);

// Reverses (or adds) floor(fraction * |E|) edges and keeps the graph acyclic.
// Reversals follow random adjacent swaps in a linear order; additions reject
// any edge that would close a cycle and carry no weight.
CausalDag perturb_graph(const CausalDag& dag, double fraction, PerturbMode mode,
                        std::uint64_t seed);

}  // namespace icms
