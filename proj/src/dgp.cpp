#include "icms/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "icms/error.hpp"
#include "icms/linalg.hpp"
#include "icms/rng.hpp"

namespace icms {

namespace {

constexpr int kMaxDagAttempts = 1000;
constexpr int kMaxPerturbRestarts = 100;

std::vector<std::vector<double>> draw_noise(const CausalDag& dag, std::size_t n, Rng& rng,
                                            const std::set<NodeId>& perturbed, double mean,
                                            double sd, double perturb_mean, double perturb_sd) {
  std::vector<std::vector<double>> ret(dag.num_nodes(), std::vector<double>(n));
  for (std::size_t k = 0; k < dag.num_nodes(); ++k) {
    const bool shifted = perturbed.contains(dag.nodes()[k].id);
    for (auto& v : ret[k]) {
      v = shifted ? rng.normal(perturb_mean, perturb_sd) : rng.normal(mean, sd);
    }
  }
  return ret;
}

void require_generative(const CausalDag& dag) {
  dag.require_roles();
  if (!dag.has_all_weights()) {
    fail(ErrorCode::kMissingWeights, "data generation needs a weight on every edge");
  }
}

std::vector<Column> make_columns(const CausalDag& dag, std::vector<std::vector<double>> values) {
  std::vector<Column> cols;
  for (std::size_t k = 0; k < dag.num_nodes(); ++k) {
    const Node& node = dag.nodes()[k];
    cols.push_back({node.name, node.kind, std::move(values[k])});
  }
  return cols;
}

}  // namespace

void DgpConfig::validate() const {
  if (n_nodes < 3) fail(ErrorCode::kConfig, "n_nodes must be at least 3");
  if (!(noise_sd > 0.0)) fail(ErrorCode::kConfig, "noise_sd must be positive");
  if (!(perturb_sd > 0.0)) fail(ErrorCode::kConfig, "perturb_sd must be positive");
  if (!(weights.lo >= 0.0 && weights.lo <= weights.hi)) {
    fail(ErrorCode::kConfig, "weight range must satisfy 0 <= lo <= hi");
  }
  if (perturb_mean && !(*perturb_mean >= 1.0 && *perturb_mean <= 10.0)) {
    fail(ErrorCode::kConfig, "perturb_mean must lie in [1, 10]");
  }
  if (n_source == 0 || n_target == 0) fail(ErrorCode::kConfig, "sample sizes must be positive");
}

CausalDag random_dag(std::size_t n, std::size_t max_edges, std::uint64_t seed,
                     const WeightRange& weights) {
  if (max_edges > n * (n - 1) / 2 && n > 0) {
    fail(ErrorCode::kInvalidArgument, "max_edges exceeds n(n-1)/2");
  }
  if (n < 3 || max_edges < 2) {
    fail(ErrorCode::kInfeasibleRoles, "need 3 nodes and 2 edges to place treatment and outcome");
  }
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  const std::size_t lo = std::min(n - 1, max_edges);

  for (int attempt = 0; attempt < kMaxDagAttempts; ++attempt) {
    const auto m = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(max_edges)));
    rng.shuffle(pairs);
    std::vector<std::pair<NodeId, NodeId>> chosen(pairs.begin(),
                                                  pairs.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(chosen.begin(), chosen.end());

    std::vector<int> indegree(n, 0);
    for (const auto& [a, b] : chosen) ++indegree[static_cast<std::size_t>(b)];
    // The outcome must also keep at least one covariate outside its parent
    // set, so a spurious dependence can be planted on it.
    std::vector<std::pair<NodeId, NodeId>> roles;
    for (const auto& [a, b] : chosen) {
      if (indegree[static_cast<std::size_t>(a)] == 0) continue;
      if (indegree[static_cast<std::size_t>(b)] + 2 > static_cast<int>(n)) continue;
      roles.emplace_back(a, b);
    }
    if (roles.empty()) continue;
    const auto [t, y] = roles[rng.below(roles.size())];

    std::vector<Node> nodes;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = static_cast<NodeId>(i);
      if (id == t) {
        nodes.push_back({id, "T", NodeRole::kTreatment, ColumnKind::kBinary});
      } else if (id == y) {
        nodes.push_back({id, "Y", NodeRole::kOutcome, ColumnKind::kContinuous});
      } else {
        nodes.push_back({id, "X" + std::to_string(i), NodeRole::kFeature, ColumnKind::kContinuous});
      }
    }
    std::vector<Edge> edges;
    for (const auto& [a, b] : chosen) {
      double w = rng.uniform(weights.lo, weights.hi);
      if (weights.random_sign && rng.bernoulli(0.5)) w = -w;
      edges.push_back({a, b, w});
    }
    return CausalDag(std::move(nodes), std::move(edges));
  }
  fail(ErrorCode::kInfeasibleRoles, "no edge set admitted the treatment and outcome roles");
}

Dataset gen_obs_data(const CausalDag& dag, const DgpConfig& cfg) {
  cfg.validate();
  require_generative(dag);
  const auto [t, y] = dag.require_roles();
  Rng rng(derive_seed(cfg.seed, {1}));
  auto ret = draw_noise(dag, cfg.n_source, rng, {}, cfg.noise_mean, cfg.noise_sd, 0.0, 1.0);
  for (NodeId id : topological_sort(dag)) {
    auto& col = ret[dag.index_of(id)];
    for (NodeId p : dag.parents(id)) {
      const double w = *dag.weight(p, id);
      const auto& pv = ret[dag.index_of(p)];
      for (std::size_t i = 0; i < col.size(); ++i) col[i] += w * pv[i];
    }
    if (id == t) {
      for (auto& v : col) v = linalg::sigmoid(v) > 0.5 ? 1.0 : 0.0;
    }
  }
  (void)y;
  auto cols = make_columns(dag, std::move(ret));
  return Dataset(std::move(cols), dag.node(t).name, dag.node(y).name);
}

TargetSample gen_treat_data(const CausalDag& dag, const DgpConfig& cfg,
                            const std::set<NodeId>& perturb_nodes) {
  cfg.validate();
  require_generative(dag);
  const auto [t, y] = dag.require_roles();
  if (perturb_nodes.empty()) fail(ErrorCode::kInvalidPerturbSet, "perturbation set is empty");
  const auto y_ancestors = dag.ancestors(y);
  for (NodeId p : perturb_nodes) {
    if (!y_ancestors.contains(p)) {
      fail(ErrorCode::kInvalidPerturbSet,
           "perturbed node " + std::to_string(p) + " is not an ancestor of the outcome");
    }
  }

  TargetSample out;
  Rng rng(derive_seed(cfg.seed, {2}));
  out.perturb_mean = cfg.perturb_mean ? *cfg.perturb_mean : rng.uniform(1.0, 10.0);
  const std::size_t n = cfg.n_target;
  auto ret = draw_noise(dag, n, rng, perturb_nodes, cfg.noise_mean, cfg.noise_sd,
                        out.perturb_mean, cfg.perturb_sd);
  for (NodeId id : topological_sort(dag)) {
    if (id == t || id == y) continue;
    auto& col = ret[dag.index_of(id)];
    for (NodeId p : dag.parents(id)) {
      const double w = *dag.weight(p, id);
      const auto& pv = ret[dag.index_of(p)];
      for (std::size_t i = 0; i < n; ++i) col[i] += w * pv[i];
    }
  }

  auto& tcol = ret[dag.index_of(t)];
  for (std::size_t i = 0; i < n; ++i) tcol[i] = i < n / 2 ? 0.0 : 1.0;

  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::VectorXd base = Eigen::VectorXd::Zero(ni);
  double effect = 0.0;
  for (NodeId p : dag.parents(y)) {
    const double w = *dag.weight(p, y);
    if (p == t) {
      effect = w;
      continue;
    }
    const auto& pv = ret[dag.index_of(p)];
    for (Eigen::Index i = 0; i < ni; ++i) base(i) += w * pv[static_cast<std::size_t>(i)];
  }
  out.truth.y0 = base;
  out.truth.y1 = base.array() + effect;
  out.truth.cate = out.truth.y1 - out.truth.y0;
  auto& ycol = ret[dag.index_of(y)];
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ycol[i] = tcol[i] != 0.0 ? out.truth.y1(r) : out.truth.y0(r);
  }
  auto cols = make_columns(dag, std::move(ret));
  out.data = Dataset(std::move(cols), dag.node(t).name, dag.node(y).name);
  return out;
}

std::set<NodeId> random_perturb_set(const CausalDag& dag, std::uint64_t seed) {
  const auto [t, y] = dag.require_roles();
  std::vector<NodeId> candidates;
  for (NodeId a : dag.ancestors(y)) {
    if (a != t) candidates.push_back(a);
  }
  if (candidates.empty()) {
    fail(ErrorCode::kInvalidPerturbSet, "the outcome has no ancestor besides the treatment");
  }
  Rng rng(seed);
  std::set<NodeId> out;
  for (NodeId a : candidates) {
    if (rng.bernoulli(0.5)) out.insert(a);
  }
  if (out.empty()) out.insert(candidates[rng.below(candidates.size())]);
  return out;
}

std::string_view perturb_mode_name(PerturbMode mode) {
  return mode == PerturbMode::kReverse ? "reverse" : "add";
}

PerturbMode parse_perturb_mode(std::string_view name) {
  if (name == "reverse") return PerturbMode::kReverse;
  if (name == "add") return PerturbMode::kAdd;
  fail(ErrorCode::kConfig, "unknown perturbation mode '" + std::string(name) + "'");
}

CausalDag perturb_graph(const CausalDag& dag, double fraction, PerturbMode mode,
                        std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "fraction must lie in [0, 1]");
  }
  const std::size_t total = dag.num_edges();
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 1e-9));
  if (count == 0) return dag;
  Rng rng(seed);

  if (mode == PerturbMode::kReverse) {
    // Walk from a topological order towards its reverse by swapping adjacent
    // nodes that still sit in their original relative order. Orienting every
    // edge along the current order keeps the graph acyclic, and each swap
    // reverses at most one edge, so any count up to |E| is reached exactly.
    std::vector<NodeId> order = topological_sort(dag);
    std::map<NodeId, std::size_t> original;
    for (std::size_t i = 0; i < order.size(); ++i) original[order[i]] = i;
    std::set<std::pair<NodeId, NodeId>> flipped;
    while (flipped.size() < count) {
      std::vector<std::size_t> movable;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (original[order[i]] < original[order[i + 1]]) movable.push_back(i);
      }
      if (movable.empty()) {
        fail(ErrorCode::kNoAcyclicCompletion, "could not reverse the requested number of edges");
      }
      const std::size_t i = movable[rng.below(movable.size())];
      const NodeId a = order[i];
      const NodeId b = order[i + 1];
      if (dag.has_edge(a, b)) flipped.emplace(a, b);
      std::swap(order[i], order[i + 1]);
    }
    std::vector<Edge> edges;
    for (const auto& e : dag.edges()) {
      edges.push_back(flipped.contains({e.src, e.dst}) ? Edge{e.dst, e.src, e.weight} : e);
    }
    return with_edges(dag, std::move(edges));
  }

  std::vector<std::pair<NodeId, NodeId>> free_pairs;
  for (std::size_t i = 0; i < dag.num_nodes(); ++i) {
    for (std::size_t j = i + 1; j < dag.num_nodes(); ++j) {
      const NodeId a = dag.nodes()[i].id;
      const NodeId b = dag.nodes()[j].id;
      if (!dag.has_edge(a, b) && !dag.has_edge(b, a)) free_pairs.emplace_back(a, b);
    }
  }
  if (count > free_pairs.size()) {
    fail(ErrorCode::kNoAcyclicCompletion, "not enough non-adjacent pairs to add edges");
  }
  for (int restart = 0; restart < kMaxPerturbRestarts; ++restart) {
    std::vector<Edge> edges = dag.edges();
    std::size_t done = 0;
    for (std::size_t k : rng.permutation(free_pairs.size())) {
      auto [a, b] = free_pairs[k];
      if (rng.bernoulli(0.5)) std::swap(a, b);
      for (int dir = 0; dir < 2; ++dir) {
        std::vector<Edge> trial = edges;
        trial.push_back(dir == 0 ? Edge{a, b, std::nullopt} : Edge{b, a, std::nullopt});
        CausalDag candidate = with_edges(dag, trial);
        if (!is_acyclic(candidate)) continue;
        edges = std::move(trial);
        if (++done == count) return candidate;
        break;
      }
    }
  }
  fail(ErrorCode::kNoAcyclicCompletion, "could not add the requested number of edges");
}

}  // namespace icms
