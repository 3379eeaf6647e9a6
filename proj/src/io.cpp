#include "icms/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "icms/error.hpp"

namespace icms {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_cell(const std::string& cell, const std::string& column, std::size_t row) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || errno == ERANGE) {
    fail(ErrorCode::kNonNumericColumn, "column '" + column + "' row " + std::to_string(row + 1) +
                                           ": '" + cell + "' is not a number");
  }
  return v;
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::kConfig, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) fail(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, "bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
void read_opt(const Json& j, const std::string& key, T& out) {
  if (j.contains(key)) out = get_as<T>(j, key);
}

ClipBounds read_clip(const Json& j, const std::string& key) {
  const auto v = get_as<std::vector<double>>(j, key);
  if (v.size() != 2 || !(v[0] > 0.0 && v[0] < v[1])) {
    fail(ErrorCode::kConfig, "'" + key + "' must be [lo, hi] with 0 < lo < hi");
  }
  return {v[0], v[1]};
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json graph_to_json(const CausalDag& dag) {
  Json nodes = Json::array();
  for (const auto& n : dag.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"name", n.name},
                     {"role", std::string(node_role_name(n.role))},
                     {"kind", std::string(column_kind_name(n.kind))}});
  }
  Json edges = Json::array();
  for (const auto& e : dag.edges()) {
    Json je = {{"src", e.src}, {"dst", e.dst}};
    if (e.weight) je["weight"] = *e.weight;
    edges.push_back(std::move(je));
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

CausalDag graph_from_json(const Json& j) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  try {
    for (const auto& jn : j.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<NodeId>();
      n.name = jn.at("name").get<std::string>();
      n.role = jn.contains("role") ? parse_node_role(jn.at("role").get<std::string>())
                                   : NodeRole::kFeature;
      n.kind = jn.contains("kind") ? parse_column_kind(jn.at("kind").get<std::string>())
                                   : ColumnKind::kContinuous;
      nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      Edge e;
      e.src = je.at("src").get<NodeId>();
      e.dst = je.at("dst").get<NodeId>();
      if (je.contains("weight") && !je.at("weight").is_null()) e.weight = je.at("weight").get<double>();
      edges.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidGraph, std::string("malformed graph JSON: ") + e.what());
  }
  CausalDag dag(std::move(nodes), std::move(edges));
  topological_sort(dag);  // throws on a cycle
  return dag;
}

CausalDag read_graph(const fs::path& path) { return graph_from_json(read_json(path)); }

void write_graph(const fs::path& path, const CausalDag& dag) { write_json(path, graph_to_json(dag)); }

fs::path meta_path_for(const fs::path& csv) {
  fs::path meta = csv;
  meta.replace_extension(".meta.json");
  return meta;
}

Dataset read_dataset(const fs::path& csv) { return read_dataset(csv, meta_path_for(csv)); }

Dataset read_dataset(const fs::path& csv, const fs::path& meta_path) {
  const Json meta = read_json(meta_path);
  std::vector<Column> columns;
  std::optional<std::string> treatment;
  std::optional<std::string> outcome;
  try {
    for (const auto& jc : meta.at("columns")) {
      columns.push_back({jc.at("name").get<std::string>(),
                         parse_column_kind(jc.value("kind", std::string("continuous"))),
                         {}});
    }
    if (meta.contains("treatment") && !meta.at("treatment").is_null()) {
      treatment = meta.at("treatment").get<std::string>();
    }
    if (meta.contains("outcome") && !meta.at("outcome").is_null()) {
      outcome = meta.at("outcome").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaMismatch, std::string("malformed dataset metadata: ") + e.what());
  }

  std::ifstream in(csv);
  if (!in) fail(ErrorCode::kIo, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kEmptyDataset, csv.string() + " has no header");
  const auto header = split_line(strip_cr(line));
  if (header.size() != columns.size()) {
    fail(ErrorCode::kSchemaMismatch, "CSV header and metadata list different columns");
  }
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] != columns[k].name) {
      fail(ErrorCode::kSchemaMismatch,
           "CSV column '" + header[k] + "' does not match metadata '" + columns[k].name + "'");
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != columns.size()) {
      fail(ErrorCode::kSchemaMismatch, "row " + std::to_string(row + 1) + " has " +
                                           std::to_string(cells.size()) + " cells");
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      columns[k].values.push_back(parse_cell(cells[k], columns[k].name, row));
    }
    ++row;
  }
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::kBinary) {
      for (double v : c.values) {
        if (v != 0.0 && v != 1.0) {
          fail(ErrorCode::kNonNumericColumn, "binary column '" + c.name + "' holds " + format_double(v));
        }
      }
    }
  }
  return Dataset(std::move(columns), treatment, outcome);
}

void write_dataset(const fs::path& csv, const Dataset& data) {
  std::string out;
  for (std::size_t k = 0; k < data.cols(); ++k) {
    if (k) out += ',';
    out += data.column(k).name;
  }
  out += '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t k = 0; k < data.cols(); ++k) {
      if (k) out += ',';
      out += format_double(data.column(k).values[i]);
    }
    out += '\n';
  }
  write_text(csv, out);

  Json cols = Json::array();
  for (const auto& c : data.columns()) {
    cols.push_back({{"name", c.name}, {"kind", std::string(column_kind_name(c.kind))}});
  }
  Json meta = {{"columns", cols}};
  meta["treatment"] = data.treatment() ? Json(*data.treatment()) : Json(nullptr);
  meta["outcome"] = data.outcome() ? Json(*data.outcome()) : Json(nullptr);
  write_json(meta_path_for(csv), meta);
}

void write_truth(const fs::path& csv, const PotentialOutcomeTruth& truth) {
  std::string out = "y0,y1,cate\n";
  for (Eigen::Index i = 0; i < truth.y0.size(); ++i) {
    out += format_double(truth.y0(i)) + ',' + format_double(truth.y1(i)) + ',' +
           format_double(truth.cate(i)) + '\n';
  }
  write_text(csv, out);
}

PotentialOutcomeTruth read_truth(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) fail(ErrorCode::kIo, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "y0,y1,cate") {
    fail(ErrorCode::kSchemaMismatch, csv.string() + " is not a potential-outcome file");
  }
  std::vector<double> y0, y1, cate;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 3) fail(ErrorCode::kSchemaMismatch, "truth rows need three cells");
    y0.push_back(parse_cell(cells[0], "y0", row));
    y1.push_back(parse_cell(cells[1], "y1", row));
    cate.push_back(parse_cell(cells[2], "cate", row));
    ++row;
  }
  auto vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  return {vec(y0), vec(y1), vec(cate)};
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json to_json(const ScoreReport& r) {
  Json j = {{"model_id", r.model_id}, {"v_r_raw", r.v_r_raw},   {"c_r_raw", r.c_r_raw},
            {"v_r_norm", r.v_r_norm}, {"c_r_norm", r.c_r_norm}, {"lambda", r.lambda},
            {"icms", r.icms},         {"rank", r.rank}};
  if (r.true_pehe) j["true_pehe"] = *r.true_pehe;
  return j;
}

Json to_json(const std::vector<ScoreReport>& reports) {
  Json out = Json::array();
  for (const auto& r : reports) out.push_back(to_json(r));
  return out;
}

Json to_json(const Summary& s) { return {{"mean", s.mean}, {"se", s.se}, {"n", s.n}}; }

Json to_json(const DagRecord& record) {
  Json methods = Json::array();
  for (const auto& m : record.methods) {
    methods.push_back({{"name", m.name},
                       {"baseline", m.baseline},
                       {"icms", m.icms},
                       {"lambda", m.lambda},
                       {"pehe10", m.pehe10},
                       {"inversion", m.inversion},
                       {"reports", to_json(m.reports)}});
  }
  return {{"index", record.index},
          {"seed", record.seed},
          {"n_nodes", record.n_nodes},
          {"n_edges", record.n_edges},
          {"perturb_mean", record.perturb_mean},
          {"perturbed", record.perturbed},
          {"true_pehe", record.true_pehe},
          {"methods", methods}};
}

Json to_json(const ExperimentReport& report) {
  Json dags = Json::array();
  for (const auto& d : report.dags) dags.push_back(to_json(d));
  Json aggregates = Json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back(
        {{"name", a.name}, {"pehe10", to_json(a.pehe10)}, {"inversion", to_json(a.inversion)}});
  }
  Json comparisons = Json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"baseline", c.baseline},
                           {"icms", c.icms},
                           {"pehe10_diff", to_json(c.pehe10_diff)},
                           {"inversion_diff", to_json(c.inversion_diff)}});
  }
  return {{"dags", dags}, {"aggregates", aggregates}, {"comparisons", comparisons}};
}

Json to_json(const SweepReport& report) {
  Json points = Json::array();
  for (const auto& p : report.points) {
    points.push_back({{"parameter", p.parameter},
                      {"pehe10", to_json(p.pehe10)},
                      {"delta", to_json(p.delta)},
                      {"per_dag", p.per_dag}});
  }
  Json j = {{"kind", report.kind},
            {"risk", report.risk},
            {"baseline", to_json(report.baseline)},
            {"baseline_per_dag", report.baseline_per_dag},
            {"points", points}};
  if (!report.mode.empty()) j["mode"] = report.mode;
  if (report.spearman) j["spearman"] = *report.spearman;
  return j;
}

Json to_json(const ExperimentConfig& cfg) {
  Json methods = Json::array();
  for (const auto& m : cfg.methods) methods.push_back(m.name());
  Json lambda = cfg.lambda.kind == LambdaPolicy::Kind::kEdgeRatio ? Json("edge_ratio")
                                                                  : Json(cfg.lambda.value);
  return {
      {"seed", cfg.seed},
      {"n_dags", cfg.n_dags},
      {"threads", cfg.threads},
      {"nodes", {{"min", cfg.min_nodes}, {"max", cfg.max_nodes}}},
      {"max_edges", cfg.max_edges ? Json(*cfg.max_edges) : Json(nullptr)},
      {"dgp",
       {{"noise_mean", cfg.dgp.noise_mean},
        {"noise_sd", cfg.dgp.noise_sd},
        {"weight_lo", cfg.dgp.weights.lo},
        {"weight_hi", cfg.dgp.weights.hi},
        {"random_sign", cfg.dgp.weights.random_sign},
        {"n_source", cfg.dgp.n_source},
        {"n_target", cfg.dgp.n_target},
        {"perturb_mean", optional_number(cfg.dgp.perturb_mean)},
        {"perturb_sd", cfg.dgp.perturb_sd}}},
      {"zoo",
       {{"ridge_penalties", cfg.zoo.ridge_penalties},
        {"poly_degrees", cfg.zoo.poly_degrees},
        {"poly_penalties", cfg.zoo.poly_penalties},
        {"knn_k", cfg.zoo.knn_k},
        {"include_oracle", cfg.zoo.include_oracle},
        {"corruption_coefficients", cfg.zoo.corruption_coefficients}}},
      {"methods", methods},
      {"lambda", lambda},
      {"validation_fraction", cfg.validation_fraction},
      {"propensity",
       {{"clip", {cfg.propensity_clip.lo, cfg.propensity_clip.hi}}, {"l2", cfg.propensity_l2}}},
      {"density_ratio",
       {{"clip", {cfg.weight_clip.lo, cfg.weight_clip.hi}}, {"l2", cfg.discriminator_l2}}},
      {"ci_alpha", cfg.ci_alpha},
      {"sweeps",
       {{"risk", cfg.sweep_risk.name()},
        {"lambdas", cfg.sweep_lambdas},
        {"fractions", cfg.sweep_fractions},
        {"mode", std::string(perturb_mode_name(cfg.sweep_mode))},
        {"kept", cfg.sweep_kept}}},
  };
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  check_keys(j,
             {"seed", "n_dags", "threads", "nodes", "max_edges", "dgp", "zoo", "methods", "lambda",
              "validation_fraction", "propensity", "density_ratio", "ci_alpha", "sweeps"},
             "config");
  read_opt(j, "seed", cfg.seed);
  read_opt(j, "n_dags", cfg.n_dags);
  read_opt(j, "threads", cfg.threads);
  read_opt(j, "validation_fraction", cfg.validation_fraction);
  read_opt(j, "ci_alpha", cfg.ci_alpha);
  if (j.contains("max_edges") && !j.at("max_edges").is_null()) {
    cfg.max_edges = get_as<std::size_t>(j, "max_edges");
  }
  if (j.contains("nodes")) {
    const Json& n = j.at("nodes");
    check_keys(n, {"min", "max"}, "nodes");
    read_opt(n, "min", cfg.min_nodes);
    read_opt(n, "max", cfg.max_nodes);
  }
  if (j.contains("dgp")) {
    const Json& d = j.at("dgp");
    check_keys(d,
               {"noise_mean", "noise_sd", "weight_lo", "weight_hi", "random_sign", "n_source",
                "n_target", "perturb_mean", "perturb_sd"},
               "dgp");
    read_opt(d, "noise_mean", cfg.dgp.noise_mean);
    read_opt(d, "noise_sd", cfg.dgp.noise_sd);
    read_opt(d, "weight_lo", cfg.dgp.weights.lo);
    read_opt(d, "weight_hi", cfg.dgp.weights.hi);
    read_opt(d, "random_sign", cfg.dgp.weights.random_sign);
    read_opt(d, "n_source", cfg.dgp.n_source);
    read_opt(d, "n_target", cfg.dgp.n_target);
    read_opt(d, "perturb_sd", cfg.dgp.perturb_sd);
    if (d.contains("perturb_mean") && !d.at("perturb_mean").is_null()) {
      cfg.dgp.perturb_mean = get_as<double>(d, "perturb_mean");
    }
  }
  if (j.contains("zoo")) {
    const Json& z = j.at("zoo");
    check_keys(z,
               {"ridge_penalties", "poly_degrees", "poly_penalties", "knn_k", "include_oracle",
                "corruption_coefficients"},
               "zoo");
    read_opt(z, "ridge_penalties", cfg.zoo.ridge_penalties);
    read_opt(z, "poly_degrees", cfg.zoo.poly_degrees);
    read_opt(z, "poly_penalties", cfg.zoo.poly_penalties);
    read_opt(z, "knn_k", cfg.zoo.knn_k);
    read_opt(z, "include_oracle", cfg.zoo.include_oracle);
    read_opt(z, "corruption_coefficients", cfg.zoo.corruption_coefficients);
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "methods")) {
      cfg.methods.push_back(ValidationRisk::parse(name));
    }
  }
  if (j.contains("lambda")) {
    const Json& l = j.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "edge_ratio") {
        fail(ErrorCode::kConfig, "lambda must be a number or \"edge_ratio\"");
      }
      cfg.lambda.kind = LambdaPolicy::Kind::kEdgeRatio;
    } else {
      cfg.lambda.kind = LambdaPolicy::Kind::kFixed;
      cfg.lambda.value = get_as<double>(j, "lambda");
    }
  }
  if (j.contains("propensity")) {
    const Json& p = j.at("propensity");
    check_keys(p, {"clip", "l2"}, "propensity");
    if (p.contains("clip")) cfg.propensity_clip = read_clip(p, "clip");
    read_opt(p, "l2", cfg.propensity_l2);
  }
  if (j.contains("density_ratio")) {
    const Json& p = j.at("density_ratio");
    check_keys(p, {"clip", "l2"}, "density_ratio");
    if (p.contains("clip")) cfg.weight_clip = read_clip(p, "clip");
    read_opt(p, "l2", cfg.discriminator_l2);
  }
  if (j.contains("sweeps")) {
    const Json& s = j.at("sweeps");
    check_keys(s, {"risk", "lambdas", "fractions", "mode", "kept"}, "sweeps");
    if (s.contains("risk")) cfg.sweep_risk = ValidationRisk::parse(get_as<std::string>(s, "risk"));
    read_opt(s, "lambdas", cfg.sweep_lambdas);
    read_opt(s, "fractions", cfg.sweep_fractions);
    read_opt(s, "kept", cfg.sweep_kept);
    if (s.contains("mode")) cfg.sweep_mode = parse_perturb_mode(get_as<std::string>(s, "mode"));
  }
  if (!(cfg.ci_alpha > 0.0 && cfg.ci_alpha < 1.0)) fail(ErrorCode::kConfig, "ci_alpha must lie in (0, 1)");
  cfg.validate();
  return cfg;
}

std::string curve_csv(const SweepReport& report) {
  std::string out = "parameter,mean_pehe10,se_pehe10,mean_delta,se_delta\n";
  for (const auto& p : report.points) {
    out += format_double(p.parameter) + ',' + format_double(p.pehe10.mean) + ',' +
           format_double(p.pehe10.se) + ',' + format_double(p.delta.mean) + ',' +
           format_double(p.delta.se) + '\n';
  }
  return out;
}

}  // namespace icms
