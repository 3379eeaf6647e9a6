#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "icms/dataset.hpp"
#include "icms/dgp.hpp"
#include "icms/graph.hpp"
#include "icms/harness.hpp"
#include "icms/selection.hpp"

namespace icms {

using Json = nlohmann::json;

// Graph JSON:
//   {"nodes":[{"id":0,"name":"X1","role":"feature","kind":"continuous"}],
//    "edges":[{"src":0,"dst":2,"weight":0.7}]}
Json graph_to_json(const CausalDag& dag);
CausalDag graph_from_json(const Json& j);  // rejects cycles
CausalDag read_graph(const std::filesystem::path& path);
void write_graph(const std::filesystem::path& path, const CausalDag& dag);

// Datasets are a CSV with a header row plus a sidecar
//   {"columns":[{"name":"X1","kind":"continuous"}],"treatment":"T","outcome":"Y"}
// stored next to it as <stem>.meta.json unless given explicitly.
std::filesystem::path meta_path_for(const std::filesystem::path& csv);
Dataset read_dataset(const std::filesystem::path& csv, const std::filesystem::path& meta);
Dataset read_dataset(const std::filesystem::path& csv);
void write_dataset(const std::filesystem::path& csv, const Dataset& data);

// Evaluation-only potential outcomes: columns y0, y1, cate.
void write_truth(const std::filesystem::path& csv, const PotentialOutcomeTruth& truth);
PotentialOutcomeTruth read_truth(const std::filesystem::path& csv);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

Json to_json(const ScoreReport& r);
Json to_json(const std::vector<ScoreReport>& reports);
Json to_json(const Summary& s);
Json to_json(const DagRecord& record);
Json to_json(const ExperimentReport& report);
Json to_json(const SweepReport& report);
Json to_json(const ExperimentConfig& cfg);

// Unknown keys are rejected so typos surface as config errors.
ExperimentConfig experiment_config_from_json(const Json& j);

// parameter,mean_pehe10,se_pehe10,mean_delta,se_delta
std::string curve_csv(const SweepReport& report);

}  // namespace icms
