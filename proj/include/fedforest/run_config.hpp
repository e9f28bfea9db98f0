#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedforest/dataset.hpp"
#include "fedforest/federation.hpp"

namespace fedforest {

struct DatasetSpec {
  enum class Kind { csv, synth };
  Kind kind = Kind::synth;
  std::string path;                  // csv
  std::string label_column = "Class";
  std::size_t m = 20000;             // synth
  std::size_t d = 10;
  double fraud_ratio = 0.002;
  std::uint64_t seed = 0;
};

struct RunSpec {
  DatasetSpec dataset;
  PartitionSpec partition;
  FederationConfig federation;
};

/// Config JSON: dataset (csv path or synth parameters), partition, protocol
/// parameters, topology as a preset name or an explicit edge list.
RunSpec parse_run_spec(const nlohmann::json& j);
nlohmann::json run_spec_to_json(const RunSpec& spec);

LabeledDataset build_dataset(const DatasetSpec& spec);
std::vector<NodeDataset> build_nodes(const RunSpec& spec);

nlohmann::json partition_table_json(const std::vector<NodeDataset>& nodes);

}  // namespace fedforest
