#include "fedforest/run_config.hpp"

#include <stdexcept>

namespace fedforest {

namespace {

Topology topology_from_json(const nlohmann::json& j, std::uint32_t n) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "disconnected") return Topology::disconnected(n);
    if (name == "ring") return Topology::ring(n);
    if (name == "complete") return Topology::complete(n);
    throw std::invalid_argument("unknown topology preset '" + name + "'");
  }
  if (j.is_object() && j.contains("edges")) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& e : j.at("edges")) {
      edges.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
    }
    return Topology::from_edges(n, std::move(edges));
  }
  throw std::invalid_argument("topology must be a preset name or {\"edges\": [[i,j],...]}");
}

nlohmann::json topology_to_json(const Topology& t) {
  const std::string& name = t.name();
  if (name == "disconnected" || name == "ring" || name == "complete") return name;
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : t.edges_at(1)) edges.push_back({a, b});
  return nlohmann::json{{"edges", edges}};
}

}  // namespace

RunSpec parse_run_spec(const nlohmann::json& j) {
  RunSpec spec;

  const nlohmann::json& ds = j.at("dataset");
  const std::string kind = ds.value("type", "synth");
  if (kind == "csv") {
    spec.dataset.kind = DatasetSpec::Kind::csv;
    spec.dataset.path = ds.at("path").get<std::string>();
    spec.dataset.label_column = ds.value("label_column", "Class");
  } else if (kind == "synth") {
    spec.dataset.kind = DatasetSpec::Kind::synth;
    spec.dataset.m = ds.value("m", std::size_t{20000});
    spec.dataset.d = ds.value("d", std::size_t{10});
    spec.dataset.fraud_ratio = ds.value("fraud_ratio", 0.002);
    spec.dataset.seed = ds.value("seed", std::uint64_t{0});
  } else {
    throw std::invalid_argument("dataset.type must be 'csv' or 'synth'");
  }

  const nlohmann::json& part = j.at("partition");
  spec.partition.n_parts = part.at("n_parts").get<std::size_t>();
  spec.partition.imbalance = part.value("imbalance", 0.7);
  spec.partition.train_fraction = part.value("train_fraction", 0.9);
  spec.partition.seed = part.value("seed", std::uint64_t{0});

  FederationConfig& fed = spec.federation;
  fed.n_new = j.value("n_new", 10u);
  fed.n_max = j.value("n_max", 50u);
  fed.n_share = j.value("n_share", 10u);
  fed.rounds = j.value("rounds", 4u);
  fed.seed = j.value("seed", std::uint64_t{0});
  fed.process_id = j.value("process_id", std::string("fedforest-run"));
  fed.topology = topology_from_json(j.at("topology"),
                                    static_cast<std::uint32_t>(spec.partition.n_parts));
  if (j.contains("tree")) {
    const nlohmann::json& t = j.at("tree");
    fed.tree_cfg.max_depth = t.value("max_depth", 10u);
    fed.tree_cfg.min_samples_leaf = t.value("min_samples_leaf", 5u);
    fed.tree_cfg.features_per_split = t.value("features_per_split", 0u);
    fed.tree_cfg.bootstrap = t.value("bootstrap", true);
    const std::string w = t.value("class_weighting", "balanced");
    if (w == "balanced") fed.tree_cfg.class_weighting = ClassWeighting::balanced;
    else if (w == "none") fed.tree_cfg.class_weighting = ClassWeighting::none;
    else throw std::invalid_argument("tree.class_weighting must be 'balanced' or 'none'");
  }
  if (j.contains("ranker")) {
    fed.ranker.normalize = j.at("ranker").value("normalize", false);
  }
  return spec;
}

nlohmann::json run_spec_to_json(const RunSpec& spec) {
  nlohmann::json ds;
  if (spec.dataset.kind == DatasetSpec::Kind::csv) {
    ds = {{"type", "csv"}, {"path", spec.dataset.path}, {"label_column", spec.dataset.label_column}};
  } else {
    ds = {{"type", "synth"},
          {"m", spec.dataset.m},
          {"d", spec.dataset.d},
          {"fraud_ratio", spec.dataset.fraud_ratio},
          {"seed", spec.dataset.seed}};
  }
  const FederationConfig& fed = spec.federation;
  return nlohmann::json{
      {"dataset", ds},
      {"partition",
       {{"n_parts", spec.partition.n_parts},
        {"imbalance", spec.partition.imbalance},
        {"train_fraction", spec.partition.train_fraction},
        {"seed", spec.partition.seed}}},
      {"topology", topology_to_json(fed.topology)},
      {"n_new", fed.n_new},
      {"n_max", fed.n_max},
      {"n_share", fed.n_share},
      {"rounds", fed.rounds},
      {"seed", fed.seed},
      {"process_id", fed.process_id},
      {"tree",
       {{"max_depth", fed.tree_cfg.max_depth},
        {"min_samples_leaf", fed.tree_cfg.min_samples_leaf},
        {"features_per_split", fed.tree_cfg.features_per_split},
        {"bootstrap", fed.tree_cfg.bootstrap},
        {"class_weighting",
         fed.tree_cfg.class_weighting == ClassWeighting::balanced ? "balanced" : "none"}}},
      {"ranker", {{"normalize", fed.ranker.normalize}}}};
}

LabeledDataset build_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::csv) return load_csv(spec.path, spec.label_column);
  return synth_generate(spec.m, spec.d, spec.fraud_ratio, spec.seed);
}

std::vector<NodeDataset> build_nodes(const RunSpec& spec) {
  const LabeledDataset ds = build_dataset(spec.dataset);
  const std::vector<LabeledDataset> parts = partition_unbalanced(ds, spec.partition);
  std::vector<NodeDataset> nodes;
  nodes.reserve(parts.size());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    nodes.push_back(split_train_test(parts[j], spec.partition.train_fraction, spec.partition.seed,
                                     static_cast<std::uint32_t>(j)));
  }
  return nodes;
}

nlohmann::json partition_table_json(const std::vector<NodeDataset>& nodes) {
  nlohmann::json rows = nlohmann::json::array();
  std::size_t test_total = 0, test_pos = 0;
  for (const NodeDataset& n : nodes) {
    const std::size_t trp = n.train.positives();
    const std::size_t tep = n.test.positives();
    rows.push_back({{"node", n.node_id},
                    {"train_size", n.train.size()},
                    {"train_positives", trp},
                    {"train_fraud_ratio",
                     n.train.size() ? static_cast<double>(trp) / static_cast<double>(n.train.size()) : 0.0},
                    {"test_size", n.test.size()},
                    {"test_positives", tep}});
    test_total += n.test.size();
    test_pos += tep;
  }
  return nlohmann::json{
      {"nodes", rows},
      {"central_test",
       {{"size", test_total},
        {"positives", test_pos},
        {"fraud_ratio", test_total ? static_cast<double>(test_pos) / static_cast<double>(test_total) : 0.0}}}};
}

}  // namespace fedforest
