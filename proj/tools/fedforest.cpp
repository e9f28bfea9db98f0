#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedforest/eval.hpp"
#include "fedforest/federation.hpp"
#include "fedforest/ledger.hpp"
#include "fedforest/run_config.hpp"
#include "fedforest/tree_codec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fedforest;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

struct RunFlags {
  std::string config_path;
  std::string dataset_path;
  std::string label_column;
  std::string topology;
  std::string topology_file;
  std::size_t n_parts = 0;
  double imbalance = -1.0;
  double train_fraction = -1.0;
  std::uint32_t rounds = 0;
  std::uint32_t n_new = 0;
  std::uint32_t n_share = 0;
  std::uint32_t n_max = 0;
  std::int64_t seed = -1;
  std::size_t synth_m = 0;
  std::size_t synth_d = 0;
  double synth_ratio = -1.0;
  std::string out_dir = "out";
};

RunSpec assemble_run_spec(const RunFlags& f) {
  json base;
  if (!f.config_path.empty()) {
    base = load_json_file(f.config_path);
  } else {
    base = {{"dataset", {{"type", "synth"}}},
            {"partition", {{"n_parts", 20}}},
            {"topology", "disconnected"}};
  }
  if (!f.dataset_path.empty()) {
    base["dataset"] = {{"type", "csv"}, {"path", f.dataset_path}};
    if (!f.label_column.empty()) base["dataset"]["label_column"] = f.label_column;
  }
  if (f.synth_m) base["dataset"]["m"] = f.synth_m;
  if (f.synth_d) base["dataset"]["d"] = f.synth_d;
  if (f.synth_ratio >= 0) base["dataset"]["fraud_ratio"] = f.synth_ratio;
  if (!f.topology.empty()) {
    if (f.topology == "file") {
      if (f.topology_file.empty()) throw std::runtime_error("--topology file needs --topology-file");
      base["topology"] = load_json_file(f.topology_file);
    } else {
      base["topology"] = f.topology;
    }
  }
  if (f.n_parts) base["partition"]["n_parts"] = f.n_parts;
  if (f.imbalance >= 0) base["partition"]["imbalance"] = f.imbalance;
  if (f.train_fraction > 0) base["partition"]["train_fraction"] = f.train_fraction;
  if (f.rounds) base["rounds"] = f.rounds;
  if (f.n_new) base["n_new"] = f.n_new;
  if (f.n_share) base["n_share"] = f.n_share;
  if (f.n_max) base["n_max"] = f.n_max;
  if (f.seed >= 0) {
    base["seed"] = f.seed;
    base["partition"]["seed"] = f.seed;
    if (base["dataset"].value("type", "synth") == "synth") base["dataset"]["seed"] = f.seed;
  }
  return parse_run_spec(base);
}

int cmd_partition(const RunFlags& f, const std::string& out_path) {
  RunSpec spec = assemble_run_spec(f);
  const std::vector<NodeDataset> nodes = build_nodes(spec);
  json manifest = partition_table_json(nodes);
  manifest["config"] = run_spec_to_json(spec);
  write_text(out_path, manifest.dump(2) + "\n");
  std::cout << "partition manifest written to " << out_path << "\n";
  std::size_t zero_fraud_nodes = 0;
  for (const NodeDataset& n : nodes) {
    if (n.train.positives() == 0) ++zero_fraud_nodes;
  }
  std::cout << "nodes: " << nodes.size() << ", zero-fraud train sets: " << zero_fraud_nodes << "\n";
  return 0;
}

int cmd_run(const RunFlags& f) {
  RunSpec spec = assemble_run_spec(f);
  const fs::path out = f.out_dir;
  fs::create_directories(out / "ensembles");

  const std::vector<NodeDataset> nodes = build_nodes(spec);
  const json partition_table = partition_table_json(nodes);
  const RunResult result = run_experiment(nodes, spec.federation);

  std::ostringstream snaps;
  write_snapshots_jsonl(result.snapshots, snaps);
  write_text(out / "snapshots.jsonl", snaps.str());

  std::ostringstream ledger_stream;
  result.ledger.save_jsonl(ledger_stream);
  write_text(out / "ledger.jsonl", ledger_stream.str());

  for (const AgentState& a : result.agents) {
    std::vector<std::uint32_t> rounds;
    for (const EstimatorId& id : a.ensemble.member_ids()) {
      auto it = result.creation_round.find(id);
      rounds.push_back(it == result.creation_round.end() ? 0 : it->second);
    }
    std::ofstream ens(out / "ensembles" / (node_name(a.node_id) + ".fens"), std::ios::binary);
    save_ensemble(a.ensemble, ens, &rounds);
  }

  json manifest;
  manifest["config"] = run_spec_to_json(spec);
  manifest["partition_table"] = partition_table;
  manifest["schedule"] = "per round: FIT, SHARE (when the graph has edges), GET; last round included";
  manifest["ranking_tail_rule"] = "below-tolerance candidates are appended in ascending (origin, counter) order";
  manifest["log"] = result.log;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "run complete: " << result.snapshots.size() << " snapshots, "
            << result.ledger.size() << " ledger records -> " << out.string() << "\n";
  return 0;
}

std::vector<AgentSnapshot> load_snapshots(const fs::path& dir) {
  std::ifstream in(dir / "snapshots.jsonl");
  if (!in) throw std::runtime_error("cannot open " + (dir / "snapshots.jsonl").string());
  return load_snapshots_jsonl(in);
}

std::vector<Ensemble> load_run_ensembles(const fs::path& dir, std::size_t n_nodes) {
  std::vector<Ensemble> out;
  for (std::size_t j = 0; j < n_nodes; ++j) {
    std::ifstream in(dir / "ensembles" / (node_name(static_cast<std::uint32_t>(j)) + ".fens"),
                     std::ios::binary);
    if (!in) throw std::runtime_error("missing ensemble file for node " + std::to_string(j));
    out.push_back(load_ensemble(in));
  }
  return out;
}

int cmd_report(const std::string& run_dir, const std::string& baseline_dir,
               const std::string& out_dir) {
  const json run_manifest = load_json_file((fs::path(run_dir) / "manifest.json").string());
  const json base_manifest = load_json_file((fs::path(baseline_dir) / "manifest.json").string());
  if (run_manifest.at("config").at("dataset") != base_manifest.at("config").at("dataset") ||
      run_manifest.at("config").at("partition") != base_manifest.at("config").at("partition")) {
    throw std::runtime_error("report: run and baseline were produced from different data partitions");
  }

  const RunSpec spec = parse_run_spec(run_manifest.at("config"));
  const std::vector<NodeDataset> nodes = build_nodes(spec);
  const LabeledDataset central = build_central_test(nodes);
  const std::size_t n = nodes.size();

  const std::vector<Ensemble> run_ens = load_run_ensembles(run_dir, n);
  const std::vector<Ensemble> base_ens = load_run_ensembles(baseline_dir, n);
  std::vector<const Ensemble*> run_ptrs, base_ptrs;
  std::vector<const LabeledDataset*> trains;
  for (std::size_t j = 0; j < n; ++j) {
    run_ptrs.push_back(&run_ens[j]);
    base_ptrs.push_back(&base_ens[j]);
    trains.push_back(&nodes[j].train);
  }
  const auto run_metrics = evaluate_nodes(run_ptrs, trains, central);
  const auto base_metrics = evaluate_nodes(base_ptrs, trains, central);
  const ImprovementReport rep = improvement_report(run_metrics, base_metrics);

  const std::vector<AgentSnapshot> snaps = load_snapshots(run_dir);
  std::uint32_t last_round = 0;
  for (const AgentSnapshot& s : snaps) last_round = std::max(last_round, s.round);
  const ProvenanceMatrix prov = provenance_matrix(snaps, last_round, static_cast<std::uint32_t>(n));

  fs::create_directories(out_dir);
  std::ostringstream metrics_csv, improvement_csv, provenance_csv;
  write_metrics_csv(run_metrics, base_metrics, metrics_csv);
  write_improvement_csv(rep, improvement_csv);
  write_provenance_csv(prov, provenance_csv);
  write_text(fs::path(out_dir) / "metrics.csv", metrics_csv.str());
  write_text(fs::path(out_dir) / "improvement.csv", improvement_csv.str());
  write_text(fs::path(out_dir) / "provenance.csv", provenance_csv.str());

  static const char* names[3] = {"BAcc", "Prec", "Rec"};
  std::cout << "test-set improvement over baseline (mean / median):\n";
  for (std::size_t k = 0; k < 3; ++k) {
    std::cout << "  " << names[k] << ": " << rep.test_summary[k].mean << " / "
              << rep.test_summary[k].median << "\n";
  }
  std::cout << "reports written to " << out_dir << "\n";
  return 0;
}

int cmd_verify(const std::string& ledger_path) {
  std::ifstream in(ledger_path);
  if (!in) throw std::runtime_error("cannot open '" + ledger_path + "'");
  const std::vector<LedgerRecord> records = load_ledger_jsonl(in);
  const ChainVerdict verdict = verify_chain(records);
  if (verdict.ok) {
    std::cout << "ok: " << records.size() << " records, chain and signatures verify\n";
    return 0;
  }
  std::cout << "INVALID at record " << verdict.first_bad_index << ": " << verdict.reason << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedforest: federated random-forest anomaly detection with a verifiable audit ledger"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string partition_out = "partition.json";
  std::string run_dir, baseline_dir, report_out = "report";
  std::string ledger_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "run config JSON");
    cmd->add_option("--dataset", flags.dataset_path, "input CSV (omit to generate synthetic data)");
    cmd->add_option("--label-column", flags.label_column, "CSV label column (default Class)");
    cmd->add_option("--n-parts", flags.n_parts, "number of agents / partition cells");
    cmd->add_option("--imbalance", flags.imbalance, "partition imbalance in [0,1)");
    cmd->add_option("--train-fraction", flags.train_fraction, "train fraction in (0,1)");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--synth-m", flags.synth_m, "synthetic rows");
    cmd->add_option("--synth-d", flags.synth_d, "synthetic feature count");
    cmd->add_option("--synth-ratio", flags.synth_ratio, "synthetic fraud ratio");
  };

  CLI::App* partition = app.add_subcommand("partition", "partition a dataset and emit the per-node manifest");
  add_common(partition);
  partition->add_option("--out", partition_out, "manifest output path");

  CLI::App* run = app.add_subcommand("run", "run a federated experiment");
  add_common(run);
  run->add_option("--topology", flags.topology, "disconnected|ring|complete|file");
  run->add_option("--topology-file", flags.topology_file, "edge-list JSON for --topology file");
  run->add_option("--rounds", flags.rounds, "protocol rounds");
  run->add_option("--n-new", flags.n_new, "trees trained per FIT");
  run->add_option("--n-share", flags.n_share, "trees shared per SHARE");
  run->add_option("--n-max", flags.n_max, "ensemble capacity");
  run->add_option("--out-dir", flags.out_dir, "output directory");

  CLI::App* report = app.add_subcommand("report", "metrics, improvement, and provenance CSVs");
  report->add_option("--run-dir", run_dir, "federated run directory")->required();
  report->add_option("--baseline-dir", baseline_dir, "disconnected baseline directory")->required();
  report->add_option("--out-dir", report_out, "report output directory");

  CLI::App* verify = app.add_subcommand("verify", "replay and verify a persisted ledger");
  verify->add_option("--ledger", ledger_path, "ledger.jsonl path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (partition->parsed()) return cmd_partition(flags, partition_out);
    if (run->parsed()) return cmd_run(flags);
    if (report->parsed()) return cmd_report(run_dir, baseline_dir, report_out);
    if (verify->parsed()) return cmd_verify(ledger_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
