// End-to-end acceptance suite. Each check prints one [PASS]/[FAIL] line with
// its runtime; the process exits non-zero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "fedforest/dataset.hpp"
#include "fedforest/ensemble.hpp"
#include "fedforest/eval.hpp"
#include "fedforest/federation.hpp"
#include "fedforest/ledger.hpp"
#include "fedforest/ranking.hpp"
#include "fedforest/rng.hpp"
#include "fedforest/run_config.hpp"
#include "fedforest/subtree_enum.hpp"
#include "fedforest/tree.hpp"
#include "fedforest/tree_codec.hpp"
#include "fedforest/tree_kernel.hpp"

using namespace fedforest;

namespace {

int failures = 0;
std::vector<std::string> details;

struct Check {
  std::string name;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Check(std::string n) : name(std::move(n)) {}

  void finish(bool ok, double limit_seconds) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed <= limit_seconds;
    if (!ok || !in_time) ++failures;
    std::cout << (ok && in_time ? "[PASS] " : "[FAIL] ") << name << "  (" << std::fixed
              << std::setprecision(1) << elapsed << "s";
    if (!in_time) std::cout << ", over the " << limit_seconds << "s limit";
    std::cout << ")\n";
    for (const std::string& d : details) std::cout << "       " << d << "\n";
    details.clear();
    std::cout.flush();
  }
};

void note(const std::string& s) { details.push_back(s); }

// --- shared helpers --------------------------------------------------------

std::int32_t grow_random(DecisionTree& t, Rng& rng, std::uint32_t d, int depth, int max_depth,
                         int& budget) {
  const std::int32_t self = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  const bool internal = depth < max_depth && budget > 0 && rng.next_unit() < 0.75;
  if (!internal) {
    t.nodes[static_cast<std::size_t>(self)] = {-1, rng.next_unit(), -1, -1};
    return self;
  }
  --budget;
  t.nodes[static_cast<std::size_t>(self)].feature = static_cast<std::int32_t>(rng.next_below(d));
  t.nodes[static_cast<std::size_t>(self)].value = rng.next_gaussian();
  const std::int32_t l = grow_random(t, rng, d, depth + 1, max_depth, budget);
  t.nodes[static_cast<std::size_t>(self)].left = l;
  const std::int32_t r = grow_random(t, rng, d, depth + 1, max_depth, budget);
  t.nodes[static_cast<std::size_t>(self)].right = r;
  return self;
}

DecisionTree random_tree(Rng& rng, EstimatorId id, int max_internal = 15) {
  DecisionTree t;
  t.id = id;
  t.d = 3;
  int budget = max_internal;
  grow_random(t, rng, 3, 0, 6, budget);
  return t;
}

std::vector<TreePtr> trained_trees(std::size_t count, std::uint64_t seed) {
  const LabeledDataset ds = synth_generate(600, 5, 0.1, seed);
  std::vector<TreePtr> trees;
  for (std::size_t i = 0; i < count; ++i) {
    TreeTrainConfig cfg;
    cfg.max_depth = 5;
    cfg.min_samples_leaf = 2;
    cfg.seed = derive_seed(seed, 91 + i);
    trees.push_back(std::make_shared<DecisionTree>(
        fit_tree(ds, cfg, {0, static_cast<std::uint32_t>(i)})));
  }
  return trees;
}

// Experiment configuration shared by the behavioral checks.
constexpr std::uint32_t kNodes = 20;

TreeTrainConfig experiment_tree_cfg() {
  TreeTrainConfig tc;
  tc.max_depth = 5;
  tc.min_samples_leaf = 12;
  tc.features_per_split = 0;  // resolved to every feature below via d <= fps cap
  return tc;
}

FederationConfig experiment_cfg(Topology topology, std::uint64_t seed, std::uint32_t d) {
  FederationConfig cfg;
  cfg.topology = std::move(topology);
  cfg.n_new = 10;
  cfg.n_share = 10;
  cfg.n_max = 50;
  cfg.rounds = 4;
  cfg.seed = seed;
  cfg.tree_cfg = experiment_tree_cfg();
  cfg.tree_cfg.features_per_split = d;  // no feature bagging in the benchmark runs
  return cfg;
}

std::vector<NodeDataset> experiment_nodes(std::size_t m, double ratio, std::uint64_t seed) {
  RunSpec spec;
  spec.dataset.kind = DatasetSpec::Kind::synth;
  spec.dataset.m = m;
  spec.dataset.d = 10;
  spec.dataset.fraud_ratio = ratio;
  spec.dataset.seed = seed;
  spec.partition = {kNodes, 0.7, 0.9, seed};
  return build_nodes(spec);
}

// Swap every train positive of `victim` against negatives from the largest
// other node, leaving sizes untouched.
void drain_positives(std::vector<NodeDataset>& nodes, std::uint32_t victim) {
  std::size_t donor = victim == 0 ? 1 : 0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (j != victim && nodes[j].train.size() > nodes[donor].train.size()) donor = j;
  }
  auto& vt = nodes[victim].train;
  auto& dt = nodes[donor].train;
  std::size_t dneg = 0;
  for (std::size_t i = 0; i < vt.size(); ++i) {
    if (vt.labels[i] != 1) continue;
    while (dneg < dt.size() && dt.labels[dneg] == 1) ++dneg;
    if (dneg >= dt.size()) break;
    std::swap(vt.examples[i], dt.examples[dneg]);
    std::swap(vt.labels[i], dt.labels[dneg]);
    ++dneg;
  }
}

std::uint32_t ring_distance(std::uint32_t a, std::uint32_t b, std::uint32_t n) {
  const std::uint32_t diff = a > b ? a - b : b - a;
  return std::min(diff, n - diff);
}

}  // namespace

// --- criteria ---------------------------------------------------------------

void criterion_kernel_oracle() {
  Check check("kernel recursion equals brute-force subtree enumeration on 200 random pairs");
  Rng rng(424242);
  bool ok = true;
  std::size_t pairs = 0, node_pairs = 0;
  while (pairs < 200) {
    const DecisionTree a = random_tree(rng, {0, static_cast<std::uint32_t>(pairs)});
    const DecisionTree b = random_tree(rng, {1, static_cast<std::uint32_t>(pairs)});
    if (a.internal_count() == 0 || b.internal_count() == 0) continue;
    ++pairs;
    for (std::size_t i = 0; i < a.nodes.size() && ok; ++i) {
      if (a.nodes[i].is_leaf()) continue;
      for (std::size_t j = 0; j < b.nodes.size() && ok; ++j) {
        if (b.nodes[j].is_leaf()) continue;
        ++node_pairs;
        const auto enumerated = enumerate_common_subtrees(a, static_cast<std::int32_t>(i), b,
                                                          static_cast<std::int32_t>(j));
        if (common_subtree_count(a, static_cast<std::int32_t>(i), b,
                                 static_cast<std::int32_t>(j)) != enumerated.size()) {
          ok = false;
          note("mismatch at tree pair " + std::to_string(pairs));
        }
      }
    }
  }
  note(std::to_string(pairs) + " tree pairs, " + std::to_string(node_pairs) + " node pairs, exact match");
  check.finish(ok, 10.0);
}

void criterion_kernel_psd() {
  Check check("Gram matrices of trained trees stay positive semidefinite over 20 seeds");
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<TreePtr> trees = trained_trees(20, 1000 + seed);
    const GramMatrix g = gram(trees);
    Eigen::MatrixXd m(20, 20);
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 20; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g.at(i, j);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    worst = std::min(worst, hi > 0 ? lo / hi : 0.0);
    if (lo < -1e-8 * hi) ok = false;
  }
  note("worst min/max eigenvalue ratio " + std::to_string(worst));
  check.finish(ok, 30.0);
}

void criterion_greedy_vs_exact() {
  Check check("greedy selection variance matches the dense GP posterior within 1e-8");
  bool ok = true;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 5 + seed % 4;  // up to 8 candidates
    const std::vector<TreePtr> trees = trained_trees(n, 2000 + seed);
    const GramMatrix g = gram(trees);
    std::vector<GreedyTraceRow> trace;
    p_greedy_rank(g, g.n, &trace);
    std::vector<std::size_t> prefix;
    double last_power = std::numeric_limits<double>::infinity();
    for (const GreedyTraceRow& row : trace) {
      std::size_t idx = g.n;
      for (std::size_t i = 0; i < g.n; ++i) {
        if (g.ids[i] == row.id) idx = i;
      }
      if (row.selected_by_power) {
        if (row.power > last_power + 1e-12) {
          ok = false;
          note("power increased between steps");
        }
        last_power = row.power;
        const double exact = posterior_variance_exact(g, prefix, idx);
        worst_gap = std::max(worst_gap, std::abs(row.power - exact));
        if (std::abs(row.power - exact) > 1e-8) ok = false;
      }
      prefix.push_back(idx);
    }
  }
  std::ostringstream gap;
  gap << std::scientific << std::setprecision(2) << worst_gap;
  note("worst |incremental - dense| = " + gap.str());
  check.finish(ok, 5.0);
}

void criterion_protocol_invariants() {
  Check check("protocol invariants hold for all three topologies at benchmark parameters");
  bool ok = true;
  const std::vector<NodeDataset> nodes = experiment_nodes(40000, 0.01, 1);

  for (const std::string topo : {"disconnected", "ring", "complete"}) {
    FederationConfig cfg = experiment_cfg(
        topo == "disconnected" ? Topology::disconnected(kNodes)
        : topo == "ring"       ? Topology::ring(kNodes)
                               : Topology::complete(kNodes),
        1, 10);
    bool capacity_ok = true;
    const RunResult result = run_experiment(
        nodes, cfg, [&](Phase, std::uint32_t, const std::vector<AgentState>& agents) {
          for (const AgentState& a : agents) {
            if (a.ensemble.size() > cfg.n_max) capacity_ok = false;
            if (a.registry.total_trees() > cfg.n_share * agents.size()) capacity_ok = false;
          }
        });
    if (!capacity_ok) {
      ok = false;
      note(topo + ": capacity bound violated");
    }

    std::map<EstimatorId, std::vector<std::uint8_t>> seen;
    for (const AgentState& a : result.agents) {
      for (const TreePtr& t : a.ensemble.members()) {
        const auto bytes = serialize_tree(*t);
        auto [it, inserted] = seen.emplace(t->id, bytes);
        if (!inserted && it->second != bytes) {
          ok = false;
          note(topo + ": two distinct trees share an id");
        }
      }
    }

    if (topo == "disconnected") {
      const ProvenanceMatrix prov = provenance_matrix(result.snapshots, cfg.rounds, kNodes);
      for (std::uint32_t j = 0; j < kNodes; ++j) {
        for (std::uint32_t i = 0; i < kNodes; ++i) {
          const double want = i == j ? 100.0 : 0.0;
          if (std::abs(prov[j][i] - want) > 1e-9) {
            ok = false;
            note("disconnected provenance is not diagonal");
          }
        }
      }
    }
  }
  note("20 agents, n_new=10, n_share=10, n_max=50, 4 rounds, 3 topologies");
  check.finish(ok, 600.0);
}

void criterion_zero_positive_rescue() {
  Check check("a zero-fraud node keeps recall 0 alone and gains >= 0.5 when fully connected");
  const std::string csv_path =
      std::getenv("FEDFOREST_CREDITCARD") ? std::getenv("FEDFOREST_CREDITCARD") : "creditcard.csv";
  std::vector<NodeDataset> nodes;
  if (std::filesystem::exists(csv_path)) {
    RunSpec spec;
    spec.dataset.kind = DatasetSpec::Kind::csv;
    spec.dataset.path = csv_path;
    spec.partition = {kNodes, 0.7, 0.9, 101};
    nodes = build_nodes(spec);
    note("dataset: " + csv_path);
  } else {
    nodes = experiment_nodes(100000, 0.002, 101);
    note("dataset: synthetic m=100000 ratio=0.002 (creditcard.csv not present)");
  }
  const std::uint32_t victim = 2;
  drain_positives(nodes, victim);
  bool ok = nodes[victim].train.positives() == 0;

  const LabeledDataset central = build_central_test(nodes);
  const std::uint32_t d = static_cast<std::uint32_t>(central.d);

  const RunResult disc =
      run_experiment(nodes, experiment_cfg(Topology::disconnected(kNodes), 101, d));
  const RunResult comp = run_experiment(nodes, experiment_cfg(Topology::complete(kNodes), 101, d));
  const auto disc_metrics = evaluate_nodes(disc, central);
  const auto comp_metrics = evaluate_nodes(comp, central);

  const double rec_alone = disc_metrics[victim].test.rec;
  const double rec_federated = comp_metrics[victim].test.rec;
  if (rec_alone != 0.0) ok = false;
  if (rec_federated - rec_alone < 0.5) ok = false;
  std::ostringstream line;
  line << "victim recall: disconnected " << rec_alone << ", fully connected " << rec_federated;
  note(line.str());
  check.finish(ok, 600.0);
}

void criterion_aggregate_benefit_and_generalization() {
  Check benefit("federation lifts mean and median of every test metric on both topologies");
  const std::vector<std::uint64_t> seeds{1, 3, 9};
  bool benefit_ok = true;
  int train_sign_votes = 0;
  double bacc_gain_ring = 0.0, bacc_gain_complete = 0.0;
  std::vector<RunResult> ring_runs;

  for (const std::uint64_t seed : seeds) {
    const std::vector<NodeDataset> nodes = experiment_nodes(40000, 0.01, seed);
    const LabeledDataset central = build_central_test(nodes);

    const auto disc = evaluate_nodes(
        run_experiment(nodes, experiment_cfg(Topology::disconnected(kNodes), seed, 10)), central);
    RunResult ring_run = run_experiment(nodes, experiment_cfg(Topology::ring(kNodes), seed, 10));
    const auto ring = evaluate_nodes(ring_run, central);
    const auto comp = evaluate_nodes(
        run_experiment(nodes, experiment_cfg(Topology::complete(kNodes), seed, 10)), central);

    const ImprovementReport ring_rep = improvement_report(ring, disc);
    const ImprovementReport comp_rep = improvement_report(comp, disc);
    for (std::size_t k = 0; k < 3; ++k) {
      if (ring_rep.test_summary[k].mean <= 0 || ring_rep.test_summary[k].median <= 0 ||
          comp_rep.test_summary[k].mean <= 0 || comp_rep.test_summary[k].median <= 0) {
        benefit_ok = false;
        note("seed " + std::to_string(seed) + ": a test metric failed to improve");
      }
    }
    bacc_gain_ring += ring_rep.test_summary[0].mean / static_cast<double>(seeds.size());
    bacc_gain_complete += comp_rep.test_summary[0].mean / static_cast<double>(seeds.size());
    if (comp_rep.train_summary[0].mean <= 0 && comp_rep.test_summary[0].mean > 0) {
      ++train_sign_votes;
    }
    ring_runs.push_back(std::move(ring_run));
  }
  if (bacc_gain_ring < 0.03 || bacc_gain_complete < 0.03) benefit_ok = false;
  {
    std::ostringstream line;
    line << "mean BAcc gain over 3 seeds: ring " << std::fixed << std::setprecision(3)
         << bacc_gain_ring << ", complete " << bacc_gain_complete << " (need >= 0.03)";
    note(line.str());
  }
  benefit.finish(benefit_ok, 600.0);

  Check general("fully-connected runs trade train-set fit for test-set gains (majority of seeds)");
  note("seeds with mean train BAcc delta <= 0 and mean test BAcc delta > 0: " +
       std::to_string(train_sign_votes) + "/3");
  general.finish(train_sign_votes * 2 > static_cast<int>(seeds.size()), 60.0);

  Check multihop("ring runs carry estimators beyond first-order neighbors");
  bool hop_ok = false;
  std::uint32_t best = 0;
  for (const RunResult& run : ring_runs) {
    for (const AgentState& a : run.agents) {
      for (const EstimatorId& id : a.ensemble.member_ids()) {
        const std::uint32_t dist = ring_distance(a.node_id, id.origin, kNodes);
        best = std::max(best, dist);
        if (dist >= 2) hop_ok = true;
      }
    }
  }
  note("max holder-origin ring distance observed: " + std::to_string(best));
  multihop.finish(hop_ok, 60.0);
}

void criterion_ledger() {
  Check check("ledger catches every byte flip, rejects all forgeries, reconciles every event");
  bool ok = true;

  // Tamper evidence on a 5-record chain.
  {
    const KeyPair owner = KeyPair::from_seed(sha256(std::string("owner")));
    const KeyPair alice = KeyPair::from_seed(sha256(std::string("alice")));
    const KeyPair bob = KeyPair::from_seed(sha256(std::string("bob")));
    Ledger ledger;
    const std::vector<std::uint8_t> artifact{'c', 'f', 'g'};
    const auto& img = ledger.register_image(artifact, "owner", owner);
    ledger.create_process("proc", decode_image_payload(img.payload).artifact_digest,
                          {{"alice", alice.public_key}, {"bob", bob.public_key}}, "owner", owner);
    ledger.append_execution_record("proc", 1, ExecOp::fit, "alice", sha256(std::string("a")), alice);
    ledger.append_execution_record("proc", 1, ExecOp::share, "bob", sha256(std::string("b")), bob);
    ledger.append_model_record("proc", sha256(std::string("m")), "alice", alice);

    const std::vector<LedgerRecord> base = ledger.records();
    if (base.size() != 5 || !verify_chain(base).ok) ok = false;
    std::size_t flips = 0;
    for (std::size_t r = 0; r < base.size() && ok; ++r) {
      auto tamper = [&](auto&& mutate) {
        std::vector<LedgerRecord> chain = base;
        mutate(chain[r]);
        const ChainVerdict v = verify_chain(chain);
        if (v.ok || v.first_bad_index != r) ok = false;
        ++flips;
      };
      for (std::size_t i = 0; i < 8; ++i) tamper([&](LedgerRecord& rec) { rec.index ^= 1ULL << (8 * i); });
      for (std::size_t i = 0; i < 32; ++i) tamper([&](LedgerRecord& rec) { rec.prev_hash[i] ^= 0xff; });
      for (std::size_t i = 0; i < base[r].payload.size(); ++i) {
        tamper([&](LedgerRecord& rec) { rec.payload[i] ^= 0xff; });
      }
      for (std::size_t i = 0; i < base[r].author.size(); ++i) {
        tamper([&](LedgerRecord& rec) { rec.author[i] = static_cast<char>(rec.author[i] ^ 0x01); });
      }
      for (std::size_t i = 0; i < base[r].signature.size(); ++i) {
        tamper([&](LedgerRecord& rec) { rec.signature[i] ^= 0xff; });
      }
      for (std::size_t i = 0; i < 32; ++i) tamper([&](LedgerRecord& rec) { rec.this_hash[i] ^= 0xff; });
    }
    note("single-byte tampering attempts detected at the right index: " + std::to_string(flips));

    // Forged signatures.
    const KeyPair mallory = KeyPair::from_seed(sha256(std::string("mallory")));
    Rng rng(77);
    int rejected = 0;
    for (int i = 0; i < 100; ++i) {
      const ExecutionPayload exec{"proc", static_cast<std::uint32_t>(i), ExecOp::fit,
                                  sha256(std::to_string(i))};
      std::vector<std::uint8_t> payload = encode_payload(exec);
      std::vector<std::uint8_t> sig;
      if (i % 3 == 0) {
        sig = ed25519_sign(mallory.private_key, payload);
      } else if (i % 3 == 1) {
        auto other = payload;
        other[0] ^= 0x80;
        sig = ed25519_sign(alice.private_key, other);
      } else {
        sig = ed25519_sign(alice.private_key, payload);
        sig.resize(rng.next_below(64));
      }
      try {
        ledger.append_signed(RecordType::execution, payload, "alice", sig);
      } catch (const LedgerError&) {
        ++rejected;
      }
    }
    if (rejected != 100) {
      ok = false;
      note("only " + std::to_string(rejected) + "/100 forgeries rejected");
    } else {
      note("100/100 forged records rejected");
    }
  }

  // Reconciliation: exactly one execution record per FIT / SHARE event.
  {
    const std::vector<NodeDataset> nodes = experiment_nodes(4000, 0.01, 5);
    FederationConfig cfg = experiment_cfg(Topology::ring(kNodes), 5, 10);
    cfg.rounds = 3;
    std::size_t fit_events = 0, share_events = 0;
    const RunResult result = run_experiment(
        nodes, cfg, [&](Phase phase, std::uint32_t, const std::vector<AgentState>& agents) {
          if (phase == Phase::fit) fit_events += agents.size();
          if (phase == Phase::share) share_events += agents.size();
        });
    std::size_t fit_records = 0, share_records = 0;
    for (const LedgerRecord& r : result.ledger.records()) {
      if (r.type != RecordType::execution) continue;
      const ExecOp op = decode_execution_payload(r.payload).op;
      if (op == ExecOp::fit) ++fit_records;
      if (op == ExecOp::share) ++share_records;
    }
    if (fit_records != fit_events || share_records != share_events) {
      ok = false;
      note("reconciliation mismatch: " + std::to_string(fit_records) + "/" +
           std::to_string(fit_events) + " fits, " + std::to_string(share_records) + "/" +
           std::to_string(share_events) + " shares");
    } else {
      note("reconciled " + std::to_string(fit_records) + " FIT and " +
           std::to_string(share_records) + " SHARE records");
    }
    if (!verify_chain(result.ledger.records()).ok) ok = false;
  }

  check.finish(ok, 60.0);
}

void criterion_determinism() {
  Check check("identical configs reproduce snapshot bytes and ledger digests");
  const std::vector<NodeDataset> nodes = experiment_nodes(4000, 0.01, 6);
  FederationConfig cfg = experiment_cfg(Topology::complete(kNodes), 6, 10);
  cfg.rounds = 2;

  auto render = [&](const RunResult& r) {
    std::ostringstream snaps, ledger;
    write_snapshots_jsonl(r.snapshots, snaps);
    r.ledger.save_jsonl(ledger);
    return std::make_pair(snaps.str(), ledger.str());
  };
  const auto a = render(run_experiment(nodes, cfg));
  const auto b = render(run_experiment(nodes, cfg));
  bool ok = a.first == b.first && a.second == b.second;
  note(ok ? "snapshot files and full ledgers are byte-identical"
          : "byte difference between identical runs");
  check.finish(ok, 120.0);
}

int main() {
  std::cout << "fedforest acceptance suite\n==========================\n";
  criterion_kernel_oracle();
  criterion_kernel_psd();
  criterion_greedy_vs_exact();
  criterion_protocol_invariants();
  criterion_zero_positive_rescue();
  criterion_aggregate_benefit_and_generalization();
  criterion_ledger();
  criterion_determinism();
  std::cout << "==========================\n"
            << (failures == 0 ? "all acceptance checks passed\n"
                              : std::to_string(failures) + " acceptance check(s) FAILED\n");
  return failures == 0 ? 0 : 1;
}
