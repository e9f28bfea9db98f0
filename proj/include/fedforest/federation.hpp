#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fedforest/dataset.hpp"
#include "fedforest/ensemble.hpp"
#include "fedforest/ledger.hpp"
#include "fedforest/tree.hpp"

namespace fedforest {

/// Undirected connection graph, optionally time-varying (queried per round).
class Topology {
 public:
  static Topology disconnected(std::uint32_t n);
  static Topology ring(std::uint32_t n);
  static Topology complete(std::uint32_t n);
  static Topology from_edges(std::uint32_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);
  static Topology time_varying(
      std::uint32_t n,
      std::function<std::vector<std::pair<std::uint32_t, std::uint32_t>>(std::uint32_t)> edges_at);

  std::uint32_t node_count() const { return n_; }
  const std::string& name() const { return name_; }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_at(std::uint32_t round) const;
  std::vector<std::uint32_t> neighbors(std::uint32_t node, std::uint32_t round) const;
  bool has_edges(std::uint32_t round) const;

 private:
  Topology() = default;
  static std::vector<std::pair<std::uint32_t, std::uint32_t>> normalize_edges(
      std::uint32_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);

  std::uint32_t n_ = 0;
  std::string name_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> static_edges_;
  std::function<std::vector<std::pair<std::uint32_t, std::uint32_t>>(std::uint32_t)> dynamic_;
};

/// One mailbox slot: the last payload written by a given neighbor. Writes
/// overwrite; reads mark the slot consumed but keep it.
struct RegistrySlot {
  std::uint32_t sender = 0;
  std::uint32_t round = 0;
  std::vector<std::vector<std::uint8_t>> tree_blobs;
  Digest digest{};
  std::vector<std::uint8_t> signature;
  bool read = false;
};

struct Registry {
  std::map<std::uint32_t, RegistrySlot> slots;  // keyed by sender

  std::size_t total_trees() const;
};

struct FederationConfig {
  std::uint32_t n_new = 10;
  std::uint32_t n_max = 50;
  std::uint32_t n_share = 10;
  std::uint32_t rounds = 4;
  Topology topology = Topology::disconnected(1);
  TreeTrainConfig tree_cfg;
  KernelOptions ranker;
  std::uint64_t seed = 0;
  std::string process_id = "fedforest-run";
};

struct AgentState {
  std::uint32_t node_id = 0;
  NodeDataset data;
  Ensemble ensemble;
  std::uint32_t next_counter = 0;
  Registry registry;
  KeyPair keys;
};

struct AgentSnapshot {
  std::uint32_t round = 0;
  std::uint32_t node_id = 0;
  std::vector<EstimatorId> members;
};

enum class Phase : std::uint8_t { fit = 0, share = 1, get = 2 };

/// Called after each completed phase (or after each op in async mode) with a
/// consistent view of all agents; used by tests to audit invariants.
using PhaseObserver = std::function<void(Phase, std::uint32_t round, const std::vector<AgentState>&)>;

/// One entry of an asynchronous schedule.
struct AgentOp {
  std::uint32_t node = 0;
  Phase op = Phase::fit;
  std::uint32_t round = 1;
};

struct RunResult {
  FederationConfig config;
  std::vector<AgentSnapshot> snapshots;  // one per (round, agent), post-round
  std::vector<AgentState> agents;        // final states
  Ledger ledger;
  std::map<EstimatorId, std::uint32_t> creation_round;
  std::vector<std::string> log;

  const AgentSnapshot& snapshot_of(std::uint32_t round, std::uint32_t node) const;
};

/// Live protocol state: the agents, the shared ledger, and bookkeeping. The
/// op_* functions below mutate it one protocol step at a time; the runners
/// compose them into full experiments.
struct FederationRuntime {
  FederationConfig cfg;
  std::vector<AgentState> agents;
  Ledger ledger;
  KeyPair coordinator_keys;
  std::map<EstimatorId, std::uint32_t> creation_round;
  std::vector<std::string> log;
  std::vector<AgentSnapshot> snapshots;
};

/// Registers the algorithm image and the learning process (with every
/// agent's public key) on a fresh ledger and hands back the initial state.
FederationRuntime init_federation(std::vector<NodeDataset> nodes, const FederationConfig& cfg);

/// Trains n_new fresh trees on the node's own data, merges them and crops to
/// n_max; emits one signed execution record. Skips (with a log line) when the
/// train set is empty.
void op_fit(FederationRuntime& rt, std::uint32_t node, std::uint32_t round);

/// Writes the node's top n_share trees to every current neighbor's registry
/// slot (overwriting) and emits one signed execution record. No-op without
/// neighbors.
void op_share(FederationRuntime& rt, std::uint32_t node, std::uint32_t round);

/// Absorbs all unread registry slots after digest + signature verification;
/// bad payloads are discarded and ledger-logged as incidents. Crops to n_max.
void op_get(FederationRuntime& rt, std::uint32_t node, std::uint32_t round);

/// Model records per agent plus the completed-process update; moves the
/// state into a RunResult.
RunResult finish_federation(FederationRuntime rt);

/// Phase-synchronized rounds: every agent fits, then every agent shares
/// (skipped entirely when the graph has no edges that round), then every
/// agent absorbs its registry. Fully deterministic in (nodes, cfg).
RunResult run_experiment(std::vector<NodeDataset> nodes, const FederationConfig& cfg,
                         const PhaseObserver& observer = {});

/// Event-list scheduler: ops execute one by one in the given order. Snapshots
/// are recorded after each op for the acting agent.
RunResult run_experiment_async(std::vector<NodeDataset> nodes, const FederationConfig& cfg,
                               const std::vector<AgentOp>& schedule,
                               const PhaseObserver& observer = {});

std::string node_name(std::uint32_t node);

/// One JSON line per (round, agent) with the ensemble id list; byte-stable
/// for identical runs.
void write_snapshots_jsonl(const std::vector<AgentSnapshot>& snapshots, std::ostream& out);
std::vector<AgentSnapshot> load_snapshots_jsonl(std::istream& in);

/// Seed of the i-th tree trained by `node` in `round`; exposed so a
/// standalone training run can reproduce an agent's local stream exactly.
std::uint64_t tree_seed(std::uint64_t run_seed, std::uint32_t node, std::uint32_t round,
                        std::uint32_t tree_index);

/// Canonical framing of a tree-blob batch (count, then length-prefixed
/// blobs); its SHA-256 is the payload digest recorded on the ledger.
std::vector<std::uint8_t> frame_tree_blobs(const std::vector<std::vector<std::uint8_t>>& blobs);

}  // namespace fedforest
