#include "fedforest/federation.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedforest/rng.hpp"
#include "fedforest/tree_codec.hpp"

namespace fedforest {

// ---------------------------------------------------------------------------
// Topology

std::vector<std::pair<std::uint32_t, std::uint32_t>> Topology::normalize_edges(
    std::uint32_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> uniq;
  for (auto [a, b] : edges) {
    if (a == b) throw std::invalid_argument("Topology: self-loops are not allowed");
    if (a >= n || b >= n) throw std::invalid_argument("Topology: edge endpoint out of range");
    uniq.insert({std::min(a, b), std::max(a, b)});
  }
  return {uniq.begin(), uniq.end()};
}

Topology Topology::disconnected(std::uint32_t n) {
  Topology t;
  t.n_ = n;
  t.name_ = "disconnected";
  return t;
}

Topology Topology::ring(std::uint32_t n) {
  Topology t;
  t.n_ = n;
  t.name_ = "ring";
  if (n >= 2) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
    for (std::uint32_t i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
    t.static_edges_ = normalize_edges(n, std::move(e));
  }
  return t;
}

Topology Topology::complete(std::uint32_t n) {
  Topology t;
  t.n_ = n;
  t.name_ = "complete";
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) e.push_back({i, j});
  }
  t.static_edges_ = normalize_edges(n, std::move(e));
  return t;
}

Topology Topology::from_edges(std::uint32_t n,
                              std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  Topology t;
  t.n_ = n;
  t.name_ = "edges";
  t.static_edges_ = normalize_edges(n, std::move(edges));
  return t;
}

Topology Topology::time_varying(
    std::uint32_t n,
    std::function<std::vector<std::pair<std::uint32_t, std::uint32_t>>(std::uint32_t)> edges_at) {
  Topology t;
  t.n_ = n;
  t.name_ = "time-varying";
  t.dynamic_ = std::move(edges_at);
  return t;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Topology::edges_at(std::uint32_t round) const {
  if (dynamic_) return normalize_edges(n_, dynamic_(round));
  return static_edges_;
}

std::vector<std::uint32_t> Topology::neighbors(std::uint32_t node, std::uint32_t round) const {
  std::vector<std::uint32_t> out;
  for (auto [a, b] : edges_at(round)) {
    if (a == node) out.push_back(b);
    if (b == node) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Topology::has_edges(std::uint32_t round) const { return !edges_at(round).empty(); }

// ---------------------------------------------------------------------------
// Helpers

std::size_t Registry::total_trees() const {
  std::size_t total = 0;
  for (const auto& [sender, slot] : slots) total += slot.tree_blobs.size();
  return total;
}

std::string node_name(std::uint32_t node) {
  std::string num = std::to_string(node);
  if (num.size() < 2) num.insert(num.begin(), '0');
  return "Node" + num;
}

std::uint64_t tree_seed(std::uint64_t run_seed, std::uint32_t node, std::uint32_t round,
                        std::uint32_t tree_index) {
  return derive_seed(run_seed, 0x666974ULL | (static_cast<std::uint64_t>(node) << 32), round,
                     tree_index);
}

std::vector<std::uint8_t> frame_tree_blobs(const std::vector<std::vector<std::uint8_t>>& blobs) {
  std::vector<std::uint8_t> out;
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(static_cast<std::uint32_t>(blobs.size()));
  for (const auto& b : blobs) {
    put_u32(static_cast<std::uint32_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

const AgentSnapshot& RunResult::snapshot_of(std::uint32_t round, std::uint32_t node) const {
  for (const AgentSnapshot& s : snapshots) {
    if (s.round == round && s.node_id == node) return s;
  }
  throw std::out_of_range("snapshot_of: no snapshot for that (round, node)");
}

void write_snapshots_jsonl(const std::vector<AgentSnapshot>& snapshots, std::ostream& out) {
  for (const AgentSnapshot& s : snapshots) {
    nlohmann::json members = nlohmann::json::array();
    for (const EstimatorId& id : s.members) members.push_back({id.origin, id.counter});
    out << nlohmann::json{{"round", s.round}, {"node", s.node_id}, {"ensemble", members}}.dump()
        << "\n";
  }
}

std::vector<AgentSnapshot> load_snapshots_jsonl(std::istream& in) {
  std::vector<AgentSnapshot> snaps;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    AgentSnapshot s;
    s.round = j.at("round").get<std::uint32_t>();
    s.node_id = j.at("node").get<std::uint32_t>();
    for (const auto& pair : j.at("ensemble")) {
      s.members.push_back({pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>()});
    }
    snaps.push_back(std::move(s));
  }
  return snaps;
}

namespace {

Digest key_seed(std::uint64_t run_seed, const std::string& name) {
  std::vector<std::uint8_t> material;
  const std::string tag = "fedforest-key";
  material.insert(material.end(), tag.begin(), tag.end());
  for (int i = 0; i < 8; ++i) material.push_back(static_cast<std::uint8_t>(run_seed >> (8 * i)));
  material.insert(material.end(), name.begin(), name.end());
  return sha256(material);
}

nlohmann::json config_json(const FederationConfig& cfg) {
  nlohmann::json topo;
  topo["name"] = cfg.topology.name();
  nlohmann::json rounds_edges = nlohmann::json::array();
  for (std::uint32_t r = 1; r <= cfg.rounds; ++r) {
    nlohmann::json e = nlohmann::json::array();
    for (auto [a, b] : cfg.topology.edges_at(r)) e.push_back({a, b});
    rounds_edges.push_back(e);
  }
  topo["edges_per_round"] = rounds_edges;
  return nlohmann::json{
      {"n_new", cfg.n_new},
      {"n_max", cfg.n_max},
      {"n_share", cfg.n_share},
      {"rounds", cfg.rounds},
      {"seed", cfg.seed},
      {"topology", topo},
      {"tree",
       {{"max_depth", cfg.tree_cfg.max_depth},
        {"min_samples_leaf", cfg.tree_cfg.min_samples_leaf},
        {"features_per_split", cfg.tree_cfg.features_per_split},
        {"bootstrap", cfg.tree_cfg.bootstrap},
        {"class_weighting", cfg.tree_cfg.class_weighting == ClassWeighting::balanced ? "balanced" : "none"}}},
      {"ranker", {{"normalize", cfg.ranker.normalize}}}};
}

void report_incident(FederationRuntime& rt, std::uint32_t node, std::uint32_t round,
                     const Digest& digest, const std::string& what) {
  rt.log.push_back(node_name(node) + " round " + std::to_string(round) + ": " + what);
  rt.ledger.append_execution_record(rt.cfg.process_id, round, ExecOp::incident, node_name(node),
                                    digest, rt.agents[node].keys);
}

void take_snapshot(FederationRuntime& rt, std::uint32_t round, std::uint32_t node) {
  rt.snapshots.push_back({round, node, rt.agents[node].ensemble.member_ids()});
}

}  // namespace

FederationRuntime init_federation(std::vector<NodeDataset> nodes, const FederationConfig& cfg) {
  const std::uint32_t n = cfg.topology.node_count();
  if (nodes.size() != n) {
    throw std::invalid_argument("init_federation: topology size does not match node count");
  }
  if (cfg.n_share > cfg.n_max) {
    throw std::invalid_argument("init_federation: n_share must not exceed n_max");
  }
  if (cfg.n_new == 0 || cfg.rounds == 0) {
    throw std::invalid_argument("init_federation: n_new and rounds must be positive");
  }
  for (std::uint32_t j = 0; j < n; ++j) {
    if (nodes[j].node_id != j) {
      throw std::invalid_argument("init_federation: node ids must match their position");
    }
  }

  FederationRuntime rt;
  rt.cfg = cfg;
  rt.agents.resize(n);
  for (std::uint32_t j = 0; j < n; ++j) {
    rt.agents[j].node_id = j;
    rt.agents[j].data = std::move(nodes[j]);
    rt.agents[j].ensemble = Ensemble(cfg.n_max);
    rt.agents[j].keys = KeyPair::from_seed(key_seed(cfg.seed, node_name(j)));
  }

  rt.coordinator_keys = KeyPair::from_seed(key_seed(cfg.seed, "coordinator"));
  const std::string artifact = config_json(cfg).dump();
  const LedgerRecord& image = rt.ledger.register_image(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(artifact.data()),
                                    artifact.size()),
      "coordinator", rt.coordinator_keys);
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> consortium;
  for (const AgentState& a : rt.agents) {
    consortium.emplace_back(node_name(a.node_id), a.keys.public_key);
  }
  rt.ledger.create_process(cfg.process_id, decode_image_payload(image.payload).artifact_digest,
                           std::move(consortium), "coordinator", rt.coordinator_keys);
  return rt;
}

void op_fit(FederationRuntime& rt, std::uint32_t node, std::uint32_t round) {
  AgentState& a = rt.agents.at(node);
  if (a.data.train.empty()) {
    rt.log.push_back(node_name(node) + " round " + std::to_string(round) +
                     ": empty train set, FIT skipped");
    return;
  }
  std::vector<TreePtr> fresh;
  std::vector<std::vector<std::uint8_t>> blobs;
  for (std::uint32_t i = 0; i < rt.cfg.n_new; ++i) {
    TreeTrainConfig tc = rt.cfg.tree_cfg;
    tc.seed = tree_seed(rt.cfg.seed, node, round, i);
    const EstimatorId id{node, a.next_counter + i};
    auto tree = std::make_shared<DecisionTree>(fit_tree(a.data.train, tc, id));
    blobs.push_back(serialize_tree(*tree));
    fresh.push_back(std::move(tree));
    rt.creation_round[id] = round;
  }
  a.next_counter += rt.cfg.n_new;
  a.ensemble.add(fresh);
  if (a.ensemble.size() > rt.cfg.n_max) a.ensemble.crop(rt.cfg.n_max, rt.cfg.ranker);
  rt.ledger.append_execution_record(rt.cfg.process_id, round, ExecOp::fit, node_name(node),
                                    sha256(frame_tree_blobs(blobs)), a.keys);
}

void op_share(FederationRuntime& rt, std::uint32_t node, std::uint32_t round) {
  AgentState& a = rt.agents.at(node);
  if (a.ensemble.empty()) {
    rt.log.push_back(node_name(node) + " round " + std::to_string(round) +
                     ": empty ensemble, SHARE skipped");
    return;
  }
  const std::vector<std::uint32_t> neighbors = rt.cfg.topology.neighbors(node, round);
  if (neighbors.empty()) return;

  std::vector<std::vector<std::uint8_t>> blobs;
  for (const TreePtr& t : a.ensemble.get_top(rt.cfg.n_share, rt.cfg.ranker)) {
    blobs.push_back(serialize_tree(*t));
  }
  const Digest digest = sha256(frame_tree_blobs(blobs));

  const ExecutionPayload exec{rt.cfg.process_id, round, ExecOp::share, digest};
  const std::vector<std::uint8_t> exec_bytes = encode_payload(exec);
  std::vector<std::uint8_t> sig = ed25519_sign(a.keys.private_key, exec_bytes);
  rt.ledger.append_signed(RecordType::execution, exec_bytes, node_name(node), sig);

  for (std::uint32_t nb : neighbors) {
    RegistrySlot slot;
    slot.sender = node;
    slot.round = round;
    slot.tree_blobs = blobs;
    slot.digest = digest;
    slot.signature = sig;
    slot.read = false;
    rt.agents[nb].registry.slots[node] = std::move(slot);  // last writer wins
  }
}

void op_get(FederationRuntime& rt, std::uint32_t node, std::uint32_t round) {
  AgentState& a = rt.agents.at(node);
  bool absorbed = false;
  for (auto& [sender, slot] : a.registry.slots) {
    if (slot.read) continue;
    slot.read = true;  // consumed either way; dedup makes re-reads harmless
    const Digest actual = sha256(frame_tree_blobs(slot.tree_blobs));
    const auto sender_key = rt.ledger.public_key_of(node_name(sender));
    const std::vector<std::uint8_t> expect_bytes =
        encode_payload(ExecutionPayload{rt.cfg.process_id, slot.round, ExecOp::share, actual});
    const bool valid = actual == slot.digest && sender_key &&
                       ed25519_verify(*sender_key, expect_bytes, slot.signature);
    if (!valid) {
      report_incident(rt, node, round, actual, "registry payload failed digest/signature check");
      continue;
    }
    std::vector<TreePtr> incoming;
    bool decode_ok = true;
    try {
      for (const auto& blob : slot.tree_blobs) {
        incoming.push_back(std::make_shared<DecisionTree>(deserialize_tree(blob)));
      }
    } catch (const CodecError& e) {
      decode_ok = false;
      report_incident(rt, node, round, actual,
                      std::string("registry payload failed to decode: ") + e.what());
    }
    if (!decode_ok) continue;
    a.ensemble.add(incoming);
    absorbed = true;
  }
  if (absorbed && a.ensemble.size() > rt.cfg.n_max) a.ensemble.crop(rt.cfg.n_max, rt.cfg.ranker);
}

RunResult finish_federation(FederationRuntime rt) {
  for (AgentState& a : rt.agents) {
    if (a.ensemble.empty()) continue;
    const std::vector<std::uint8_t> bytes = ensemble_to_bytes(a.ensemble);
    rt.ledger.append_model_record(rt.cfg.process_id, sha256(bytes), node_name(a.node_id), a.keys);
  }
  rt.ledger.update_process(rt.cfg.process_id, rt.cfg.rounds, ProcessStatus::completed,
                           "coordinator", rt.coordinator_keys);
  RunResult result;
  result.config = std::move(rt.cfg);
  result.snapshots = std::move(rt.snapshots);
  result.agents = std::move(rt.agents);
  result.ledger = std::move(rt.ledger);
  result.creation_round = std::move(rt.creation_round);
  result.log = std::move(rt.log);
  return result;
}

RunResult run_experiment(std::vector<NodeDataset> nodes, const FederationConfig& cfg,
                         const PhaseObserver& observer) {
  FederationRuntime rt = init_federation(std::move(nodes), cfg);
  const std::uint32_t n = cfg.topology.node_count();
  for (std::uint32_t round = 1; round <= cfg.rounds; ++round) {
    for (std::uint32_t j = 0; j < n; ++j) op_fit(rt, j, round);
    if (observer) observer(Phase::fit, round, rt.agents);
    if (cfg.topology.has_edges(round)) {
      for (std::uint32_t j = 0; j < n; ++j) op_share(rt, j, round);
      if (observer) observer(Phase::share, round, rt.agents);
    }
    for (std::uint32_t j = 0; j < n; ++j) op_get(rt, j, round);
    if (observer) observer(Phase::get, round, rt.agents);
    for (std::uint32_t j = 0; j < n; ++j) take_snapshot(rt, round, j);
    if (round < cfg.rounds) {
      rt.ledger.update_process(cfg.process_id, round, ProcessStatus::running, "coordinator",
                               rt.coordinator_keys);
    }
  }
  return finish_federation(std::move(rt));
}

RunResult run_experiment_async(std::vector<NodeDataset> nodes, const FederationConfig& cfg,
                               const std::vector<AgentOp>& schedule,
                               const PhaseObserver& observer) {
  FederationRuntime rt = init_federation(std::move(nodes), cfg);
  const std::uint32_t n = cfg.topology.node_count();
  for (const AgentOp& op : schedule) {
    if (op.node >= n) throw std::invalid_argument("run_experiment_async: node out of range");
    switch (op.op) {
      case Phase::fit:
        op_fit(rt, op.node, op.round);
        break;
      case Phase::share:
        op_share(rt, op.node, op.round);
        break;
      case Phase::get:
        op_get(rt, op.node, op.round);
        break;
    }
    if (observer) observer(op.op, op.round, rt.agents);
    take_snapshot(rt, op.round, op.node);
  }
  return finish_federation(std::move(rt));
}

}  // namespace fedforest
