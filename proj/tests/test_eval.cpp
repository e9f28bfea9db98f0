#include "doctest.h"

#include <sstream>

#include "fedforest/eval.hpp"
#include "fedforest/federation.hpp"
#include "fedforest/rng.hpp"
#include "fedforest/run_config.hpp"

using namespace fedforest;

TEST_SUITE("eval") {

TEST_CASE("confusion counts the four cells") {
  const std::vector<int> labels{1, 1, 0, 0};
  const ConfusionCounts perfect = confusion({0.9, 0.8, 0.1, 0.2}, labels);
  CHECK(perfect.tp == 2);
  CHECK(perfect.tn == 2);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  const ConfusionCounts silent = confusion({0.0, 0.0, 0.0, 0.0}, labels);
  CHECK(silent.tp == 0);
  CHECK(silent.fp == 0);
  CHECK(silent.fn == 2);

  // Exactly 0.5 classifies as normal, so a positive at the boundary is a miss.
  const ConfusionCounts boundary = confusion({0.5}, {1});
  CHECK(boundary.fn == 1);
  CHECK(boundary.tp == 0);

  CHECK_THROWS(confusion({0.1}, {0, 1}));
}

TEST_CASE("metric formulas and division conventions") {
  const Metrics perfect = metrics({10, 0, 90, 0});
  CHECK(perfect.bacc == 1.0);
  CHECK(perfect.prec == 1.0);
  CHECK(perfect.rec == 1.0);

  // All-negative predictor with both classes present.
  const Metrics allneg = metrics({0, 0, 90, 10});
  CHECK(allneg.rec == 0.0);
  CHECK(allneg.prec == 0.0);
  CHECK(allneg.bacc == 0.5);

  // TP=FP and TN=FN, all positive counts.
  const Metrics half = metrics({5, 5, 5, 5});
  CHECK(half.prec == 0.5);
  CHECK(half.bacc == doctest::Approx(0.5 * (half.rec + 5.0 / 10.0)));

  const Metrics nopos = metrics({0, 3, 7, 0});
  CHECK(nopos.no_positives);
  CHECK(nopos.rec == 0.0);
}

TEST_CASE("metrics stay inside the unit interval") {
  Rng rng(64);
  for (int i = 0; i < 200; ++i) {
    const ConfusionCounts c{rng.next_below(50), rng.next_below(50), rng.next_below(50),
                            rng.next_below(50)};
    const Metrics m = metrics(c);
    CHECK(m.bacc >= 0.0);
    CHECK(m.bacc <= 1.0);
    CHECK(m.prec >= 0.0);
    CHECK(m.prec <= 1.0);
    CHECK(m.rec >= 0.0);
    CHECK(m.rec <= 1.0);
  }
}

namespace {

RunResult tiny_run(const Topology& topology, std::uint64_t seed) {
  RunSpec spec;
  spec.dataset.m = 900;
  spec.dataset.d = 5;
  spec.dataset.fraud_ratio = 0.05;
  spec.dataset.seed = seed;
  spec.partition = {3, 0.4, 0.9, seed};
  FederationConfig cfg;
  cfg.topology = topology;
  cfg.seed = seed;
  cfg.rounds = 2;
  cfg.n_new = 3;
  cfg.n_max = 9;
  cfg.n_share = 3;
  cfg.tree_cfg.max_depth = 4;
  cfg.tree_cfg.min_samples_leaf = 2;
  return run_experiment(build_nodes(spec), cfg);
}

}  // namespace

TEST_CASE("a run against itself improves nothing") {
  const RunResult run = tiny_run(Topology::ring(3), 41);
  std::vector<NodeDataset> dummy;
  LabeledDataset central;
  central.d = 5;
  for (const AgentState& a : run.agents) {
    central.examples.insert(central.examples.end(), a.data.test.examples.begin(),
                            a.data.test.examples.end());
    central.labels.insert(central.labels.end(), a.data.test.labels.begin(),
                          a.data.test.labels.end());
  }
  const auto nm = evaluate_nodes(run, central);
  const ImprovementReport rep = improvement_report(nm, nm);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(rep.test_summary[k].mean == 0.0);
    CHECK(rep.test_summary[k].median == 0.0);
    for (double d : rep.test_delta[k]) CHECK(d == 0.0);
  }
}

TEST_CASE("improvement_report rejects mismatched node sets") {
  const RunResult run = tiny_run(Topology::ring(3), 42);
  LabeledDataset central = run.agents[0].data.test;
  auto nm = evaluate_nodes(run, central);
  auto fewer = nm;
  fewer.pop_back();
  CHECK_THROWS(improvement_report(nm, fewer));
}

TEST_CASE("disconnected provenance is purely diagonal and rows sum to 100") {
  const RunResult run = tiny_run(Topology::disconnected(3), 43);
  const ProvenanceMatrix m = provenance_matrix(run.snapshots, run.config.rounds, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      row += m[j][i];
      if (i != j) CHECK(m[j][i] == 0.0);
    }
    CHECK(row == doctest::Approx(100.0).epsilon(1e-9));
  }
  CHECK_THROWS(provenance_matrix(run.snapshots, 99, 3));
}

TEST_CASE("connected provenance mixes origins") {
  const RunResult run = tiny_run(Topology::complete(3), 44);
  const ProvenanceMatrix m = provenance_matrix(run.snapshots, run.config.rounds, 3);
  double off_diagonal = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      row += m[j][i];
      if (i != j) off_diagonal += m[j][i];
    }
    CHECK(row == doctest::Approx(100.0).epsilon(1e-9));
  }
  CHECK(off_diagonal > 0.0);
}

TEST_CASE("empty ensembles produce an all-zero provenance row") {
  std::vector<AgentSnapshot> snaps;
  snaps.push_back({1, 0, {{0, 0}, {0, 1}}});
  snaps.push_back({1, 1, {}});
  const ProvenanceMatrix m = provenance_matrix(snaps, 1, 2);
  CHECK(m[0][0] == doctest::Approx(100.0));
  CHECK(m[1][0] == 0.0);
  CHECK(m[1][1] == 0.0);
}

TEST_CASE("csv reports are deterministic for identical inputs") {
  const RunResult run = tiny_run(Topology::ring(3), 45);
  const RunResult base = tiny_run(Topology::disconnected(3), 45);
  LabeledDataset central;
  central.d = 5;
  for (const AgentState& a : run.agents) {
    central.examples.insert(central.examples.end(), a.data.test.examples.begin(),
                            a.data.test.examples.end());
    central.labels.insert(central.labels.end(), a.data.test.labels.begin(),
                          a.data.test.labels.end());
  }
  const auto nm_run = evaluate_nodes(run, central);
  const auto nm_base = evaluate_nodes(base, central);
  const ImprovementReport rep = improvement_report(nm_run, nm_base);

  std::ostringstream a1, a2, b1, b2, c1, c2;
  write_metrics_csv(nm_run, nm_base, a1);
  write_metrics_csv(nm_run, nm_base, a2);
  write_improvement_csv(rep, b1);
  write_improvement_csv(rep, b2);
  write_provenance_csv(provenance_matrix(run.snapshots, 2, 3), c1);
  write_provenance_csv(provenance_matrix(run.snapshots, 2, 3), c2);
  CHECK(a1.str() == a2.str());
  CHECK(b1.str() == b2.str());
  CHECK(c1.str() == c2.str());
  CHECK(a1.str().find("node,split") == 0);
}

TEST_CASE("median handles even and odd counts") {
  std::vector<NodeMetrics> run(4), base(4);
  for (std::uint32_t j = 0; j < 4; ++j) {
    run[j].node = base[j].node = j;
    run[j].test.bacc = 0.1 * static_cast<double>(j + 1);  // 0.1 0.2 0.3 0.4
    base[j].test.bacc = 0.0;
  }
  const ImprovementReport even = improvement_report(run, base);
  CHECK(even.test_summary[0].median == doctest::Approx(0.25));
  CHECK(even.test_summary[0].mean == doctest::Approx(0.25));
  CHECK(even.test_summary[0].min_node == 0);
  CHECK(even.test_summary[0].max_node == 3);

  run.pop_back();
  base.pop_back();
  const ImprovementReport odd = improvement_report(run, base);
  CHECK(odd.test_summary[0].median == doctest::Approx(0.2));
}

}  // TEST_SUITE
