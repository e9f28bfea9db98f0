#include "doctest.h"

#include <set>

#include "fedforest/dataset.hpp"
#include "fedforest/eval.hpp"
#include "fedforest/rng.hpp"
#include "fedforest/tree.hpp"
#include "fedforest/tree_codec.hpp"

using namespace fedforest;

namespace {

// Test-local router, independent of DecisionTree::predict.
double route_by_hand(const DecisionTree& t, const FeatureVector& x) {
  std::int32_t cur = 0;
  for (;;) {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(cur)];
    if (n.is_leaf()) return n.value;
    cur = x[static_cast<std::size_t>(n.feature)] <= n.value ? n.left : n.right;
  }
}

DecisionTree make_stump(std::int32_t feature, double threshold, double left_score,
                        double right_score, std::uint32_t d, EstimatorId id = {0, 0}) {
  DecisionTree t;
  t.id = id;
  t.d = d;
  t.nodes.push_back({feature, threshold, 1, 2});
  t.nodes.push_back({-1, left_score, -1, -1});
  t.nodes.push_back({-1, right_score, -1, -1});
  return t;
}

}  // namespace

TEST_SUITE("tree") {

TEST_CASE("single-class data collapses to one leaf") {
  LabeledDataset ds;
  ds.d = 2;
  for (int i = 0; i < 20; ++i) ds.push_row({1.0 * i, 2.0 * i}, 0);
  TreeTrainConfig cfg;
  cfg.bootstrap = false;
  const DecisionTree t = fit_tree(ds, cfg, {3, 7});
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].is_leaf());
  CHECK(t.nodes[0].value == 0.0);
  CHECK(t.id.origin == 3);
  CHECK(t.id.counter == 7);
}

TEST_CASE("a separable pair yields one split with clean leaves") {
  LabeledDataset ds;
  ds.d = 1;
  ds.push_row({0.0}, 0);
  ds.push_row({1.0}, 1);
  TreeTrainConfig cfg;
  cfg.min_samples_leaf = 1;
  cfg.features_per_split = 1;
  cfg.bootstrap = false;
  const DecisionTree t = fit_tree(ds, cfg, {0, 0});
  REQUIRE(t.nodes.size() == 3);
  CHECK(!t.nodes[0].is_leaf());
  CHECK(t.nodes[0].value > 0.0);
  CHECK(t.nodes[0].value < 1.0);
  CHECK(t.predict({0.0}) == 0.0);
  CHECK(t.predict({1.0}) == 1.0);
}

TEST_CASE("training accuracy beats chance on synthetic data") {
  const LabeledDataset ds = synth_generate(2000, 6, 0.05, 17);
  TreeTrainConfig cfg;
  cfg.max_depth = 8;
  cfg.seed = 17;
  const DecisionTree t = fit_tree(ds, cfg, {0, 0});
  std::vector<double> scores;
  for (const auto& x : ds.examples) scores.push_back(t.predict(x));
  CHECK(metrics(confusion(scores, ds.labels)).bacc > 0.5);
}

TEST_CASE("prediction follows the routing convention") {
  DecisionTree leaf;
  leaf.d = 3;
  leaf.nodes.push_back({-1, 0.3, -1, -1});
  CHECK(leaf.predict({1.0, 2.0, 3.0}) == 0.3);

  const DecisionTree stump = make_stump(0, 0.5, 0.0, 1.0, 1);
  CHECK(stump.predict({0.4}) == 0.0);
  CHECK(stump.predict({0.5}) == 0.0);  // boundary goes left
  CHECK(stump.predict({0.6}) == 1.0);

  CHECK_THROWS(stump.predict({0.1, 0.2}));
}

TEST_CASE("every training example routes to its own leaf score") {
  const LabeledDataset ds = synth_generate(600, 5, 0.1, 23);
  TreeTrainConfig cfg;
  cfg.seed = 23;
  const DecisionTree t = fit_tree(ds, cfg, {0, 0});
  for (const auto& x : ds.examples) {
    CHECK(t.predict(x) == route_by_hand(t, x));
  }
}

TEST_CASE("routing totality over random vectors") {
  const LabeledDataset ds = synth_generate(500, 4, 0.1, 31);
  TreeTrainConfig cfg;
  cfg.seed = 31;
  const DecisionTree t = fit_tree(ds, cfg, {0, 0});
  Rng rng(4711);
  for (int i = 0; i < 1000; ++i) {
    FeatureVector x(4);
    for (double& v : x) v = rng.next_gaussian() * 10.0;
    const double s = t.predict(x);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("bootstrap_sample basics") {
  LabeledDataset one;
  one.d = 1;
  one.push_row({42.0}, 1);
  const LabeledDataset s1 = bootstrap_sample(one, 9);
  REQUIRE(s1.size() == 1);
  CHECK(s1.examples[0][0] == 42.0);

  LabeledDataset empty;
  empty.d = 1;
  CHECK_THROWS(bootstrap_sample(empty, 1));
}

TEST_CASE("bootstrap distinct fraction concentrates near 1 - 1/e") {
  LabeledDataset ds;
  ds.d = 1;
  for (int i = 0; i < 1000; ++i) ds.push_row({1.0 * i}, 0);
  double total_fraction = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LabeledDataset s = bootstrap_sample(ds, seed);
    std::set<double> distinct;
    for (const auto& r : s.examples) distinct.insert(r[0]);
    total_fraction += static_cast<double>(distinct.size()) / 1000.0;
  }
  const double mean_fraction = total_fraction / 100.0;
  CHECK(mean_fraction > 0.58);
  CHECK(mean_fraction < 0.68);
}

TEST_CASE("different seeds give different bootstrap samples") {
  LabeledDataset ds;
  ds.d = 1;
  for (int i = 0; i < 5; ++i) ds.push_row({1.0 * i}, 0);
  int differing = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LabeledDataset a = bootstrap_sample(ds, 2 * seed);
    const LabeledDataset b = bootstrap_sample(ds, 2 * seed + 1);
    if (a.examples != b.examples) ++differing;
  }
  CHECK(differing >= 99);
}

TEST_CASE("feature bagging randomizes the split choice without hiding the signal") {
  // Feature 1 is informative, feature 0 is noise; with one candidate feature
  // per split some trees must start on the noise and some must find the label.
  LabeledDataset ds;
  ds.d = 2;
  Rng rng(555);
  for (int i = 0; i < 200; ++i) {
    const int y = i % 2;
    ds.push_row({rng.next_unit(), static_cast<double>(y) + 0.1 * rng.next_unit()}, y);
  }
  int split_on_noise_first = 0;
  int strong = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TreeTrainConfig cfg;
    cfg.features_per_split = 1;
    cfg.min_samples_leaf = 1;
    cfg.max_depth = 6;
    cfg.bootstrap = false;
    cfg.seed = seed;
    const DecisionTree t = fit_tree(ds, cfg, {0, static_cast<std::uint32_t>(seed)});
    if (!t.nodes[0].is_leaf() && t.nodes[0].feature == 0) ++split_on_noise_first;
    std::vector<double> scores;
    for (const auto& x : ds.examples) scores.push_back(t.predict(x));
    if (metrics(confusion(scores, ds.labels)).bacc > 0.9) ++strong;
  }
  CHECK(split_on_noise_first >= 1);
  CHECK(strong >= 1);
}

TEST_CASE("fit_tree is bit-identical for a fixed seed") {
  const LabeledDataset ds = synth_generate(800, 5, 0.1, 77);
  TreeTrainConfig cfg;
  cfg.seed = 1234;
  const DecisionTree a = fit_tree(ds, cfg, {1, 2});
  const DecisionTree b = fit_tree(ds, cfg, {1, 2});
  CHECK(serialize_tree(a) == serialize_tree(b));
  cfg.seed = 1235;
  const DecisionTree c = fit_tree(ds, cfg, {1, 2});
  CHECK(serialize_tree(a) != serialize_tree(c));
}

TEST_CASE("serialization round-trips and is canonical") {
  const LabeledDataset ds = synth_generate(400, 4, 0.1, 3);
  TreeTrainConfig cfg;
  cfg.seed = 3;
  const DecisionTree t = fit_tree(ds, cfg, {5, 9});
  const std::vector<std::uint8_t> bytes = serialize_tree(t);
  const DecisionTree back = deserialize_tree(bytes);
  CHECK(trees_equal(t, back));
  CHECK(serialize_tree(back) == bytes);
}

TEST_CASE("tampered bytes decode to an error or a different tree") {
  const DecisionTree t = make_stump(0, 0.5, 0.25, 0.75, 2, {1, 4});
  const std::vector<std::uint8_t> bytes = serialize_tree(t);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::vector<std::uint8_t> mutated = bytes;
    mutated[i] ^= 0xff;
    bool changed = true;
    try {
      const DecisionTree back = deserialize_tree(mutated);
      changed = serialize_tree(back) != bytes;
    } catch (const CodecError&) {
      changed = true;
    }
    CHECK(changed);
  }
}

TEST_CASE("decoder rejects malformed streams with an offset") {
  const DecisionTree t = make_stump(1, 2.0, 0.0, 1.0, 3);
  std::vector<std::uint8_t> bytes = serialize_tree(t);

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(deserialize_tree(truncated), CodecError);

  std::vector<std::uint8_t> trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_tree(trailing), CodecError);

  // Split feature beyond d.
  DecisionTree bad = t;
  bad.nodes[0].feature = 5;
  CHECK_THROWS_AS(deserialize_tree(serialize_tree(bad)), CodecError);
}

TEST_CASE("json dump is readable and carries the id") {
  const DecisionTree t = make_stump(0, 0.5, 0.0, 1.0, 2, {6, 11});
  const std::string j = tree_to_json(t);
  CHECK(j.find("\"origin\":6") != std::string::npos);
  CHECK(j.find("\"counter\":11") != std::string::npos);
  CHECK(j.find("\"feature\":0") != std::string::npos);
}

TEST_CASE("empty dataset and oversized feature bagging are rejected") {
  LabeledDataset empty;
  empty.d = 2;
  TreeTrainConfig cfg;
  CHECK_THROWS(fit_tree(empty, cfg, {0, 0}));

  LabeledDataset tiny;
  tiny.d = 2;
  tiny.push_row({0.0, 0.0}, 0);
  cfg.features_per_split = 3;
  CHECK_THROWS(fit_tree(tiny, cfg, {0, 0}));
}

}  // TEST_SUITE
