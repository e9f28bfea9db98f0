#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "fedforest/dataset.hpp"

namespace fedforest {

/// Federation-wide unique estimator identifier: the training node plus a
/// progressive per-node counter.
struct EstimatorId {
  std::uint32_t origin = 0;
  std::uint32_t counter = 0;

  friend auto operator<=>(const EstimatorId&, const EstimatorId&) = default;
};

/// One node of a trained tree, stored in a flat pre-order arena.
/// feature < 0 marks a leaf; then `value` is the leaf score in [0,1].
/// Otherwise `value` is the split threshold and routing sends
/// x[feature] <= value to `left`, the rest to `right`.
struct TreeNode {
  std::int32_t feature = -1;
  double value = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  EstimatorId id;
  std::uint32_t d = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const FeatureVector& x) const;
  std::size_t internal_count() const;
  std::size_t depth() const;
};

enum class ClassWeighting { none, balanced };

struct TreeTrainConfig {
  std::uint32_t max_depth = 10;
  std::uint32_t min_samples_leaf = 5;
  std::uint32_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
  ClassWeighting class_weighting = ClassWeighting::balanced;
  std::uint64_t seed = 0;
};

/// Sampling with replacement: m draws from m rows.
LabeledDataset bootstrap_sample(const LabeledDataset& ds, std::uint64_t seed);

/// CART-style growth: at each node a fresh uniformly random subset of
/// features_per_split features is scanned for the weighted-Gini-optimal
/// threshold (midpoint between consecutive distinct values). Growth stops at
/// max_depth, on a pure node, when min_samples_leaf blocks every boundary, or
/// when no split improves impurity. Leaf score is the weighted positive
/// fraction of its rows. Equal gains resolve to the lowest feature index,
/// then the smallest threshold, so a fixed seed yields a bit-identical tree.
DecisionTree fit_tree(const LabeledDataset& train, const TreeTrainConfig& cfg, EstimatorId id);

double predict_tree(const DecisionTree& tree, const FeatureVector& x);

}  // namespace fedforest
