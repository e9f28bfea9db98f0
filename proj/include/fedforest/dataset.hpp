#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedforest {

using FeatureVector = std::vector<double>;

/// A binary-labeled tabular dataset. Rows are dense, all-numeric; labels are
/// 0 (normal) or 1 (anomalous).
struct LabeledDataset {
  std::vector<FeatureVector> examples;
  std::vector<int> labels;
  std::size_t d = 0;

  std::size_t size() const { return examples.size(); }
  std::size_t positives() const;
  bool empty() const { return examples.empty(); }
  void push_row(FeatureVector row, int label);
};

struct PartitionSpec {
  std::size_t n_parts = 1;
  double imbalance = 0.0;       // max relative deviation of a part size from the mean, in [0,1)
  double train_fraction = 0.9;  // in (0,1)
  std::uint64_t seed = 0;
};

struct NodeDataset {
  std::uint32_t node_id = 0;
  LabeledDataset train;
  LabeledDataset test;
};

/// Loads a dense numeric CSV with a header row. The label column (default
/// "Class") must contain only 0/1; every other column must parse as a double.
/// Cell quoting with '"' is tolerated. Throws std::runtime_error naming the
/// offending row on any malformed cell.
LabeledDataset load_csv(const std::string& path, const std::string& label_column = "Class");

/// Splits `ds` into `spec.n_parts` disjoint parts covering it. Part sizes stay
/// within [(1-imbalance), (1+imbalance)] times the mean part size (rounding
/// slack below one row per part). Deterministic in (ds order, spec).
std::vector<LabeledDataset> partition_unbalanced(const LabeledDataset& ds, const PartitionSpec& spec);

/// Shuffles a part and takes round(train_fraction * m) rows as train, the rest
/// as test.
NodeDataset split_train_test(const LabeledDataset& part, double train_fraction,
                             std::uint64_t seed, std::uint32_t node_id = 0);

/// Concatenation of all node test sets (the shared evaluation set).
LabeledDataset build_central_test(const std::vector<NodeDataset>& nodes);

/// Two-class Gaussian mixture: negatives are standard normal, positives are
/// drawn around a handful of off-origin cluster centers so that single trees
/// can memorize individual anomalies while only a broad ensemble covers every
/// cluster. round(m * fraud_ratio) rows are positive.
LabeledDataset synth_generate(std::size_t m, std::size_t d, double fraud_ratio, std::uint64_t seed);

/// Per-feature standard deviation (population form), for callers that want
/// standardized kernel evaluations.
std::vector<double> feature_stddev(const LabeledDataset& ds);

}  // namespace fedforest
