#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedforest/dataset.hpp"
#include "fedforest/ensemble.hpp"
#include "fedforest/federation.hpp"

namespace fedforest {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double bacc = 0.0;
  double prec = 0.0;
  double rec = 0.0;
  bool no_positives = false;  // TP+FN == 0: recall pinned to 0 by convention
  bool no_negatives = false;  // TN+FP == 0: specificity summand dropped
};

/// Scores classify anomalous iff > 0.5 (same boundary as the ensemble rule).
ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels);

/// BAcc = (TPR + TNR) / 2, Prec = TP/(TP+FP), Rec = TP/(TP+FN).
/// Zero denominators contribute 0 and set the corresponding flag.
Metrics metrics(const ConfusionCounts& c);

struct NodeMetrics {
  std::uint32_t node = 0;
  Metrics test;   // on the shared central test set
  Metrics train;  // on the node's own train set
};

std::vector<NodeMetrics> evaluate_nodes(const std::vector<const Ensemble*>& ensembles,
                                        const std::vector<const LabeledDataset*>& train_sets,
                                        const LabeledDataset& central_test,
                                        PredictMode mode = PredictMode::average);
std::vector<NodeMetrics> evaluate_nodes(const RunResult& run, const LabeledDataset& central_test,
                                        PredictMode mode = PredictMode::average);

struct DeltaSummary {
  double mean = 0.0;
  double median = 0.0;
  std::uint32_t min_node = 0, max_node = 0;
  double min_value = 0.0, max_value = 0.0;
};

/// Per-node metric differences run − baseline. Index order: bacc, prec, rec.
struct ImprovementReport {
  std::vector<std::uint32_t> nodes;
  std::array<std::vector<double>, 3> test_delta;
  std::array<std::vector<double>, 3> train_delta;
  std::array<DeltaSummary, 3> test_summary;
  std::array<DeltaSummary, 3> train_summary;
};

ImprovementReport improvement_report(const std::vector<NodeMetrics>& run,
                                     const std::vector<NodeMetrics>& baseline);

/// Row = holder node, column = origin node, entries are percentages summing
/// to 100 per row (all-zero for an empty ensemble).
using ProvenanceMatrix = std::vector<std::vector<double>>;
ProvenanceMatrix provenance_matrix(const std::vector<AgentSnapshot>& snapshots, std::uint32_t round,
                                   std::uint32_t n_nodes);

void write_metrics_csv(const std::vector<NodeMetrics>& run, const std::vector<NodeMetrics>& baseline,
                       std::ostream& out);
void write_improvement_csv(const ImprovementReport& rep, std::ostream& out);
void write_provenance_csv(const ProvenanceMatrix& m, std::ostream& out);

}  // namespace fedforest
