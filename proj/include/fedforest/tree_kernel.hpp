#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "fedforest/tree.hpp"

namespace fedforest {

using TreePtr = std::shared_ptr<const DecisionTree>;

struct KernelOptions {
  // When non-empty, split values are divided by feature_scale[split feature]
  // before weighting (caller supplies e.g. per-feature train stddevs).
  std::vector<double> feature_scale;
  // Cosine-style normalization k/sqrt(k(T,T) k(T',T')); off by default.
  bool normalize = false;
};

struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major n*n, symmetric
  std::vector<EstimatorId> ids;

  double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
  double max_diagonal() const;
};

/// Number of labeled positional subtrees rooted at both nodes: zero unless the
/// split features agree, else the product over child positions of
/// (1 + count at the child pair), where a leaf child contributes 0. Computed
/// by a memoized recursion in O(|T| * |T'|); both arguments must be internal.
std::uint64_t common_subtree_count(const DecisionTree& a, std::int32_t va,
                                   const DecisionTree& b, std::int32_t vb);

/// Identical to common_subtree_count: the inner product of the subtree
/// indicator maps is exactly that count.
std::uint64_t node_kernel(const DecisionTree& a, std::int32_t va,
                          const DecisionTree& b, std::int32_t vb);

/// Sum of node_kernel over all internal-node pairs.
std::uint64_t tree_kernel_unweighted(const DecisionTree& a, const DecisionTree& b);

/// Split-value-weighted aggregation: sum over internal pairs of
/// x(v) * x(v') * count(v, v'). Individual values may be negative; the induced
/// Gram matrix is positive semidefinite.
double tree_kernel(const DecisionTree& a, const DecisionTree& b, const KernelOptions& opts = {});

GramMatrix gram(const std::vector<TreePtr>& trees, const KernelOptions& opts = {});

/// CSV with an id header row ("origin:counter"), one matrix row per line.
void write_gram_csv(const GramMatrix& g, std::ostream& out);

}  // namespace fedforest
