#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedforest/tree_kernel.hpp"

namespace fedforest {

enum class PredictMode { average, majority };

/// A bounded, identifier-deduplicated collection of decision trees. Member
/// order is the most recent ranking order once one has been computed (crop
/// reorders in place); before that it is insertion order. The ranking is
/// computed lazily on get_top/crop and invalidated by add.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(std::size_t n_max_hint) : n_max_hint_(n_max_hint) {}

  /// Union by id: members already present win, fresh trees append in order.
  /// Returns the number actually inserted.
  std::size_t add(const std::vector<TreePtr>& incoming);

  /// The first min(k, size) trees in greedy kernel-ranking order.
  std::vector<TreePtr> get_top(std::size_t k, const KernelOptions& ranker = {}) const;

  /// Keeps only the top k (no-op reorder when size <= k). k must be >= 1.
  void crop(std::size_t k, const KernelOptions& ranker = {});

  /// average: mean member score. majority: fraction of members voting
  /// anomalous (score > 0.5). Both land in [0,1]; callers classify
  /// anomalous iff the result exceeds 0.5.
  double predict(const FeatureVector& x, PredictMode mode = PredictMode::average) const;

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<TreePtr>& members() const { return members_; }
  bool contains(EstimatorId id) const;
  std::vector<EstimatorId> member_ids() const;
  std::optional<std::size_t> n_max_hint() const { return n_max_hint_; }

 private:
  std::vector<std::size_t> ranked_order(const KernelOptions& ranker) const;

  std::vector<TreePtr> members_;
  std::optional<std::size_t> n_max_hint_;
  mutable std::optional<std::vector<std::size_t>> cached_order_;
  mutable KernelOptions cached_opts_;
};

/// Container file: a JSON manifest (ids, member order, optional per-tree
/// annotations such as the creation round) followed by the canonical tree
/// encodings.
void save_ensemble(const Ensemble& e, std::ostream& out,
                   const std::vector<std::uint32_t>* creation_rounds = nullptr);
Ensemble load_ensemble(std::istream& in);

std::vector<std::uint8_t> ensemble_to_bytes(const Ensemble& e,
                                            const std::vector<std::uint32_t>* creation_rounds = nullptr);

}  // namespace fedforest
