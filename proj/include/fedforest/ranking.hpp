#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedforest/tree_kernel.hpp"

namespace fedforest {

struct GreedyTraceRow {
  EstimatorId id;
  double power = 0.0;             // posterior variance at selection time
  bool selected_by_power = true;  // false for ids appended after the cutoff
};

/// Greedy maximum-posterior-variance ordering over a kernel matrix.
///
/// Step one takes the largest diagonal entry (the prior variance); each later
/// step takes the candidate whose posterior variance given the already
/// selected set is maximal, maintained incrementally through a triangular
/// Newton-basis factorization. Once the largest remaining variance drops
/// below 1e-10 of the largest diagonal entry (or everything is zero), the
/// leftover ids are appended in ascending (origin, counter) order. Ties
/// within 1e-12 resolve to the lowest id. Returns min(k, n) ids; k = n gives
/// the full ordering.
///
/// Rejects matrices whose smallest eigenvalue is below -1e-8 times the
/// largest, reporting both in the exception message.
std::vector<EstimatorId> p_greedy_rank(const GramMatrix& g, std::size_t k,
                                       std::vector<GreedyTraceRow>* trace = nullptr);

/// Reference posterior variance k(c,c) - k_S(c)^T (K_SS + 1e-10 I)^{-1} k_S(c)
/// by a dense solve; the independent check for the incremental update.
double posterior_variance_exact(const GramMatrix& g, const std::vector<std::size_t>& selected,
                                std::size_t candidate);

void write_greedy_trace_csv(const std::vector<GreedyTraceRow>& trace, std::ostream& out);

}  // namespace fedforest
