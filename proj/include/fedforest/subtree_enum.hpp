#pragma once

#include <set>
#include <string>

#include "fedforest/tree.hpp"

namespace fedforest {

// Brute-force inventory of labeled positional subtrees, used as a testing
// oracle against the memoized kernel recursion. Kept deliberately independent
// of the kernel code path: it materializes every subtree as a canonical
// string and intersects sets.

/// All subtrees rooted at `node`, each encoded as "(label,left,right)" with
/// "-" for a cut child. A leaf roots no subtree (empty set).
std::set<std::string> enumerate_rooted_subtrees(const DecisionTree& tree, std::int32_t node);

/// Subtrees present at both roots; the cardinality equals
/// common_subtree_count. Rejects inputs with more than 20 internal nodes
/// under either root.
std::set<std::string> enumerate_common_subtrees(const DecisionTree& a, std::int32_t va,
                                                const DecisionTree& b, std::int32_t vb);

}  // namespace fedforest
