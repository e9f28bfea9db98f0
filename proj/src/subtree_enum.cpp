#include "fedforest/subtree_enum.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedforest {

namespace {

std::size_t internal_below(const DecisionTree& t, std::int32_t node) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return 0;
  return 1 + internal_below(t, n.left) + internal_below(t, n.right);
}

std::set<std::string> enumerate_at(const DecisionTree& t, std::int32_t node) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(node)];
  std::set<std::string> out;
  if (n.is_leaf()) return out;

  std::set<std::string> left_opts{"-"};
  for (const std::string& s : enumerate_at(t, n.left)) left_opts.insert(s);
  std::set<std::string> right_opts{"-"};
  for (const std::string& s : enumerate_at(t, n.right)) right_opts.insert(s);

  const std::string label = std::to_string(n.feature);
  for (const std::string& l : left_opts) {
    for (const std::string& r : right_opts) {
      out.insert("(" + label + "," + l + "," + r + ")");
    }
  }
  return out;
}

}  // namespace

std::set<std::string> enumerate_rooted_subtrees(const DecisionTree& tree, std::int32_t node) {
  return enumerate_at(tree, node);
}

std::set<std::string> enumerate_common_subtrees(const DecisionTree& a, std::int32_t va,
                                                const DecisionTree& b, std::int32_t vb) {
  if (internal_below(a, va) > 20 || internal_below(b, vb) > 20) {
    throw std::invalid_argument("enumerate_common_subtrees: subtree exceeds the 20-internal-node oracle bound");
  }
  const std::set<std::string> sa = enumerate_at(a, va);
  const std::set<std::string> sb = enumerate_at(b, vb);
  std::set<std::string> both;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::inserter(both, both.begin()));
  return both;
}

}  // namespace fedforest
