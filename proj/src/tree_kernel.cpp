#include "fedforest/tree_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fedforest {

double GramMatrix::max_diagonal() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, at(i, i));
  return m;
}

namespace {

// Dense view of one tree's internal nodes: arena index -> compact index,
// plus the (optionally rescaled) split value per internal node.
struct InternalView {
  std::vector<std::int32_t> internal_nodes;     // compact -> arena index
  std::vector<std::int32_t> compact_of;         // arena -> compact index or -1
  std::vector<double> weight;                   // compact -> split value

  InternalView(const DecisionTree& t, const KernelOptions& opts) {
    compact_of.assign(t.nodes.size(), -1);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& n = t.nodes[i];
      if (n.is_leaf()) continue;
      compact_of[i] = static_cast<std::int32_t>(internal_nodes.size());
      internal_nodes.push_back(static_cast<std::int32_t>(i));
      double w = n.value;
      if (!opts.feature_scale.empty()) {
        const std::size_t f = static_cast<std::size_t>(n.feature);
        if (f >= opts.feature_scale.size()) {
          throw std::invalid_argument("tree_kernel: feature_scale shorter than feature count");
        }
        const double s = opts.feature_scale[f];
        w = (s > 0.0) ? w / s : w;
      }
      weight.push_back(w);
    }
  }
};

// Memoized common-subtree recursion over compact index pairs. Counts are kept
// in double; they are exact below 2^53, far beyond any trained tree here.
struct PairCounter {
  const DecisionTree& a;
  const DecisionTree& b;
  const InternalView& va;
  const InternalView& vb;
  std::vector<double> memo;  // -1 = unset

  PairCounter(const DecisionTree& a_, const InternalView& va_, const DecisionTree& b_,
              const InternalView& vb_)
      : a(a_), b(b_), va(va_), vb(vb_) {
    memo.assign(va.internal_nodes.size() * vb.internal_nodes.size(), -1.0);
  }

  double count(std::int32_t ca, std::int32_t cb) {
    const std::size_t slot =
        static_cast<std::size_t>(ca) * vb.internal_nodes.size() + static_cast<std::size_t>(cb);
    double& m = memo[slot];
    if (m >= 0.0) return m;
    const TreeNode& na = a.nodes[static_cast<std::size_t>(va.internal_nodes[static_cast<std::size_t>(ca)])];
    const TreeNode& nb = b.nodes[static_cast<std::size_t>(vb.internal_nodes[static_cast<std::size_t>(cb)])];
    if (na.feature != nb.feature) return m = 0.0;
    const double left = child_count(na.left, nb.left);
    const double right = child_count(na.right, nb.right);
    return m = (1.0 + left) * (1.0 + right);
  }

  double child_count(std::int32_t arena_a, std::int32_t arena_b) {
    const std::int32_t ca = va.compact_of[static_cast<std::size_t>(arena_a)];
    const std::int32_t cb = vb.compact_of[static_cast<std::size_t>(arena_b)];
    if (ca < 0 || cb < 0) return 0.0;  // a leaf child ends every common subtree
    return count(ca, cb);
  }
};

double kernel_directed(const DecisionTree& a, const DecisionTree& b, const KernelOptions& opts,
                       bool weighted) {
  const InternalView va(a, opts), vb(b, opts);
  PairCounter pc(a, va, b, vb);
  double acc = 0.0;
  for (std::size_t i = 0; i < va.internal_nodes.size(); ++i) {
    for (std::size_t j = 0; j < vb.internal_nodes.size(); ++j) {
      const double c = pc.count(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
      if (c == 0.0) continue;
      acc += weighted ? va.weight[i] * vb.weight[j] * c : c;
    }
  }
  return acc;
}

// Summation order is canonicalized by id so that k(T,T') and k(T',T)
// accumulate in the identical order and agree bit-for-bit.
double kernel_canonical(const DecisionTree& a, const DecisionTree& b, const KernelOptions& opts) {
  if (b.id < a.id) return kernel_directed(b, a, opts, true);
  return kernel_directed(a, b, opts, true);
}

}  // namespace

std::uint64_t common_subtree_count(const DecisionTree& a, std::int32_t va_idx,
                                   const DecisionTree& b, std::int32_t vb_idx) {
  if (a.nodes[static_cast<std::size_t>(va_idx)].is_leaf() ||
      b.nodes[static_cast<std::size_t>(vb_idx)].is_leaf()) {
    throw std::invalid_argument("common_subtree_count: both nodes must be internal");
  }
  const KernelOptions opts;
  const InternalView va(a, opts), vb(b, opts);
  PairCounter pc(a, va, b, vb);
  const double c = pc.count(va.compact_of[static_cast<std::size_t>(va_idx)],
                            vb.compact_of[static_cast<std::size_t>(vb_idx)]);
  return static_cast<std::uint64_t>(c);
}

std::uint64_t node_kernel(const DecisionTree& a, std::int32_t va,
                          const DecisionTree& b, std::int32_t vb) {
  return common_subtree_count(a, va, b, vb);
}

std::uint64_t tree_kernel_unweighted(const DecisionTree& a, const DecisionTree& b) {
  return static_cast<std::uint64_t>(kernel_directed(a, b, KernelOptions{}, false));
}

double tree_kernel(const DecisionTree& a, const DecisionTree& b, const KernelOptions& opts) {
  double k = kernel_canonical(a, b, opts);
  if (opts.normalize) {
    const double kaa = kernel_canonical(a, a, opts);
    const double kbb = kernel_canonical(b, b, opts);
    const double denom = std::sqrt(kaa * kbb);
    k = denom > 0.0 ? k / denom : 0.0;
  }
  return k;
}

GramMatrix gram(const std::vector<TreePtr>& trees, const KernelOptions& opts) {
  const std::size_t n = trees.size();
  if (n == 0) throw std::invalid_argument("gram: empty tree set");
  GramMatrix g;
  g.n = n;
  g.entries.assign(n * n, 0.0);
  g.ids.reserve(n);
  for (const TreePtr& t : trees) g.ids.push_back(t->id);

  KernelOptions raw = opts;
  raw.normalize = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double k = kernel_canonical(*trees[i], *trees[j], raw);
      g.at(i, j) = k;
      g.at(j, i) = k;
    }
  }
  if (opts.normalize) {
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = g.at(i, i);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double denom = std::sqrt(diag[i] * diag[j]);
        g.at(i, j) = denom > 0.0 ? g.at(i, j) / denom : 0.0;
      }
    }
  }
  return g;
}

void write_gram_csv(const GramMatrix& g, std::ostream& out) {
  for (std::size_t i = 0; i < g.n; ++i) {
    out << (i ? "," : "") << g.ids[i].origin << ":" << g.ids[i].counter;
  }
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) out << (j ? "," : "") << g.at(i, j);
    out << "\n";
  }
}

}  // namespace fedforest
