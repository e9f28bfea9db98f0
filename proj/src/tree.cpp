#include "fedforest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedforest/rng.hpp"

namespace fedforest {

double DecisionTree::predict(const FeatureVector& x) const {
  if (x.size() != d) throw std::invalid_argument("predict: feature vector has wrong dimension");
  if (nodes.empty()) throw std::logic_error("predict: empty tree");
  std::int32_t cur = 0;
  while (!nodes[static_cast<std::size_t>(cur)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(cur)];
    cur = (x[static_cast<std::size_t>(n.feature)] <= n.value) ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(cur)].value;
}

std::size_t DecisionTree::internal_count() const {
  std::size_t c = 0;
  for (const TreeNode& n : nodes) c += n.is_leaf() ? 0 : 1;
  return c;
}

std::size_t DecisionTree::depth() const {
  // Iterative: depth of node i relative to root.
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, dep] = stack.back();
    stack.pop_back();
    best = std::max(best, dep);
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, dep + 1});
      stack.push_back({n.right, dep + 1});
    }
  }
  return best;
}

double predict_tree(const DecisionTree& tree, const FeatureVector& x) { return tree.predict(x); }

LabeledDataset bootstrap_sample(const LabeledDataset& ds, std::uint64_t seed) {
  const std::size_t m = ds.size();
  if (m == 0) throw std::invalid_argument("bootstrap_sample: empty dataset");
  Rng rng(derive_seed(seed, 0x626f6f74));
  LabeledDataset out;
  out.d = ds.d;
  out.examples.reserve(m);
  out.labels.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = rng.next_below(m);
    out.examples.push_back(ds.examples[j]);
    out.labels.push_back(ds.labels[j]);
  }
  return out;
}

namespace {

struct Builder {
  const LabeledDataset& ds;
  const TreeTrainConfig& cfg;
  std::uint32_t n_features_per_split;
  double w_pos = 1.0, w_neg = 1.0;
  Rng rng;
  std::vector<TreeNode> nodes;

  Builder(const LabeledDataset& data, const TreeTrainConfig& c)
      : ds(data), cfg(c), rng(derive_seed(c.seed, 0x74726565)) {
    const std::size_t d = ds.d;
    n_features_per_split = cfg.features_per_split != 0
                               ? cfg.features_per_split
                               : static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    if (n_features_per_split > d) {
      throw std::invalid_argument("fit_tree: features_per_split exceeds feature count");
    }
    if (cfg.class_weighting == ClassWeighting::balanced) {
      const double m = static_cast<double>(ds.size());
      const double mp = static_cast<double>(ds.positives());
      const double mn = m - mp;
      // Inverse-frequency weights; an absent class keeps weight 1 (unused).
      if (mp > 0) w_pos = m / (2.0 * mp);
      if (mn > 0) w_neg = m / (2.0 * mn);
    }
  }

  double weight(std::size_t i) const { return ds.labels[i] == 1 ? w_pos : w_neg; }

  static double gini(double wp, double wn) {
    const double w = wp + wn;
    if (w <= 0) return 0.0;
    const double a = wp / w, b = wn / w;
    return 1.0 - a * a - b * b;
  }

  struct Split {
    bool found = false;
    double gain = 0.0;
    std::uint32_t feature = 0;
    double threshold = 0.0;
  };

  // indices is reordered in place while scanning candidate features.
  Split best_split(std::vector<std::size_t>& indices, double wp, double wn) {
    Split best;
    const double parent_impurity = gini(wp, wn);
    const double w_total = wp + wn;

    std::vector<std::size_t> feats = rng.sample_without_replacement(ds.d, n_features_per_split);
    // sample_without_replacement returns ascending order, which fixes the
    // lowest-feature-first tie rule.
    for (std::size_t f : feats) {
      std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
        return ds.examples[a][f] < ds.examples[b][f];
      });
      double lp = 0.0, ln = 0.0;  // weighted counts left of the boundary
      for (std::size_t k = 0; k + 1 < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (ds.labels[i] == 1) lp += w_pos; else ln += w_neg;
        const double lo = ds.examples[i][f];
        const double hi = ds.examples[indices[k + 1]][f];
        if (lo == hi) continue;
        if (k + 1 < cfg.min_samples_leaf || indices.size() - k - 1 < cfg.min_samples_leaf) continue;
        const double wl = lp + ln, wr = w_total - wl;
        const double gain = parent_impurity -
                            (wl * gini(lp, ln) + wr * gini(wp - lp, wn - ln)) / w_total;
        double thr = 0.5 * (lo + hi);
        if (thr >= hi) thr = lo;  // adjacent doubles: keep the boundary strict
        const bool better =
            gain > best.gain ||
            (gain == best.gain && best.found &&
             (f < best.feature || (f == best.feature && thr < best.threshold)));
        if (gain > 0.0 && (!best.found || better)) {
          best = {true, gain, static_cast<std::uint32_t>(f), thr};
        }
      }
    }
    return best;
  }

  std::int32_t build(std::vector<std::size_t>& indices, std::uint32_t depth) {
    double wp = 0.0, wn = 0.0;
    std::size_t np = 0;
    for (std::size_t i : indices) {
      if (ds.labels[i] == 1) {
        wp += w_pos;
        ++np;
      } else {
        wn += w_neg;
      }
    }
    const bool pure = (np == 0 || np == indices.size());
    const std::int32_t self = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();

    Split split;
    if (!pure && depth < cfg.max_depth && indices.size() >= 2 * cfg.min_samples_leaf) {
      split = best_split(indices, wp, wn);
    }
    if (!split.found) {
      nodes[static_cast<std::size_t>(self)].feature = -1;
      nodes[static_cast<std::size_t>(self)].value = (wp + wn) > 0 ? wp / (wp + wn) : 0.0;
      return self;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : indices) {
      if (ds.examples[i][split.feature] <= split.threshold) left_idx.push_back(i);
      else right_idx.push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();

    nodes[static_cast<std::size_t>(self)].feature = static_cast<std::int32_t>(split.feature);
    nodes[static_cast<std::size_t>(self)].value = split.threshold;
    const std::int32_t l = build(left_idx, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = l;
    const std::int32_t r = build(right_idx, depth + 1);
    nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

DecisionTree fit_tree(const LabeledDataset& train, const TreeTrainConfig& cfg, EstimatorId id) {
  if (train.empty()) throw std::invalid_argument("fit_tree: empty dataset");

  const LabeledDataset* data = &train;
  LabeledDataset sampled;
  if (cfg.bootstrap) {
    sampled = bootstrap_sample(train, derive_seed(cfg.seed, 0x73616d70));
    data = &sampled;
  }

  Builder b(*data, cfg);
  std::vector<std::size_t> all(data->size());
  std::iota(all.begin(), all.end(), 0);
  b.build(all, 0);

  DecisionTree tree;
  tree.id = id;
  tree.d = static_cast<std::uint32_t>(train.d);
  tree.nodes = std::move(b.nodes);
  return tree;
}

}  // namespace fedforest
