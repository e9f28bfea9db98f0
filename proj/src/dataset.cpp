#include "fedforest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedforest/rng.hpp"

namespace fedforest {

std::size_t LabeledDataset::positives() const {
  std::size_t p = 0;
  for (int y : labels) p += static_cast<std::size_t>(y);
  return p;
}

void LabeledDataset::push_row(FeatureVector row, int label) {
  if (d == 0 && examples.empty()) d = row.size();
  if (row.size() != d) throw std::invalid_argument("push_row: dimension mismatch");
  examples.push_back(std::move(row));
  labels.push_back(label);
}

namespace {

std::string strip_cell(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (e - b >= 2 && s[b] == '"' && s[e - 1] == '"') {
    ++b;
    --e;
  }
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) cells.push_back(strip_cell(cur));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
    throw std::runtime_error("load_csv: non-numeric cell at row " + std::to_string(row) +
                             ", column " + std::to_string(col) + ": '" + cell + "'");
  }
  return v;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
  const std::vector<std::string> header = split_line(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) {
      label_col = i;
      break;
    }
  }
  if (label_col == header.size()) {
    throw std::runtime_error("load_csv: label column '" + label_column + "' not found in header");
  }

  LabeledDataset ds;
  ds.d = header.size() - 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    FeatureVector x;
    x.reserve(ds.d);
    int y = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_double(cells[c], row, c);
      if (c == label_col) {
        if (v != 0.0 && v != 1.0) {
          throw std::runtime_error("load_csv: label outside {0,1} at row " + std::to_string(row));
        }
        y = static_cast<int>(v);
      } else {
        x.push_back(v);
      }
    }
    ds.examples.push_back(std::move(x));
    ds.labels.push_back(y);
  }
  return ds;
}

std::vector<LabeledDataset> partition_unbalanced(const LabeledDataset& ds, const PartitionSpec& spec) {
  const std::size_t m = ds.size();
  const std::size_t p = spec.n_parts;
  if (p < 1) throw std::invalid_argument("partition_unbalanced: n_parts must be >= 1");
  if (p > m) throw std::invalid_argument("partition_unbalanced: n_parts exceeds dataset size");
  if (!(spec.imbalance >= 0.0 && spec.imbalance < 1.0)) {
    throw std::invalid_argument("partition_unbalanced: imbalance must be in [0,1)");
  }

  Rng rng(derive_seed(spec.seed, 0x70617274));  // partition stream

  // Per-part weights in [1-imb, 1+imb]. Their sum is then redistributed to
  // exactly n_parts without leaving the interval, so each quota stays inside
  // the advertised size band for every seed.
  std::vector<double> w(p);
  for (double& x : w) x = rng.next_in(1.0 - spec.imbalance, 1.0 + spec.imbalance);
  double delta = static_cast<double>(p) - std::accumulate(w.begin(), w.end(), 0.0);
  for (int iter = 0; iter < 64 && std::fabs(delta) > 1e-12; ++iter) {
    std::size_t free_count = 0;
    for (double x : w) {
      if ((delta > 0 && x < 1.0 + spec.imbalance) || (delta < 0 && x > 1.0 - spec.imbalance)) ++free_count;
    }
    if (free_count == 0) break;
    const double share = delta / static_cast<double>(free_count);
    for (double& x : w) {
      const double lo = 1.0 - spec.imbalance, hi = 1.0 + spec.imbalance;
      const double add = std::clamp(share, lo - x, hi - x);
      x += add;
      delta -= add;
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  // Cumulative quotas over the shuffled row order.
  std::vector<LabeledDataset> parts(p);
  double cum = 0.0;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < p; ++i) {
    cum += w[i] / static_cast<double>(p);
    std::size_t end = (i + 1 == p) ? m : static_cast<std::size_t>(std::llround(cum * static_cast<double>(m)));
    end = std::clamp(end, begin, m);
    parts[i].d = ds.d;
    parts[i].examples.reserve(end - begin);
    for (std::size_t j = begin; j < end; ++j) {
      parts[i].examples.push_back(ds.examples[order[j]]);
      parts[i].labels.push_back(ds.labels[order[j]]);
    }
    begin = end;
  }
  return parts;
}

NodeDataset split_train_test(const LabeledDataset& part, double train_fraction,
                             std::uint64_t seed, std::uint32_t node_id) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_train_test: train_fraction must be in (0,1)");
  }
  const std::size_t m = part.size();
  const std::size_t n_train =
      std::min<std::size_t>(m, static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m))));

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x73706c69, node_id));
  rng.shuffle(order);

  NodeDataset node;
  node.node_id = node_id;
  node.train.d = part.d;
  node.test.d = part.d;
  for (std::size_t j = 0; j < m; ++j) {
    LabeledDataset& dst = (j < n_train) ? node.train : node.test;
    dst.examples.push_back(part.examples[order[j]]);
    dst.labels.push_back(part.labels[order[j]]);
  }
  return node;
}

LabeledDataset build_central_test(const std::vector<NodeDataset>& nodes) {
  LabeledDataset central;
  if (nodes.empty()) return central;
  central.d = nodes.front().train.d;
  for (const NodeDataset& n : nodes) {
    if (n.test.d != central.d && !n.test.empty()) {
      throw std::invalid_argument("build_central_test: feature count mismatch across nodes");
    }
    if (n.train.d != central.d) {
      throw std::invalid_argument("build_central_test: feature count mismatch across nodes");
    }
    central.examples.insert(central.examples.end(), n.test.examples.begin(), n.test.examples.end());
    central.labels.insert(central.labels.end(), n.test.labels.begin(), n.test.labels.end());
  }
  return central;
}

LabeledDataset synth_generate(std::size_t m, std::size_t d, double fraud_ratio, std::uint64_t seed) {
  if (!(fraud_ratio > 0.0 && fraud_ratio < 1.0)) {
    throw std::invalid_argument("synth_generate: fraud_ratio must be in (0,1)");
  }
  if (fraud_ratio * static_cast<double>(m) < 1.0) {
    throw std::invalid_argument("synth_generate: m * fraud_ratio must be >= 1");
  }
  const std::size_t n_pos = static_cast<std::size_t>(std::llround(fraud_ratio * static_cast<double>(m)));
  if (d < 1) throw std::invalid_argument("synth_generate: d must be >= 1");

  Rng rng(derive_seed(seed, 0x73796e74));

  // Anomaly cluster centers: offset 4.5 along distinct axes, random sign.
  // Anomalies are ordinary noise except on their cluster axis, so the only
  // learnable signal is the axis itself; a model that never saw a cluster
  // misses that cluster entirely.
  const std::size_t n_clusters = std::min<std::size_t>(4, d);
  const std::vector<std::size_t> axes = rng.sample_without_replacement(d, n_clusters);
  std::vector<std::pair<std::size_t, double>> centers;
  for (std::size_t k = 0; k < n_clusters; ++k) {
    const double sign = (rng.next_unit() < 0.5) ? -1.0 : 1.0;
    centers.emplace_back(axes[k], 4.5 * sign);
  }

  std::vector<int> labels(m, 0);
  for (std::size_t i = 0; i < n_pos; ++i) labels[i] = 1;
  rng.shuffle(labels);

  LabeledDataset ds;
  ds.d = d;
  ds.examples.reserve(m);
  ds.labels = labels;
  for (std::size_t i = 0; i < m; ++i) {
    FeatureVector x(d);
    for (double& v : x) v = rng.next_gaussian();
    if (labels[i] == 1) {
      const auto& [axis, offset] = centers[rng.next_below(n_clusters)];
      x[axis] = offset + 0.35 * x[axis];
    }
    ds.examples.push_back(std::move(x));
  }
  return ds;
}

std::vector<double> feature_stddev(const LabeledDataset& ds) {
  std::vector<double> mean(ds.d, 0.0), var(ds.d, 0.0);
  const double m = static_cast<double>(ds.size());
  if (ds.empty()) return std::vector<double>(ds.d, 1.0);
  for (const FeatureVector& x : ds.examples) {
    for (std::size_t j = 0; j < ds.d; ++j) mean[j] += x[j];
  }
  for (double& v : mean) v /= m;
  for (const FeatureVector& x : ds.examples) {
    for (std::size_t j = 0; j < ds.d; ++j) {
      const double c = x[j] - mean[j];
      var[j] += c * c;
    }
  }
  std::vector<double> sd(ds.d);
  for (std::size_t j = 0; j < ds.d; ++j) sd[j] = std::sqrt(var[j] / m);
  return sd;
}

}  // namespace fedforest
