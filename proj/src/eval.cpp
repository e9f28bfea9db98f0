#include "fedforest/eval.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace fedforest {

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("confusion: scores/labels length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > 0.5;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  const std::uint64_t pos = c.tp + c.fn;
  const std::uint64_t neg = c.tn + c.fp;
  m.no_positives = pos == 0;
  m.no_negatives = neg == 0;
  const double tpr = pos ? static_cast<double>(c.tp) / static_cast<double>(pos) : 0.0;
  const double tnr = neg ? static_cast<double>(c.tn) / static_cast<double>(neg) : 0.0;
  m.bacc = 0.5 * (tpr + tnr);
  m.prec = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.rec = tpr;
  return m;
}

namespace {

Metrics evaluate_ensemble(const Ensemble& e, const LabeledDataset& ds, PredictMode mode) {
  std::vector<double> scores;
  scores.reserve(ds.size());
  for (const FeatureVector& x : ds.examples) scores.push_back(e.predict(x, mode));
  return metrics(confusion(scores, ds.labels));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DeltaSummary summarize(const std::vector<std::uint32_t>& nodes, const std::vector<double>& deltas) {
  DeltaSummary s;
  if (deltas.empty()) return s;
  double acc = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    acc += deltas[i];
    if (deltas[i] < deltas[lo]) lo = i;
    if (deltas[i] > deltas[hi]) hi = i;
  }
  s.mean = acc / static_cast<double>(deltas.size());
  s.median = median_of(deltas);
  s.min_node = nodes[lo];
  s.max_node = nodes[hi];
  s.min_value = deltas[lo];
  s.max_value = deltas[hi];
  return s;
}

}  // namespace

std::vector<NodeMetrics> evaluate_nodes(const std::vector<const Ensemble*>& ensembles,
                                        const std::vector<const LabeledDataset*>& train_sets,
                                        const LabeledDataset& central_test, PredictMode mode) {
  if (ensembles.size() != train_sets.size()) {
    throw std::invalid_argument("evaluate_nodes: ensembles/train_sets size mismatch");
  }
  std::vector<NodeMetrics> out;
  out.reserve(ensembles.size());
  for (std::size_t j = 0; j < ensembles.size(); ++j) {
    NodeMetrics nm;
    nm.node = static_cast<std::uint32_t>(j);
    nm.test = evaluate_ensemble(*ensembles[j], central_test, mode);
    nm.train = train_sets[j]->empty() ? Metrics{}
                                      : evaluate_ensemble(*ensembles[j], *train_sets[j], mode);
    out.push_back(nm);
  }
  return out;
}

std::vector<NodeMetrics> evaluate_nodes(const RunResult& run, const LabeledDataset& central_test,
                                        PredictMode mode) {
  std::vector<const Ensemble*> ensembles;
  std::vector<const LabeledDataset*> trains;
  for (const AgentState& a : run.agents) {
    ensembles.push_back(&a.ensemble);
    trains.push_back(&a.data.train);
  }
  return evaluate_nodes(ensembles, trains, central_test, mode);
}

ImprovementReport improvement_report(const std::vector<NodeMetrics>& run,
                                     const std::vector<NodeMetrics>& baseline) {
  if (run.size() != baseline.size()) {
    throw std::invalid_argument("improvement_report: node sets differ");
  }
  ImprovementReport rep;
  for (std::size_t j = 0; j < run.size(); ++j) {
    if (run[j].node != baseline[j].node) {
      throw std::invalid_argument("improvement_report: node sets differ");
    }
    rep.nodes.push_back(run[j].node);
    const auto pick = [](const Metrics& m, std::size_t k) {
      return k == 0 ? m.bacc : (k == 1 ? m.prec : m.rec);
    };
    for (std::size_t k = 0; k < 3; ++k) {
      rep.test_delta[k].push_back(pick(run[j].test, k) - pick(baseline[j].test, k));
      rep.train_delta[k].push_back(pick(run[j].train, k) - pick(baseline[j].train, k));
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    rep.test_summary[k] = summarize(rep.nodes, rep.test_delta[k]);
    rep.train_summary[k] = summarize(rep.nodes, rep.train_delta[k]);
  }
  return rep;
}

ProvenanceMatrix provenance_matrix(const std::vector<AgentSnapshot>& snapshots, std::uint32_t round,
                                   std::uint32_t n_nodes) {
  ProvenanceMatrix m(n_nodes, std::vector<double>(n_nodes, 0.0));
  bool found = false;
  for (const AgentSnapshot& s : snapshots) {
    if (s.round != round) continue;
    found = true;
    if (s.node_id >= n_nodes) throw std::invalid_argument("provenance_matrix: node out of range");
    if (s.members.empty()) continue;
    const double share = 100.0 / static_cast<double>(s.members.size());
    for (const EstimatorId& id : s.members) {
      if (id.origin >= n_nodes) throw std::invalid_argument("provenance_matrix: origin out of range");
      m[s.node_id][id.origin] += share;
    }
  }
  if (!found) throw std::invalid_argument("provenance_matrix: round not present in snapshots");
  return m;
}

void write_metrics_csv(const std::vector<NodeMetrics>& run, const std::vector<NodeMetrics>& baseline,
                       std::ostream& out) {
  out << "node,split,run_bacc,run_prec,run_rec,baseline_bacc,baseline_prec,baseline_rec\n";
  out.precision(17);
  for (std::size_t j = 0; j < run.size(); ++j) {
    out << run[j].node << ",test," << run[j].test.bacc << "," << run[j].test.prec << ","
        << run[j].test.rec << "," << baseline[j].test.bacc << "," << baseline[j].test.prec << ","
        << baseline[j].test.rec << "\n";
    out << run[j].node << ",train," << run[j].train.bacc << "," << run[j].train.prec << ","
        << run[j].train.rec << "," << baseline[j].train.bacc << "," << baseline[j].train.prec << ","
        << baseline[j].train.rec << "\n";
  }
}

void write_improvement_csv(const ImprovementReport& rep, std::ostream& out) {
  static const char* names[3] = {"bacc", "prec", "rec"};
  out << "metric,split,node,delta\n";
  out.precision(17);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < rep.nodes.size(); ++j) {
      out << names[k] << ",test," << rep.nodes[j] << "," << rep.test_delta[k][j] << "\n";
      out << names[k] << ",train," << rep.nodes[j] << "," << rep.train_delta[k][j] << "\n";
    }
  }
  out << "metric,split,stat,value\n";
  for (std::size_t k = 0; k < 3; ++k) {
    const DeltaSummary& t = rep.test_summary[k];
    const DeltaSummary& tr = rep.train_summary[k];
    out << names[k] << ",test,mean," << t.mean << "\n";
    out << names[k] << ",test,median," << t.median << "\n";
    out << names[k] << ",test,min@" << t.min_node << "," << t.min_value << "\n";
    out << names[k] << ",test,max@" << t.max_node << "," << t.max_value << "\n";
    out << names[k] << ",train,mean," << tr.mean << "\n";
    out << names[k] << ",train,median," << tr.median << "\n";
    out << names[k] << ",train,min@" << tr.min_node << "," << tr.min_value << "\n";
    out << names[k] << ",train,max@" << tr.max_node << "," << tr.max_value << "\n";
  }
}

void write_provenance_csv(const ProvenanceMatrix& m, std::ostream& out) {
  out << "holder";
  for (std::size_t i = 0; i < m.size(); ++i) out << ",origin_" << i;
  out << "\n";
  out.precision(17);
  for (std::size_t j = 0; j < m.size(); ++j) {
    out << j;
    for (std::size_t i = 0; i < m[j].size(); ++i) out << "," << m[j][i];
    out << "\n";
  }
}

}  // namespace fedforest
