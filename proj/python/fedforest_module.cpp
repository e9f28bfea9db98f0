#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "fedforest/dataset.hpp"
#include "fedforest/ensemble.hpp"
#include "fedforest/eval.hpp"
#include "fedforest/federation.hpp"
#include "fedforest/ledger.hpp"
#include "fedforest/ranking.hpp"
#include "fedforest/run_config.hpp"
#include "fedforest/tree.hpp"
#include "fedforest/tree_codec.hpp"
#include "fedforest/tree_kernel.hpp"

namespace py = pybind11;
using namespace fedforest;

namespace {

Topology topology_by_name(const std::string& name, std::uint32_t n,
                          const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  if (name == "disconnected") return Topology::disconnected(n);
  if (name == "ring") return Topology::ring(n);
  if (name == "complete") return Topology::complete(n);
  if (name == "edges") return Topology::from_edges(n, edges);
  throw std::invalid_argument("topology must be disconnected|ring|complete|edges");
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["bacc"] = m.bacc;
  d["prec"] = m.prec;
  d["rec"] = m.rec;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Federated random-forest anomaly detection: trees, kernel ranking, "
            "gossip protocol, and the hash-chained audit ledger.";

  // ---- data ----------------------------------------------------------------
  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def(py::init([](std::vector<FeatureVector> rows, std::vector<int> labels) {
             LabeledDataset ds;
             if (!rows.empty()) ds.d = rows.front().size();
             for (std::size_t i = 0; i < rows.size(); ++i) {
               ds.push_row(std::move(rows[i]), labels.at(i));
             }
             return ds;
           }),
           py::arg("rows"), py::arg("labels"))
      .def_property_readonly("m", &LabeledDataset::size)
      .def_property_readonly("d", [](const LabeledDataset& ds) { return ds.d; })
      .def("positives", &LabeledDataset::positives)
      .def("row", [](const LabeledDataset& ds, std::size_t i) { return ds.examples.at(i); })
      .def("label", [](const LabeledDataset& ds, std::size_t i) { return ds.labels.at(i); })
      .def("__len__", &LabeledDataset::size);

  py::class_<NodeDataset>(m, "NodeDataset")
      .def_readonly("node_id", &NodeDataset::node_id)
      .def_readonly("train", &NodeDataset::train)
      .def_readonly("test", &NodeDataset::test);

  m.def("load_csv", &load_csv, py::arg("path"), py::arg("label_column") = "Class");
  m.def("synth_generate", &synth_generate, py::arg("m"), py::arg("d"), py::arg("fraud_ratio"),
        py::arg("seed"));
  m.def(
      "partition_unbalanced",
      [](const LabeledDataset& ds, std::size_t n_parts, double imbalance, double train_fraction,
         std::uint64_t seed) {
        return partition_unbalanced(ds, {n_parts, imbalance, train_fraction, seed});
      },
      py::arg("ds"), py::arg("n_parts"), py::arg("imbalance") = 0.7,
      py::arg("train_fraction") = 0.9, py::arg("seed") = 0);
  m.def("split_train_test", &split_train_test, py::arg("part"), py::arg("train_fraction"),
        py::arg("seed"), py::arg("node_id") = 0);
  m.def("build_central_test", &build_central_test, py::arg("nodes"));

  // ---- trees -----------------------------------------------------------------
  py::class_<EstimatorId>(m, "EstimatorId")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("origin"), py::arg("counter"))
      .def_readonly("origin", &EstimatorId::origin)
      .def_readonly("counter", &EstimatorId::counter)
      .def("__repr__",
           [](const EstimatorId& id) {
             return "EstimatorId(" + std::to_string(id.origin) + ", " + std::to_string(id.counter) + ")";
           })
      .def("__eq__", [](const EstimatorId& a, const EstimatorId& b) { return a == b; })
      .def("__lt__", [](const EstimatorId& a, const EstimatorId& b) { return a < b; })
      .def("__hash__", [](const EstimatorId& id) {
        return std::hash<std::uint64_t>()((std::uint64_t(id.origin) << 32) | id.counter);
      });

  py::class_<TreeTrainConfig>(m, "TreeTrainConfig")
      .def(py::init([](std::uint32_t max_depth, std::uint32_t min_samples_leaf,
                       std::uint32_t features_per_split, bool bootstrap,
                       const std::string& class_weighting, std::uint64_t seed) {
             TreeTrainConfig cfg;
             cfg.max_depth = max_depth;
             cfg.min_samples_leaf = min_samples_leaf;
             cfg.features_per_split = features_per_split;
             cfg.bootstrap = bootstrap;
             if (class_weighting == "balanced") cfg.class_weighting = ClassWeighting::balanced;
             else if (class_weighting == "none") cfg.class_weighting = ClassWeighting::none;
             else throw std::invalid_argument("class_weighting must be 'balanced' or 'none'");
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("max_depth") = 10, py::arg("min_samples_leaf") = 5,
           py::arg("features_per_split") = 0, py::arg("bootstrap") = true,
           py::arg("class_weighting") = "balanced", py::arg("seed") = 0);

  py::class_<DecisionTree, std::shared_ptr<DecisionTree>>(m, "DecisionTree")
      .def_property_readonly("id", [](const DecisionTree& t) { return t.id; })
      .def_property_readonly("d", [](const DecisionTree& t) { return t.d; })
      .def("predict", &DecisionTree::predict, py::arg("x"))
      .def("internal_count", &DecisionTree::internal_count)
      .def("depth", &DecisionTree::depth)
      .def("to_json", [](const DecisionTree& t) { return tree_to_json(t); })
      .def("to_bytes", [](const DecisionTree& t) {
        const auto b = serialize_tree(t);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def(
      "fit_tree",
      [](const LabeledDataset& train, const TreeTrainConfig& cfg, std::uint32_t origin,
         std::uint32_t counter) {
        return std::make_shared<DecisionTree>(fit_tree(train, cfg, {origin, counter}));
      },
      py::arg("train"), py::arg("config") = TreeTrainConfig{}, py::arg("origin") = 0,
      py::arg("counter") = 0);
  m.def("tree_from_bytes", [](const py::bytes& data) {
    const std::string s = data;
    return std::make_shared<DecisionTree>(
        deserialize_tree(std::vector<std::uint8_t>(s.begin(), s.end())));
  });
  m.def("bootstrap_sample", &bootstrap_sample, py::arg("ds"), py::arg("seed"));

  // ---- kernel and ranking ----------------------------------------------------
  py::class_<GramMatrix>(m, "GramMatrix")
      .def_property_readonly("n", [](const GramMatrix& g) { return g.n; })
      .def("at", [](const GramMatrix& g, std::size_t i, std::size_t j) { return g.at(i, j); })
      .def_property_readonly("ids", [](const GramMatrix& g) { return g.ids; })
      .def("rows", [](const GramMatrix& g) {
        std::vector<std::vector<double>> rows(g.n, std::vector<double>(g.n));
        for (std::size_t i = 0; i < g.n; ++i) {
          for (std::size_t j = 0; j < g.n; ++j) rows[i][j] = g.at(i, j);
        }
        return rows;
      });

  m.def(
      "tree_kernel",
      [](const std::shared_ptr<DecisionTree>& a, const std::shared_ptr<DecisionTree>& b) {
        return tree_kernel(*a, *b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "gram",
      [](const std::vector<TreePtr>& trees, bool normalize) {
        KernelOptions opts;
        opts.normalize = normalize;
        return gram(trees, opts);
      },
      py::arg("trees"), py::arg("normalize") = false);
  m.def(
      "p_greedy_rank",
      [](const GramMatrix& g, std::size_t k) { return p_greedy_rank(g, k); }, py::arg("gram"),
      py::arg("k"));

  // ---- ensemble ---------------------------------------------------------------
  py::class_<Ensemble>(m, "Ensemble")
      .def(py::init<>())
      .def("add", &Ensemble::add, py::arg("trees"))
      .def(
          "get_top",
          [](const Ensemble& e, std::size_t k) {
            const auto top = e.get_top(k);
            return std::vector<TreePtr>(top.begin(), top.end());
          },
          py::arg("k"))
      .def("crop", [](Ensemble& e, std::size_t k) { e.crop(k); }, py::arg("k"))
      .def(
          "predict",
          [](const Ensemble& e, const FeatureVector& x, const std::string& mode) {
            return e.predict(x, mode == "majority" ? PredictMode::majority : PredictMode::average);
          },
          py::arg("x"), py::arg("mode") = "average")
      .def("member_ids", &Ensemble::member_ids)
      .def("__len__", &Ensemble::size);

  // ---- federation ---------------------------------------------------------------
  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("rounds", [](const RunResult& r) { return r.config.rounds; })
      .def_property_readonly("n_nodes",
                             [](const RunResult& r) { return r.config.topology.node_count(); })
      .def("final_ensemble_ids",
           [](const RunResult& r, std::uint32_t node) {
             return r.agents.at(node).ensemble.member_ids();
           })
      .def("node_metrics",
           [](const RunResult& r, const LabeledDataset& central) {
             const auto nm = evaluate_nodes(r, central);
             py::list out;
             for (const NodeMetrics& row : nm) {
               py::dict d;
               d["node"] = row.node;
               d["test"] = metrics_dict(row.test);
               d["train"] = metrics_dict(row.train);
               out.append(d);
             }
             return out;
           })
      .def("provenance_matrix",
           [](const RunResult& r, std::uint32_t round) {
             return provenance_matrix(r.snapshots, round, r.config.topology.node_count());
           })
      .def("snapshots_jsonl",
           [](const RunResult& r) {
             std::ostringstream oss;
             write_snapshots_jsonl(r.snapshots, oss);
             return oss.str();
           })
      .def("ledger_jsonl",
           [](const RunResult& r) {
             std::ostringstream oss;
             r.ledger.save_jsonl(oss);
             return oss.str();
           })
      .def("ledger_ok", [](const RunResult& r) { return verify_chain(r.ledger.records()).ok; })
      .def_property_readonly("log", [](const RunResult& r) { return r.log; });

  m.def(
      "run_experiment",
      [](std::vector<NodeDataset> nodes, const std::string& topology,
         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges, std::uint32_t rounds,
         std::uint32_t n_new, std::uint32_t n_share, std::uint32_t n_max,
         const TreeTrainConfig& tree_config, std::uint64_t seed, const std::string& process_id) {
        FederationConfig cfg;
        cfg.topology = topology_by_name(topology, static_cast<std::uint32_t>(nodes.size()), edges);
        cfg.rounds = rounds;
        cfg.n_new = n_new;
        cfg.n_share = n_share;
        cfg.n_max = n_max;
        cfg.tree_cfg = tree_config;
        cfg.seed = seed;
        cfg.process_id = process_id;
        return run_experiment(std::move(nodes), cfg);
      },
      py::arg("nodes"), py::arg("topology") = "disconnected",
      py::arg("edges") = std::vector<std::pair<std::uint32_t, std::uint32_t>>{},
      py::arg("rounds") = 4, py::arg("n_new") = 10, py::arg("n_share") = 10,
      py::arg("n_max") = 50, py::arg("tree_config") = TreeTrainConfig{}, py::arg("seed") = 0,
      py::arg("process_id") = "fedforest-run");

  // ---- evaluation -----------------------------------------------------------------
  m.def("confusion", [](const std::vector<double>& scores, const std::vector<int>& labels) {
    const ConfusionCounts c = confusion(scores, labels);
    py::dict d;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["tn"] = c.tn;
    d["fn"] = c.fn;
    return d;
  });
  m.def("metrics", [](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
    return metrics_dict(metrics({tp, fp, tn, fn}));
  });
  m.def(
      "improvement",
      [](const RunResult& run, const RunResult& baseline, const LabeledDataset& central) {
        const auto rep = improvement_report(evaluate_nodes(run, central),
                                            evaluate_nodes(baseline, central));
        py::dict out;
        static const char* names[3] = {"bacc", "prec", "rec"};
        for (std::size_t k = 0; k < 3; ++k) {
          py::dict metric;
          metric["test_mean"] = rep.test_summary[k].mean;
          metric["test_median"] = rep.test_summary[k].median;
          metric["train_mean"] = rep.train_summary[k].mean;
          metric["train_median"] = rep.train_summary[k].median;
          metric["test_deltas"] = rep.test_delta[k];
          out[names[k]] = metric;
        }
        return out;
      },
      py::arg("run"), py::arg("baseline"), py::arg("central_test"));

  // ---- ledger -----------------------------------------------------------------------
  m.def("verify_ledger_file", [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    const ChainVerdict v = verify_chain(load_ledger_jsonl(in));
    py::dict d;
    d["ok"] = v.ok;
    d["first_bad_index"] = v.first_bad_index;
    d["reason"] = v.reason;
    return d;
  });
}
