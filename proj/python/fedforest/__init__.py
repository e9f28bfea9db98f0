"""Federated random-forest anomaly detection.

Per-agent random forests exchange their top-ranked decision trees over a
gossip protocol; a convolutional tree kernel and greedy Gaussian-process
selection decide which trees travel, and a hash-chained signed ledger makes
every training and sharing step auditable.
"""

from ._core import (
    DecisionTree,
    Ensemble,
    EstimatorId,
    GramMatrix,
    LabeledDataset,
    NodeDataset,
    RunResult,
    TreeTrainConfig,
    bootstrap_sample,
    build_central_test,
    confusion,
    fit_tree,
    gram,
    improvement,
    load_csv,
    metrics,
    p_greedy_rank,
    partition_unbalanced,
    run_experiment,
    split_train_test,
    synth_generate,
    tree_from_bytes,
    tree_kernel,
    verify_ledger_file,
)

__all__ = [
    "DecisionTree",
    "Ensemble",
    "EstimatorId",
    "GramMatrix",
    "LabeledDataset",
    "NodeDataset",
    "RunResult",
    "TreeTrainConfig",
    "bootstrap_sample",
    "build_central_test",
    "confusion",
    "fit_tree",
    "gram",
    "improvement",
    "load_csv",
    "metrics",
    "p_greedy_rank",
    "partition_unbalanced",
    "run_experiment",
    "split_train_test",
    "synth_generate",
    "tree_from_bytes",
    "tree_kernel",
    "verify_ledger_file",
]

__version__ = "0.1.0"
