"""Evaluation: ROC AUC, tree-vs-network fidelity, multi-session consistency."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from treedistill import mlp, tree as dtree
from treedistill.errors import InputError, UndefinedMetricError


def _binary_auc(scores, positives):
    """Rank-statistic AUC with midranks, so ties contribute 1/2."""
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present in the labels")
    ranks = rankdata(scores)
    pos_rank_sum = float(ranks[positives].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc(scores, labels):
    """Area under the ROC curve.

    One-dimensional (or single-column) scores are treated as P(class 1)
    of a binary problem; a full (n, k) matrix is macro-averaged
    one-vs-rest over the classes present in ``labels``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim == 2 and scores.shape[1] == 1:
        scores = scores[:, 0]
    if scores.shape[0] != labels.shape[0]:
        raise InputError("scores and labels must have the same length")

    if scores.ndim == 1:
        return _binary_auc(scores, labels == 1)

    present = np.unique(labels)
    if present.size < 2:
        raise UndefinedMetricError("AUC needs at least two classes present")
    per_class = [_binary_auc(scores[:, k], labels == k) for k in present]
    return float(np.mean(per_class))


def fidelity(tree, model, X_raw, X_std):
    """Fraction of rows where the tree matches the network's class.

    ``X_raw`` feeds the tree and ``X_std`` (the standardized view of the
    same rows) feeds the network.
    """
    X_raw = np.asarray(X_raw, dtype=np.float64)
    X_std = np.asarray(X_std, dtype=np.float64)
    if X_raw.shape[0] != X_std.shape[0]:
        raise InputError("raw and standardized views must cover the same rows")
    if X_raw.shape[0] == 0:
        raise InputError("fidelity needs at least one row")
    tree_pred = dtree.predict_tree(tree, X_raw)
    model_pred = mlp.predict_classes(model, X_std)
    return float(np.mean(tree_pred == model_pred))


def consistency(trees, X):
    """Fraction of rows classified identically by every tree."""
    if len(trees) < 2:
        raise InputError("consistency needs at least two trees")
    X = np.asarray(X, dtype=np.float64)
    predictions = np.stack([dtree.predict_tree(t, X) for t in trees])
    unanimous = np.all(predictions == predictions[0], axis=0)
    return float(np.mean(unanimous))


@dataclass(frozen=True)
class FidelityReport:
    mean: float
    std: float
    per_run: tuple

    @classmethod
    def from_runs(cls, per_run):
        values = tuple(float(v) for v in per_run)
        if not values:
            raise InputError("fidelity report needs at least one run")
        return cls(mean=float(np.mean(values)), std=float(np.std(values)), per_run=values)

    def __str__(self):
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class ConsistencyReport:
    consistency: float
    n_sessions: int
    apl_mean: float
    fidelity: FidelityReport

    def __post_init__(self):
        if self.n_sessions < 2:
            raise InputError("consistency is defined for two or more sessions")
