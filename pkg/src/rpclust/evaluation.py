"""Clustering accuracy, normalised mutual information and the per-world baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spectral import spectral_clustering

__all__ = [
    "ScoreReport",
    "contingency_matrix",
    "accuracy",
    "nmi",
    "score",
    "baseline_independent_spectral",
]


def _check(predicted, truth):
    p = np.asarray(predicted).ravel()
    t = np.asarray(truth).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} labels")
    if p.size == 0:
        raise ValueError("cannot score an empty clustering")
    return p, t


def contingency_matrix(truth, predicted) -> np.ndarray:
    """Counts with true classes on rows and predicted clusters on columns."""
    p, t = _check(predicted, truth)
    t_vals, p_vals = np.unique(t), np.unique(p)
    ti, pi = np.searchsorted(t_vals, t), np.searchsorted(p_vals, p)
    cells = np.bincount(ti * p_vals.size + pi, minlength=t_vals.size * p_vals.size)
    return cells.reshape(t_vals.size, p_vals.size)


def accuracy(predicted, truth) -> float:
    """Best fraction of agreements over one-to-one cluster/class matchings."""
    table = contingency_matrix(truth, predicted)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _nmi(table):
    n = table.sum()
    h_true = _entropy(table.sum(axis=1))
    h_pred = _entropy(table.sum(axis=0))
    if h_true == 0.0 or h_pred == 0.0:
        # identical only if both sides are a single block
        same = table.shape[0] == 1 and table.shape[1] == 1
        return (1.0 if same else 0.0), True
    if table.shape[0] == table.shape[1] and np.all((table > 0).sum(axis=0) == 1) \
            and np.all((table > 0).sum(axis=1) == 1):
        return 1.0, False
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    return min(max(mi / np.sqrt(h_true * h_pred), 0.0), 1.0), False


def nmi(predicted, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (nats)."""
    return _nmi(contingency_matrix(truth, predicted))[0]


@dataclass(frozen=True, eq=False)
class ScoreReport:
    acc: float
    nmi: float
    contingency: np.ndarray
    nmi_degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "acc": float(self.acc),
            "nmi": float(self.nmi),
            "contingency": self.contingency.tolist(),
            "nmi_degenerate": bool(self.nmi_degenerate),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreReport":
        return cls(d["acc"], d["nmi"], np.array(d["contingency"], dtype=int), d["nmi_degenerate"])


def score(predicted, truth) -> ScoreReport:
    table = contingency_matrix(truth, predicted)
    rows, cols = linear_sum_assignment(table, maximize=True)
    value, degenerate = _nmi(table)
    return ScoreReport(float(table[rows, cols].sum() / table.sum()), value, table, degenerate)


def baseline_independent_spectral(worlds, k: int, seed: int = 0, sigma="auto",
                                  restarts: int = 10, row_normalize: bool = True) -> np.ndarray:
    """Plain spectral clustering of the first world, ignoring the others."""
    worlds = list(worlds)
    if not worlds:
        raise ValueError("need at least one world")
    return spectral_clustering(worlds[0], k, sigma=sigma, seed=seed, restarts=restarts,
                               row_normalize=row_normalize)
