"""Jensen-Shannon divergence between possible worlds.

Each world is summarised by a product-Gaussian kernel density with
Silverman bandwidths.  KL terms are sample averages of log-density ratios,
using the first argument's own points as the sample, and everything is
evaluated in the log domain so high-dimensional worlds do not underflow.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .uncertain import PossibleWorld, WorldEnsemble

__all__ = [
    "KdeModel",
    "DivergenceMatrix",
    "silverman_bandwidths",
    "fit_kde",
    "kde_density",
    "kl_estimate",
    "jsd",
    "jsd_raw",
    "pairwise_jsd",
]

log = logging.getLogger(__name__)

SILVERMAN = 1.06
BANDWIDTH_FLOOR = 1e-9
# logaddexp(0, 0) rather than log(2) so that identical inputs cancel exactly
LN2 = float(np.logaddexp(0.0, 0.0))
CLAMP_WARN = 0.05
_CHUNK = 2_000_000


def _as_points(world) -> np.ndarray:
    if isinstance(world, PossibleWorld):
        return world.points
    pts = np.asarray(world, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def silverman_bandwidths(points: np.ndarray) -> np.ndarray:
    """``1.06 * std_j * n**(-1/5)`` per column, floored to stay positive.

    ``std_j`` uses the n-1 convention.  The floor is
    ``1e-9 * (1 + |mean_j|)``.
    """
    n = points.shape[0]
    h = SILVERMAN * points.std(axis=0, ddof=1) * n ** -0.2
    floor = BANDWIDTH_FLOOR * (1.0 + np.abs(points.mean(axis=0)))
    return np.maximum(h, floor)


@dataclass(frozen=True, eq=False)
class KdeModel:
    points: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        h = np.asarray(self.bandwidths, dtype=float).ravel()
        if h.shape[0] != pts.shape[1]:
            raise ValueError("need one bandwidth per dimension")
        if not np.all(h > 0) or not np.all(np.isfinite(h)):
            raise ValueError("bandwidths must be positive and finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bandwidths", h)
        object.__setattr__(self, "_scaled", pts / h)
        norm = (math.log(pts.shape[0]) + float(np.log(h).sum())
                + 0.5 * pts.shape[1] * math.log(2 * math.pi))
        object.__setattr__(self, "_log_norm", norm)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def log_density(self, x) -> np.ndarray:
        """Log density at each row of ``x`` (shape ``(m, d)``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"query has dimension {x.shape[1]}, model has {self.d}")
        xs = x / self.bandwidths
        step = max(1, _CHUNK // max(1, self.n))
        out = np.empty(x.shape[0])
        for start in range(0, x.shape[0], step):
            sq = cdist(xs[start:start + step], self._scaled, "sqeuclidean")
            out[start:start + step] = logsumexp(-0.5 * sq, axis=1)
        return out - self._log_norm


def fit_kde(world) -> KdeModel:
    pts = _as_points(world)
    if pts.shape[0] < 2:
        raise ValueError("KDE needs at least 2 points to estimate a bandwidth")
    return KdeModel(pts, silverman_bandwidths(pts))


def kde_density(model: KdeModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(np.exp(model.log_density(x)[0]))


def kl_estimate(p_model: KdeModel, q_model: KdeModel, sample) -> float:
    """Monte Carlo KL(P || Q): mean of ``log p(x) - log q(x)`` over ``sample``."""
    s = _as_points(sample)
    if s.shape[0] == 0:
        raise ValueError("sample must be nonempty")
    return float(np.mean(p_model.log_density(s) - q_model.log_density(s)))


def _half_kl_to_mixture(log_self: np.ndarray, log_other: np.ndarray) -> float:
    # log(f / ((f+g)/2)) = ln2 - log(1 + g/f), bounded above by ln2
    return float(np.mean(LN2 - np.logaddexp(0.0, log_other - log_self)))


def _jsd_from_logs(a_at_a, b_at_a, a_at_b, b_at_b) -> float:
    return 0.5 * _half_kl_to_mixture(a_at_a, b_at_a) + 0.5 * _half_kl_to_mixture(b_at_b, a_at_b)


def jsd_raw(world_a, world_b) -> float:
    """Unclamped JSD estimate; can fall slightly below zero."""
    pa, pb = _as_points(world_a), _as_points(world_b)
    if pa.shape != pb.shape:
        raise ValueError("worlds must share (n, d)")
    ka, kb = fit_kde(pa), fit_kde(pb)
    return _jsd_from_logs(ka.log_density(pa), kb.log_density(pa),
                          ka.log_density(pb), kb.log_density(pb))


def _clamp(v: float) -> float:
    return min(max(v, 0.0), LN2)


def jsd(world_a, world_b) -> float:
    """JSD between two worlds in nats, clamped to ``[0, ln 2]``."""
    return _clamp(jsd_raw(world_a, world_b))


@dataclass(frozen=True, eq=False)
class DivergenceMatrix:
    """Symmetric world-by-world JSD matrix with zero diagonal.

    ``max_violation`` is the largest distance by which a raw estimate fell
    outside ``[0, ln 2]`` before clamping.
    """

    values: np.ndarray
    max_violation: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("divergence matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("divergence matrix must be symmetric")
        if np.any(np.diag(v) != 0) or np.any(v < 0):
            raise ValueError("divergence matrix needs a zero diagonal and nonnegative entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    def summary(self) -> dict:
        off = self.values[~np.eye(self.M, dtype=bool)]
        if off.size == 0:
            off = np.zeros(1)
        return {
            "M": self.M,
            "min": float(off.min()),
            "max": float(off.max()),
            "mean": float(off.mean()),
            "all_zero": bool(np.all(off == 0)),
            "max_violation": float(self.max_violation),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow([""] + [str(i) for i in range(self.M)])
            for i, row in enumerate(self.values):
                out.writerow([str(i)] + [repr(float(v)) for v in row])


def pairwise_jsd(ensemble) -> DivergenceMatrix:
    """JSD for every unordered pair of worlds; one KDE fit per world."""
    worlds = [_as_points(w) for w in (ensemble.worlds if isinstance(ensemble, WorldEnsemble)
                                      else ensemble)]
    M = len(worlds)
    if M < 2:
        raise ValueError("pairwise_jsd needs at least 2 worlds")
    models = [fit_kde(w) for w in worlds]
    self_logs = [m.log_density(w) for m, w in zip(models, worlds)]
    values = np.zeros((M, M))
    worst = 0.0
    for i in range(M):
        for j in range(i + 1, M):
            raw = _jsd_from_logs(self_logs[i], models[j].log_density(worlds[i]),
                                 models[i].log_density(worlds[j]), self_logs[j])
            worst = max(worst, -raw, raw - LN2)
            values[i, j] = values[j, i] = _clamp(raw)
    if worst > CLAMP_WARN:
        log.warning("JSD estimates strayed %.3g outside [0, ln 2] before clamping", worst)
    return DivergenceMatrix(values, worst)
