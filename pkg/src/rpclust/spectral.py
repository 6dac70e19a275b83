"""Spectral clustering with a consistency term across possible worlds.

Every representative world ``j`` gets a Gaussian-kernel affinity ``W_j``
and a normalised affinity ``L_j = D^-1/2 W_j D^-1/2``.  The joint objective

    sum_j  tr(U_j' L_j U_j) + tr(U_j U_j' U* U*')

is maximised by alternating two closed-form updates: the consensus ``U*``
is the top-k eigenbasis of ``sum_j U_j U_j'``, and each ``U_j`` is the
top-k eigenbasis of ``L_j + U* U*'``.  Rows of the final ``U*`` are fed to
k-means.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .uncertain import PossibleWorld

__all__ = [
    "SpectralConfig",
    "ObjectiveTrace",
    "KMeansResult",
    "similarity_matrix",
    "auto_sigma",
    "normalized_laplacian",
    "top_k_eigenvectors",
    "update_consensus",
    "update_world_basis",
    "objective_value",
    "orthonormality_error",
    "normalize_rows",
    "kmeans",
    "spectral_embedding",
    "spectral_clustering",
    "consistent_cluster",
]

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SpectralConfig:
    """Knobs for :func:`consistent_cluster`.

    ``sigma`` is either ``"auto"`` (median nonzero pairwise distance of each
    world) or a positive kernel width shared by all worlds.
    """

    sigma: Union[str, float] = "auto"
    rel_tol: float = 1e-6
    max_sweeps: int = 50
    restarts: int = 10
    seed: int = 0
    row_normalize: bool = True

    def __post_init__(self):
        if self.sigma != "auto" and not float(self.sigma) > 0:
            raise ValueError("sigma must be 'auto' or a positive number")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_sweeps < 1 or self.restarts < 1:
            raise ValueError("max_sweeps and restarts must be >= 1")


@dataclass
class ObjectiveTrace:
    values: list = field(default_factory=list)
    converged: bool = False
    sweeps: int = 0
    max_orthonormality_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "converged": bool(self.converged),
            "sweeps": int(self.sweeps),
            "max_orthonormality_error": float(self.max_orthonormality_error),
        }


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float


def _points(world) -> np.ndarray:
    if isinstance(world, PossibleWorld):
        return world.points
    pts = np.asarray(world, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def auto_sigma(points: np.ndarray) -> float:
    dist = pdist(points)
    dist = dist[dist > 0]
    if dist.size == 0:
        raise ValueError("cannot pick a kernel width: all points coincide")
    return float(np.median(dist))


def similarity_matrix(world, sigma: Union[str, float] = "auto") -> np.ndarray:
    """Gaussian-kernel affinities ``exp(-|x_i - x_l|^2 / (2 sigma^2))`` with zero diagonal."""
    pts = _points(world)
    if pts.shape[0] < 2:
        raise ValueError("similarity matrix needs at least 2 points")
    s = auto_sigma(pts) if sigma == "auto" else float(sigma)
    if not s > 0:
        raise ValueError("sigma must be positive")
    W = np.exp(-squareform(pdist(pts, "sqeuclidean")) / (2.0 * s * s))
    np.fill_diagonal(W, 0.0)
    return W


def normalized_laplacian(W: np.ndarray) -> np.ndarray:
    """``D^-1/2 W D^-1/2``; rejects graphs with an isolated vertex."""
    W = np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    bad = np.flatnonzero(deg <= 0)
    if bad.size:
        raise ValueError(f"row {int(bad[0])} of the similarity matrix has zero degree")
    inv = 1.0 / np.sqrt(deg)
    L = W * inv[:, None] * inv[None, :]
    return 0.5 * (L + L.T)


def top_k_eigenvectors(S: np.ndarray, k: int, return_eigenvalues: bool = False):
    """Eigenvectors of the ``k`` algebraically largest eigenvalues, descending.

    Each column is signed so that its largest-magnitude entry is positive.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise ValueError("matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if np.abs(S - S.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T), UPLO="L")
    vals, vecs = vals[::-1][:k], vecs[:, ::-1][:, :k]
    lead = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[lead, np.arange(k)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return (vecs, vals) if return_eigenvalues else vecs


def update_consensus(bases: Sequence[np.ndarray]) -> np.ndarray:
    """Top-k eigenbasis of ``sum_j U_j U_j'``."""
    if len(bases) == 0:
        raise ValueError("need at least one basis")
    n, k = np.shape(bases[0])
    acc = np.zeros((n, n))
    for U in bases:
        if np.shape(U) != (n, k):
            raise ValueError("all bases must share (n, k)")
        acc += U @ U.T
    return top_k_eigenvectors(acc, k)


def update_world_basis(L: np.ndarray, consensus: np.ndarray) -> np.ndarray:
    """Top-k eigenbasis of ``L + U* U*'``."""
    if L.shape[0] != consensus.shape[0]:
        raise ValueError("Laplacian and consensus disagree on n")
    return top_k_eigenvectors(L + consensus @ consensus.T, consensus.shape[1])


def objective_value(laplacians, bases, consensus) -> float:
    # tr(U' L U) = <U, L U>_F and tr(U U' V V') = ||U' V||_F^2
    total = 0.0
    for L, U in zip(laplacians, bases, strict=True):
        total += float(np.sum(U * (L @ U))) + float(np.sum((U.T @ consensus) ** 2))
    return total


def orthonormality_error(U: np.ndarray) -> float:
    return float(np.abs(U.T @ U - np.eye(U.shape[1])).max())


def normalize_rows(U: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / np.where(norms > 0, norms, 1.0)


# --------------------------------------------------------------------------
# k-means
# --------------------------------------------------------------------------

def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[c] = X[idx]
        closest = np.minimum(closest, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(X, centers, max_iter, tol):
    k = centers.shape[0]
    labels = np.zeros(X.shape[0], dtype=int)
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        labels = d2.argmin(axis=1)
        new = centers.copy()
        point_cost = d2[np.arange(X.shape[0]), labels]
        taken = np.zeros(X.shape[0], dtype=bool)
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = X[members].mean(axis=0)
            else:
                # empty cluster: move it to the point currently worst served
                far = int(np.argmax(np.where(taken, -1.0, point_cost)))
                taken[far] = True
                new[c] = X[far]
                labels[far] = c
        shift = float(((new - centers) ** 2).sum())
        centers = new
        if shift <= tol:
            break
    d2 = _sq_dists(X, centers)
    labels = d2.argmin(axis=1)
    return labels, centers, float(d2[np.arange(X.shape[0]), labels].sum())


def kmeans(rows, k: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 300, tol: float = 1e-12) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` by WCSS."""
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={X.shape[0]})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centers, inertia = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia)
    return best


# --------------------------------------------------------------------------
# clustering drivers
# --------------------------------------------------------------------------

def spectral_embedding(world, k: int, sigma: Union[str, float] = "auto") -> np.ndarray:
    return top_k_eigenvectors(normalized_laplacian(similarity_matrix(world, sigma)), k)


def spectral_clustering(world, k: int, sigma: Union[str, float] = "auto", seed: int = 0,
                        restarts: int = 10, row_normalize: bool = True) -> np.ndarray:
    """Plain normalised spectral clustering of a single world."""
    U = spectral_embedding(world, k, sigma)
    if row_normalize:
        U = normalize_rows(U)
    return kmeans(U, k, seed=seed, restarts=restarts).labels


def consistent_cluster(worlds, k: int, config: Optional[SpectralConfig] = None):
    """Cluster several worlds jointly; returns ``(labels, ObjectiveTrace)``."""
    config = config or SpectralConfig()
    pts = [_points(w) for w in worlds]
    if not pts:
        raise ValueError("need at least one world")
    if any(p.shape != pts[0].shape for p in pts):
        raise ValueError("all worlds must share (n, d)")
    n = pts[0].shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")

    laplacians = [normalized_laplacian(similarity_matrix(p, config.sigma)) for p in pts]
    bases = [top_k_eigenvectors(L, k) for L in laplacians]
    trace = ObjectiveTrace()
    worst = max(orthonormality_error(U) for U in bases)
    consensus = None
    for sweep in range(config.max_sweeps):
        consensus = update_consensus(bases)
        bases = [update_world_basis(L, consensus) for L in laplacians]
        worst = max(worst, orthonormality_error(consensus),
                    *(orthonormality_error(U) for U in bases))
        value = objective_value(laplacians, bases, consensus)
        trace.values.append(value)
        trace.sweeps = sweep + 1
        if sweep > 0:
            prev = trace.values[-2]
            if abs(value - prev) <= config.rel_tol * max(abs(prev), 1e-300):
                trace.converged = True
                break
    trace.max_orthonormality_error = worst
    if not trace.converged:
        log.info("consistent spectral clustering stopped after %d sweeps without converging",
                 trace.sweeps)
    embedding = normalize_rows(consensus) if config.row_normalize else consensus
    labels = kmeans(embedding, k, seed=config.seed, restarts=config.restarts).labels
    return labels, trace
