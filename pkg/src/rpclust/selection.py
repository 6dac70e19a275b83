"""Greedy selection of representative possible worlds.

The representative loss of a set ``reps`` over a pool is the sum, over
pool members, of the smallest divergence to any member of ``reps``.  Worlds
are added one at a time, each time taking the candidate that minimises the
loss of ``reps + [candidate]`` over ``pool - {candidate}``; ties go to the
lowest index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .divergence import DivergenceMatrix

__all__ = [
    "SelectionState",
    "SelectionStep",
    "representative_loss",
    "select_representatives",
    "greedy_selection",
    "naive_greedy_selection",
]


def _values(divergences) -> np.ndarray:
    if isinstance(divergences, DivergenceMatrix):
        return divergences.values
    return np.asarray(divergences, dtype=float)


@dataclass
class SelectionState:
    divergences: DivergenceMatrix
    representatives: list = field(default_factory=list)
    remaining: set = field(default_factory=set)

    @classmethod
    def initial(cls, divergences) -> "SelectionState":
        M = _values(divergences).shape[0]
        return cls(divergences, [], set(range(M)))

    def move(self, index: int) -> None:
        if index not in self.remaining:
            raise ValueError(f"world {index} is not in the unselected pool")
        self.remaining.remove(index)
        self.representatives.append(index)


@dataclass(frozen=True)
class SelectionStep:
    step: int
    chosen: int
    loss: float


def representative_loss(divergences, candidate_reps, candidate_pool) -> float:
    """Sum over ``candidate_pool`` of the minimum divergence to ``candidate_reps``."""
    reps = list(candidate_reps)
    if not reps:
        raise ValueError("representative set must be nonempty")
    pool = sorted(candidate_pool)
    if not pool:
        return 0.0
    D = _values(divergences)
    return float(D[np.ix_(reps, pool)].min(axis=0).sum())


def greedy_selection(divergences, R: int) -> tuple:
    """Run the greedy loop; returns ``(indices, trace)``.

    Keeps, for each unselected world, its current minimum divergence to the
    selected set, so one step costs O(|pool|^2) array work.
    """
    D = _values(divergences)
    M = D.shape[0]
    if not 1 <= R <= M:
        raise ValueError(f"R must satisfy 1 <= R <= M (R={R}, M={M})")
    nearest = np.full(M, np.inf)
    pool = np.arange(M)
    chosen, trace = [], []
    for step in range(R):
        # cost[c, k]: contribution of pool member k once candidate c is added
        cost = np.minimum(nearest[pool][None, :], D[np.ix_(pool, pool)])
        np.fill_diagonal(cost, 0.0)
        losses = cost.sum(axis=1)
        pos = int(np.argmin(losses))  # first minimum == lowest index, pool is sorted
        pick = int(pool[pos])
        chosen.append(pick)
        trace.append(SelectionStep(step, pick, float(losses[pos])))
        nearest = np.minimum(nearest, D[pick])
        pool = np.delete(pool, pos)
    return chosen, trace


def select_representatives(divergences, R: int) -> list:
    return greedy_selection(divergences, R)[0]


def naive_greedy_selection(divergences, R: int) -> list:
    """Re-evaluates the full loss for every candidate at every step (debug oracle)."""
    state = SelectionState.initial(divergences)
    M = len(state.remaining)
    if not 1 <= R <= M:
        raise ValueError(f"R must satisfy 1 <= R <= M (R={R}, M={M})")
    while len(state.representatives) < R:
        best, best_loss = None, np.inf
        for c in sorted(state.remaining):
            loss = representative_loss(divergences, state.representatives + [c],
                                       state.remaining - {c})
            if loss < best_loss:
                best, best_loss = c, loss
        state.move(best)
    return state.representatives
