import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import normalized_mutual_info_score

from rpclust.evaluation import (
    accuracy,
    baseline_independent_spectral,
    contingency_matrix,
    nmi,
    score,
)
from rpclust.spectral import SpectralConfig, consistent_cluster


def partitions(n, max_blocks):
    """Restricted growth strings: every set partition of n items into <= max_blocks blocks."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(min(top + 2, max_blocks)):
            yield from grow(prefix + [b], max(top, b))
    yield from grow([0], 0)


def brute_force_accuracy(pred, truth):
    P, T = sorted(set(pred)), sorted(set(truth))
    best = 0
    small, large = (P, T) if len(P) <= len(T) else (T, P)
    for image in itertools.permutations(large, len(small)):
        pairs = dict(zip(small, image))
        if small is P:
            hits = sum(1 for p, t in zip(pred, truth) if pairs[p] == t)
        else:
            hits = sum(1 for p, t in zip(pred, truth) if pairs[t] == p)
        best = max(best, hits)
    return best / len(pred)


def test_partition_enumeration_counts():
    # Stirling numbers: S(5,1)+S(5,2)+S(5,3) = 1 + 15 + 25
    assert len(list(partitions(5, 3))) == 41


def test_accuracy_identity_and_relabel():
    t = [0, 0, 1, 1, 2, 2]
    assert accuracy(t, t) == 1.0
    assert accuracy([2, 2, 0, 0, 1, 1], t) == 1.0
    assert accuracy(["b", "b", "a", "a", "c", "c"], t) == 1.0


def test_accuracy_hand_case():
    assert accuracy([0, 1, 1, 1], [0, 0, 1, 1]) == 0.75


def test_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        accuracy([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        nmi([], [])


def test_accuracy_exhaustive_small():
    for n in range(1, 6):
        parts = list(partitions(n, 3))
        for p in parts:
            for t in parts:
                assert accuracy(p, t) == pytest.approx(brute_force_accuracy(p, t), abs=1e-15)


def test_nmi_identical():
    assert nmi([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == 1.0
    assert nmi([1, 1, 0, 0, 2], [0, 0, 1, 1, 2]) == 1.0


def test_nmi_independent_hand_case():
    assert nmi([0, 1, 0, 1], [0, 0, 1, 1]) == 0.0


def test_nmi_random_partitions_near_zero():
    rng = np.random.default_rng(0)
    assert nmi(rng.integers(0, 3, 2000), rng.integers(0, 3, 2000)) < 0.05


def test_nmi_degenerate_partitions():
    assert nmi([0, 0, 0], [5, 5, 5]) == 1.0
    assert nmi([0, 0, 0], [0, 1, 1]) == 0.0
    rep = score([0, 0, 0], [0, 1, 1])
    assert rep.nmi_degenerate and rep.nmi == 0.0
    assert not score([0, 1], [0, 1]).nmi_degenerate


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=2, max_size=40))
def test_nmi_matches_sklearn_geometric(pairs):
    pred, truth = map(list, zip(*pairs))
    if len(set(pred)) > 1 and len(set(truth)) > 1:
        expected = normalized_mutual_info_score(truth, pred, average_method="geometric")
        assert nmi(pred, truth) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=30),
       st.permutations(range(4)), st.permutations(range(4)))
def test_metrics_relabel_invariant(pairs, perm_p, perm_t):
    pred, truth = map(np.array, zip(*pairs))
    relabeled_p, relabeled_t = np.array(perm_p)[pred], np.array(perm_t)[truth]
    assert accuracy(relabeled_p, relabeled_t) == pytest.approx(accuracy(pred, truth))
    assert nmi(relabeled_p, relabeled_t) == pytest.approx(nmi(pred, truth), abs=1e-12)
    assert 0.0 <= nmi(pred, truth) <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_accuracy_at_least_one_over_k(k, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(k, 30))
    truth = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    pred = np.concatenate([rng.permutation(k), rng.integers(0, k, n - k)])
    assert accuracy(pred, truth) >= 1.0 / k - 1e-12


def test_score_report_fields():
    rep = score([0, 0, 1, 1], [1, 1, 0, 1])
    assert rep.contingency.sum() == 4
    np.testing.assert_array_equal(rep.contingency, contingency_matrix([1, 1, 0, 1], [0, 0, 1, 1]))
    assert rep.acc == 0.75
    assert rep.to_dict()["contingency"] == rep.contingency.tolist()


def _blob_worlds(seed):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])
    truth = np.repeat(np.arange(3), 25)
    pts = centers[truth] + rng.normal(size=(75, 2))
    return [pts + 0.2 * rng.normal(size=pts.shape) for _ in range(3)], truth


def test_baseline_equals_single_world_consistent_run():
    worlds, _ = _blob_worlds(1)
    base = baseline_independent_spectral(worlds, 3, seed=7)
    joint, _ = consistent_cluster(worlds[:1], 3, SpectralConfig(seed=7))
    assert accuracy(base, joint) == 1.0


def test_baseline_deterministic_and_accurate():
    worlds, truth = _blob_worlds(2)
    a = baseline_independent_spectral(worlds, 3, seed=3)
    b = baseline_independent_spectral(worlds, 3, seed=3)
    np.testing.assert_array_equal(a, b)
    assert accuracy(a, truth) == 1.0


def test_baseline_needs_worlds():
    with pytest.raises(ValueError):
        baseline_independent_spectral([], 2)
