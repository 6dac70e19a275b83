import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpclust.uncertain import (
    DatasetError,
    EmpiricalModel,
    GaussianModel,
    PossibleWorld,
    UncertainDataset,
    UncertainObject,
    WorldEnsemble,
    gaussianize,
    load_dataset,
    points_dataset,
    sample_ensemble,
    sample_world,
    write_dataset,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_groups_instances_by_object(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1,dim_2\na,1,2\na,3,4\nb,5,6\n")
    ds = load_dataset(f)
    assert ds.n == 2 and ds.d == 2
    assert ds.ids == ["a", "b"]
    a = ds.objects[0].model
    assert isinstance(a, EmpiricalModel)
    np.testing.assert_array_equal(a.instances, [[1, 2], [3, 4]])
    assert a.weights is None


def test_load_keeps_first_appearance_order(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1\nz,1\ny,2\nz,3\n")
    assert load_dataset(f).ids == ["z", "y"]


def test_load_rejects_non_numeric_with_line_number(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1,dim_2\na,1,2\nb,x,3\n")
    with pytest.raises(DatasetError, match="line 3"):
        load_dataset(f)


@pytest.mark.parametrize("body, needle", [
    ("object_id,dim_1,dim_2\na,1\n", "line 2"),
    ("object_id,dim_1,weight\na,1,0.5\na,2,0.4\n", "sum to"),
    ("object_id,dim_2\na,1\n", "dim_1"),
    ("object_id,dim_1\n", "no data"),
])
def test_load_rejections(tmp_path, body, needle):
    with pytest.raises(DatasetError, match=needle):
        load_dataset(_write(tmp_path / "d.csv", body))


def test_load_weighted_instances(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1,weight\na,0,0.25\na,1,0.75\n")
    model = load_dataset(f).objects[0].model
    np.testing.assert_allclose(model.weights, [0.25, 0.75])


def test_gaussian_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    means = rng.normal(size=(150, 4))
    stds = rng.uniform(0, 2, size=(150, 4))
    objs = tuple(UncertainObject(f"obj{i}", GaussianModel(m, s))
                 for i, (m, s) in enumerate(zip(means, stds)))
    ds = UncertainDataset(objs, 4, labels=np.arange(150) % 3, label_names=("x", "y", "z"))
    write_dataset(ds, tmp_path / "g.csv", labels_path=tmp_path / "l.csv")
    back = load_dataset(tmp_path / "g.csv", "gaussian", tmp_path / "l.csv")
    assert back.n == 150
    assert all(isinstance(o.model, GaussianModel) for o in back.objects)
    np.testing.assert_array_equal(np.array([o.model.mean for o in back.objects]), means)
    np.testing.assert_array_equal(np.array([o.model.stddev for o in back.objects]), stds)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.label_names == ("x", "y", "z")


def test_labels_are_mapped_to_dense_ints(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1\na,1\nb,2\nc,3\n")
    lab = _write(tmp_path / "l.csv", "object_id,label\nc,cat\na,dog\nb,cat\n")
    ds = load_dataset(f, labels_path=lab)
    np.testing.assert_array_equal(ds.labels, [0, 1, 1])
    assert ds.label_names == ("dog", "cat")


def test_missing_label_rejected(tmp_path):
    f = _write(tmp_path / "d.csv", "object_id,dim_1\na,1\nb,2\n")
    lab = _write(tmp_path / "l.csv", "object_id,label\na,x\n")
    with pytest.raises(DatasetError, match="no label"):
        load_dataset(f, labels_path=lab)


def test_gaussianize_constant_attribute_gets_zero_std():
    pts = np.column_stack([np.arange(5.0), np.full(5, 7.0)])
    ds = gaussianize(pts, noise_factor=0.3)
    for o in ds.objects:
        assert o.model.stddev[1] == 0.0
        assert o.model.stddev[0] > 0


def test_gaussianize_uses_population_std():
    ds = gaussianize([[0.0, 0.0], [2.0, 0.0]], noise_factor=0.5)
    for o in ds.objects:
        np.testing.assert_allclose(o.model.stddev, [0.5, 0.0])
    np.testing.assert_array_equal(ds.objects[1].model.mean, [2.0, 0.0])


def test_gaussianize_preserves_cardinality():
    pts = np.random.default_rng(0).normal(size=(50, 3))
    assert gaussianize(pts, noise_factor=0.1).n == 50


def test_gaussianize_rejects_empty_and_bad_factor():
    with pytest.raises(DatasetError):
        gaussianize(np.empty((0, 2)))
    with pytest.raises(DatasetError):
        gaussianize([[1.0]], noise_factor=0.0)


def test_single_instance_world_is_exact():
    pts = np.random.default_rng(1).normal(size=(20, 3))
    world = sample_world(points_dataset(pts), np.random.default_rng(5))
    np.testing.assert_array_equal(world.points, pts)


def test_zero_std_gaussian_world_equals_means():
    means = np.random.default_rng(2).normal(size=(10, 2))
    objs = tuple(UncertainObject(str(i), GaussianModel(m, np.zeros(2))) for i, m in enumerate(means))
    world = sample_world(UncertainDataset(objs, 2), np.random.default_rng(0))
    np.testing.assert_array_equal(world.points, means)


def test_weighted_draw_frequency():
    # binomial(10000, 0.9): sd = 0.003, so [0.88, 0.92] is a > 6 sd band
    obj = UncertainObject("a", EmpiricalModel([[0.0], [1.0]], [0.9, 0.1]))
    ds = UncertainDataset((obj,), 1)
    rng = np.random.default_rng(11)
    draws = np.array([sample_world(ds, rng).points[0, 0] for _ in range(10_000)])
    assert 0.88 <= np.mean(draws == 0.0) <= 0.92


def test_gaussian_draw_moments():
    obj = UncertainObject("a", GaussianModel([1.0, -2.0], [0.5, 2.0]))
    ds = UncertainDataset((obj,), 2)
    rng = np.random.default_rng(4)
    draws = np.vstack([sample_world(ds, rng).points for _ in range(20_000)])
    np.testing.assert_allclose(draws.mean(axis=0), [1.0, -2.0], atol=0.05)
    np.testing.assert_allclose(draws.std(axis=0), [0.5, 2.0], rtol=0.03)


def test_ensemble_of_one():
    ens = sample_ensemble(gaussianize(np.eye(3)), 1, 0)
    assert ens.M == 1


def test_ensemble_determinism():
    ds = gaussianize(np.random.default_rng(0).normal(size=(30, 2)), noise_factor=0.2)
    a, b = sample_ensemble(ds, 8, 42), sample_ensemble(ds, 8, 42)
    for wa, wb in zip(a, b):
        np.testing.assert_array_equal(wa.points, wb.points)
    c = sample_ensemble(ds, 8, 43)
    assert not np.array_equal(a[0].points, c[0].points)


def test_ensemble_prefix_stable_in_M():
    ds = gaussianize(np.random.default_rng(0).normal(size=(10, 2)))
    short, long = sample_ensemble(ds, 3, 9), sample_ensemble(ds, 6, 9)
    for i in range(3):
        np.testing.assert_array_equal(short[i].points, long[i].points)


def test_degenerate_ensemble_worlds_identical():
    pts = np.random.default_rng(3).normal(size=(12, 2))
    ens = sample_ensemble(points_dataset(pts), 100, 7)
    assert ens.M == 100
    assert all(np.array_equal(w.points, pts) for w in ens)


def test_world_and_ensemble_validation():
    with pytest.raises(DatasetError):
        PossibleWorld(np.array([[np.nan, 1.0]]))
    with pytest.raises(DatasetError):
        WorldEnsemble((np.zeros((3, 2)), np.zeros((4, 2))))
    with pytest.raises(DatasetError):
        EmpiricalModel(np.empty((0, 2)))
    with pytest.raises(DatasetError):
        UncertainDataset((UncertainObject("a", GaussianModel([0.0], [1.0])),
                          UncertainObject("b", GaussianModel([0.0, 1.0], [1.0, 1.0]))), 1)


instance_sets = st.lists(
    st.lists(st.floats(-100, 100), min_size=2, max_size=2), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(st.lists(instance_sets, min_size=1, max_size=6), st.integers(0, 2**31))
def test_empirical_rows_are_instances(sets, seed):
    objs = tuple(UncertainObject(str(i), EmpiricalModel(np.array(s))) for i, s in enumerate(sets))
    ds = UncertainDataset(objs, 2)
    world = sample_world(ds, np.random.default_rng(seed))
    assert world.points.shape == (len(sets), 2)
    for row, s in zip(world.points, sets):
        assert any(np.array_equal(row, inst) for inst in np.array(s))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 4), st.integers(0, 2**31))
def test_gaussianize_with_zero_noise_reproduces_points(n, d, seed):
    pts = np.random.default_rng(seed).normal(size=(n, d))
    ds = gaussianize(pts, noise_factor=0.1)
    zeroed = UncertainDataset(
        tuple(UncertainObject(o.id, GaussianModel(o.model.mean, np.zeros(d))) for o in ds.objects), d)
    np.testing.assert_array_equal(sample_world(zeroed, np.random.default_rng(seed)).points, pts)
