"""Uncertain objects, possible worlds and world sampling.

An uncertain object is either an empirical instance set (optionally
weighted) or an axis-aligned Gaussian around a base point.  A possible world
holds exactly one draw per object, in object order.

Seeding: ``sample_ensemble(dataset, M, seed)`` spawns ``M`` child streams
from ``numpy.random.SeedSequence(seed)``; world ``i`` is drawn from child
``i``.  Each world therefore depends only on ``(dataset, seed, i)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "DatasetError",
    "EmpiricalModel",
    "GaussianModel",
    "UncertainObject",
    "UncertainDataset",
    "PossibleWorld",
    "WorldEnsemble",
    "load_dataset",
    "load_labels",
    "write_dataset",
    "points_dataset",
    "gaussianize",
    "sample_world",
    "sample_ensemble",
]

WEIGHT_TOL = 1e-9


class DatasetError(ValueError):
    """Raised for malformed or inconsistent uncertain datasets."""


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    instances: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        inst = np.atleast_2d(np.asarray(self.instances, dtype=float))
        if inst.shape[0] == 0:
            raise DatasetError("empirical object needs at least one instance")
        if not np.all(np.isfinite(inst)):
            raise DatasetError("instance coordinates must be finite")
        object.__setattr__(self, "instances", inst)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape[0] != inst.shape[0]:
                raise DatasetError("one weight per instance is required")
            if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise DatasetError(f"weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
            object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.instances.shape[1]


@dataclass(frozen=True, eq=False)
class GaussianModel:
    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        std = np.asarray(self.stddev, dtype=float).ravel()
        if mean.shape != std.shape:
            raise DatasetError("mean and stddev must have the same length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise DatasetError("gaussian parameters must be finite")
        if np.any(std < 0):
            raise DatasetError("stddev must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stddev", std)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class UncertainObject:
    id: str
    model: Union[EmpiricalModel, GaussianModel]

    @property
    def d(self) -> int:
        return self.model.d


@dataclass(frozen=True, eq=False)
class UncertainDataset:
    """Ordered collection of uncertain objects with optional class labels.

    ``labels`` are dense integer ids; ``label_names[i]`` is the original
    string of class ``i`` when the labels came from a file.
    """

    objects: tuple
    d: int
    labels: Optional[np.ndarray] = None
    label_names: Optional[tuple] = None

    def __post_init__(self):
        objs = tuple(self.objects)
        if not objs:
            raise DatasetError("dataset has no objects")
        for obj in objs:
            if obj.d != self.d:
                raise DatasetError(
                    f"object {obj.id!r} has dimensionality {obj.d}, expected {self.d}")
        object.__setattr__(self, "objects", objs)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int).ravel()
            if labels.shape[0] != len(objs):
                raise DatasetError(
                    f"got {labels.shape[0]} labels for {len(objs)} objects")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def ids(self) -> list:
        return [o.id for o in self.objects]

    def with_labels(self, labels, label_names=None) -> "UncertainDataset":
        return UncertainDataset(self.objects, self.d, labels, label_names)

    def is_deterministic_points(self) -> bool:
        return all(isinstance(o.model, EmpiricalModel) and o.model.instances.shape[0] == 1
                   for o in self.objects)

    def base_points(self) -> np.ndarray:
        """Stack the single instance of every object (deterministic datasets only)."""
        if not self.is_deterministic_points():
            raise DatasetError("base_points requires single-instance empirical objects")
        return np.vstack([o.model.instances for o in self.objects])

    @cached_property
    def _sampler(self) -> "_Sampler":
        return _Sampler(self)


class _Sampler:
    """Packed arrays so one world is drawn with a few vectorised operations."""

    def __init__(self, ds: UncertainDataset):
        gauss = [i for i, o in enumerate(ds.objects) if isinstance(o.model, GaussianModel)]
        emp = [i for i, o in enumerate(ds.objects) if isinstance(o.model, EmpiricalModel)]
        self.n, self.d = ds.n, ds.d
        self.gauss_idx = np.array(gauss, dtype=int)
        self.means = np.array([ds.objects[i].model.mean for i in gauss]).reshape(-1, ds.d)
        self.stds = np.array([ds.objects[i].model.stddev for i in gauss]).reshape(-1, ds.d)

        self.emp_idx = np.array(emp, dtype=int)
        sizes = [ds.objects[i].model.instances.shape[0] for i in emp]
        width = max(sizes, default=1)
        self.sizes = np.array(sizes, dtype=int)
        self.instances = np.zeros((len(emp), width, ds.d))
        # cumulative weights padded with +inf so padding is never selected
        self.cumw = np.full((len(emp), width), np.inf)
        for row, i in enumerate(emp):
            model = ds.objects[i].model
            m = model.instances.shape[0]
            self.instances[row, :m] = model.instances
            w = model.weights if model.weights is not None else np.full(m, 1.0 / m)
            self.cumw[row, :m] = np.cumsum(w)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.n, self.d))
        u = rng.random(self.n)
        out = np.empty((self.n, self.d))
        if self.gauss_idx.size:
            out[self.gauss_idx] = self.means + self.stds * z[self.gauss_idx]
        if self.emp_idx.size:
            pick = (self.cumw <= u[self.emp_idx, None]).sum(axis=1)
            pick = np.minimum(pick, self.sizes - 1)
            out[self.emp_idx] = self.instances[np.arange(self.emp_idx.size), pick]
        return out


@dataclass(frozen=True, eq=False)
class PossibleWorld:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DatasetError("world points must be an n x d matrix")
        if not np.all(np.isfinite(pts)):
            raise DatasetError("world points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class WorldEnsemble:
    worlds: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        worlds = tuple(w if isinstance(w, PossibleWorld) else PossibleWorld(w) for w in self.worlds)
        if not worlds:
            raise DatasetError("ensemble needs at least one world")
        shape = worlds[0].points.shape
        if any(w.points.shape != shape for w in worlds):
            raise DatasetError("all worlds in an ensemble must share (n, d)")
        object.__setattr__(self, "worlds", worlds)

    def __len__(self) -> int:
        return len(self.worlds)

    def __getitem__(self, i):
        return self.worlds[i]

    def __iter__(self):
        return iter(self.worlds)

    @property
    def M(self) -> int:
        return len(self.worlds)


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------

def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = [(reader.line_num, row) for row in reader if any(c.strip() for c in row)]
    return path, header, rows


def _floats(path, lineno, cells):
    try:
        vals = [float(c) for c in cells]
    except ValueError as exc:
        raise DatasetError(f"{path}, line {lineno}: non-numeric value ({exc})") from None
    if not all(np.isfinite(vals)):
        raise DatasetError(f"{path}, line {lineno}: non-finite value")
    return vals


def _numbered(header, prefix):
    cols = [h for h in header if h.startswith(prefix)]
    expected = [f"{prefix}{j}" for j in range(1, len(cols) + 1)]
    if cols != expected or not cols:
        raise DatasetError(f"expected columns {prefix}1..{prefix}d, got {cols}")
    return len(cols)


def load_dataset(path, fmt: str = "instance", labels_path=None) -> UncertainDataset:
    """Read an uncertain dataset from CSV.

    Parameters
    ----------
    path : path-like
        CSV file.
    fmt : {"instance", "gaussian"}
        ``instance``: header ``object_id,dim_1,...,dim_d[,weight]``, one row
        per instance, rows grouped by ``object_id`` in order of first
        appearance.  ``gaussian``: header
        ``object_id,mean_1..mean_d,std_1..std_d``, one row per object.
    labels_path : path-like, optional
        CSV with header ``object_id,label``.
    """
    if fmt == "instance":
        ds = _load_instances(path)
    elif fmt == "gaussian":
        ds = _load_gaussian(path)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    if labels_path is not None:
        labels, names = load_labels(labels_path, ds.ids)
        ds = ds.with_labels(labels, names)
    return ds


def _load_instances(path) -> UncertainDataset:
    path, header, rows = _read_rows(path)
    if not header or header[0] != "object_id":
        raise DatasetError(f"{path}: first column must be object_id")
    has_weight = header[-1] == "weight"
    d = _numbered(header[1:len(header) - has_weight], "dim_")
    width = 1 + d + has_weight
    groups: dict = {}
    for lineno, row in rows:
        if len(row) != width:
            raise DatasetError(
                f"{path}, line {lineno}: expected {width} fields, got {len(row)}")
        vals = _floats(path, lineno, row[1:])
        groups.setdefault(row[0].strip(), []).append((lineno, vals))
    if not groups:
        raise DatasetError(f"{path}: no data rows")
    objects = []
    for oid, entries in groups.items():
        inst = np.array([v[:d] for _, v in entries])
        weights = None
        if has_weight:
            weights = np.array([v[d] for _, v in entries])
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
                raise DatasetError(
                    f"{path}, line {entries[0][0]}: weights of object {oid!r} "
                    f"sum to {weights.sum()!r}, expected 1")
        objects.append(UncertainObject(oid, EmpiricalModel(inst, weights)))
    return UncertainDataset(tuple(objects), d)


def _load_gaussian(path) -> UncertainDataset:
    path, header, rows = _read_rows(path)
    if not header or header[0] != "object_id":
        raise DatasetError(f"{path}: first column must be object_id")
    d = _numbered(header[1:], "mean_")
    if header[1 + d:] != [f"std_{j}" for j in range(1, d + 1)]:
        raise DatasetError(f"{path}: expected std_1..std_{d} after the mean columns")
    objects, seen = [], set()
    for lineno, row in rows:
        if len(row) != 1 + 2 * d:
            raise DatasetError(
                f"{path}, line {lineno}: expected {1 + 2 * d} fields, got {len(row)}")
        oid = row[0].strip()
        if oid in seen:
            raise DatasetError(f"{path}, line {lineno}: duplicate object_id {oid!r}")
        seen.add(oid)
        vals = _floats(path, lineno, row[1:])
        if any(v < 0 for v in vals[d:]):
            raise DatasetError(f"{path}, line {lineno}: negative stddev")
        objects.append(UncertainObject(oid, GaussianModel(vals[:d], vals[d:])))
    if not objects:
        raise DatasetError(f"{path}: no data rows")
    return UncertainDataset(tuple(objects), d)


def load_labels(path, ids: Sequence[str]):
    """Map ``object_id,label`` rows onto ``ids``; returns (dense labels, names)."""
    path, header, rows = _read_rows(path)
    if header[:2] != ["object_id", "label"] or len(header) != 2:
        raise DatasetError(f"{path}: header must be object_id,label")
    by_id = {}
    for lineno, row in rows:
        if len(row) != 2:
            raise DatasetError(f"{path}, line {lineno}: expected 2 fields, got {len(row)}")
        by_id[row[0].strip()] = row[1].strip()
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise DatasetError(f"{path}: no label for objects {missing[:5]}")
    names: list = []
    index = {}
    dense = []
    for oid in ids:
        name = by_id[oid]
        if name not in index:
            index[name] = len(names)
            names.append(name)
        dense.append(index[name])
    return np.array(dense, dtype=int), tuple(names)


def write_dataset(dataset: UncertainDataset, path, labels_path=None) -> None:
    """Write ``dataset`` in the format matching its object models.

    All objects must share one model kind.  Floats are written with ``repr``
    so a write/read cycle is lossless.
    """
    kinds = {type(o.model) for o in dataset.objects}
    if len(kinds) != 1:
        raise DatasetError("cannot write a dataset mixing empirical and gaussian objects")
    d = dataset.d
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        if kinds == {GaussianModel}:
            out.writerow(["object_id"] + [f"mean_{j}" for j in range(1, d + 1)]
                         + [f"std_{j}" for j in range(1, d + 1)])
            for o in dataset.objects:
                out.writerow([o.id] + [repr(float(v)) for v in o.model.mean]
                             + [repr(float(v)) for v in o.model.stddev])
        else:
            weighted = any(o.model.weights is not None for o in dataset.objects)
            out.writerow(["object_id"] + [f"dim_{j}" for j in range(1, d + 1)]
                         + (["weight"] if weighted else []))
            for o in dataset.objects:
                m = o.model.instances.shape[0]
                w = o.model.weights if o.model.weights is not None else np.full(m, 1.0 / m)
                for inst, wi in zip(o.model.instances, w):
                    out.writerow([o.id] + [repr(float(v)) for v in inst]
                                 + ([repr(float(wi))] if weighted else []))
    if labels_path is not None:
        if dataset.labels is None:
            raise DatasetError("dataset has no labels to write")
        names = dataset.label_names or tuple(str(i) for i in range(dataset.labels.max() + 1))
        with open(labels_path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["object_id", "label"])
            for o, lab in zip(dataset.objects, dataset.labels):
                out.writerow([o.id, names[lab]])


# --------------------------------------------------------------------------
# construction and sampling
# --------------------------------------------------------------------------

def points_dataset(points, labels=None, ids=None) -> UncertainDataset:
    """Deterministic dataset: each row becomes a single-instance empirical object."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise DatasetError("no points")
    ids = ids if ids is not None else [str(i) for i in range(pts.shape[0])]
    objs = tuple(UncertainObject(str(i), EmpiricalModel(p[None, :])) for i, p in zip(ids, pts))
    return UncertainDataset(objs, pts.shape[1], labels)


def gaussianize(points, labels=None, noise_factor: float = 0.1, ids=None) -> UncertainDataset:
    """Turn certain points into Gaussian uncertain objects.

    Each object keeps its point as mean; the stddev of attribute ``j`` is
    ``noise_factor`` times the population standard deviation of column ``j``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0 or pts.size == 0:
        raise DatasetError("gaussianize needs at least one point")
    if not np.all(np.isfinite(pts)):
        raise DatasetError("points must be finite")
    if not noise_factor > 0:
        raise DatasetError("noise_factor must be positive")
    spread = pts.std(axis=0)
    spread[spread <= 0] = 0.0
    std = noise_factor * spread
    ids = ids if ids is not None else [str(i) for i in range(pts.shape[0])]
    objs = tuple(UncertainObject(str(i), GaussianModel(p, std)) for i, p in zip(ids, pts))
    return UncertainDataset(objs, pts.shape[1], labels)


def sample_world(dataset: UncertainDataset, rng: np.random.Generator) -> PossibleWorld:
    """Draw one possible world: one independent instance per object."""
    return PossibleWorld(dataset._sampler.draw(rng))


def world_seeds(seed: int, M: int) -> list:
    return np.random.SeedSequence(seed).spawn(M)


def sample_ensemble(dataset: UncertainDataset, M: int, seed: int) -> WorldEnsemble:
    if M < 1:
        raise ValueError("M must be >= 1")
    worlds = tuple(sample_world(dataset, np.random.default_rng(ss)) for ss in world_seeds(seed, M))
    return WorldEnsemble(worlds, seed)
