"""End-to-end runs: sample worlds, pick representatives, cluster, score.

Seeds are derived from the master seed with
``SeedSequence([master, stream, counter])``; stream 0 feeds world sampling
and stream 1 feeds clustering.  The world counter stays 0 unless
``resample_worlds`` is set, so changing ``repeat`` never changes the
ensemble.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .divergence import pairwise_jsd
from .evaluation import ScoreReport, score
from .selection import greedy_selection
from .spectral import SpectralConfig, consistent_cluster
from .uncertain import gaussianize, load_dataset, sample_ensemble

__all__ = [
    "RunConfig",
    "RunReport",
    "PipelineError",
    "derive_seed",
    "run_pipeline",
    "execute",
    "emit_report",
    "load_report",
    "report_paths",
]

WORLD_STREAM = 0
CLUSTER_STREAM = 1
STAGES = ("load", "sample", "divergence", "selection", "clustering", "scoring")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


def derive_seed(master: int, stream: int, counter: int) -> int:
    ss = np.random.SeedSequence([int(master), stream, counter])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    k: int
    format: str = "instance"
    labels: Optional[str] = None
    M: int = 100
    R: int = 10
    noise_factor: Optional[float] = None
    sigma: Union[str, float] = "auto"
    rel_tol: float = 1e-6
    max_sweeps: int = 50
    restarts: int = 10
    seed: int = 0
    repeat: int = 10
    resample_worlds: bool = False
    row_normalize: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not 1 <= self.R <= self.M:
            raise ValueError(f"need 1 <= R <= M (R={self.R}, M={self.M})")
        if self.M < 2:
            raise ValueError("M must be >= 2 to compare worlds")
        if self.repeat < 1 or self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("repeat, restarts and max_sweeps must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.noise_factor is not None and not self.noise_factor > 0:
            raise ValueError("noise_factor must be positive")
        if self.sigma != "auto":
            if not float(self.sigma) > 0:
                raise ValueError("sigma must be 'auto' or positive")
            object.__setattr__(self, "sigma", float(self.sigma))
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    config: dict
    object_ids: list
    representatives: list
    selection_trace: list
    objective_trace: dict
    assignments: list
    divergence_summary: dict
    repeats: list
    aggregate: Optional[dict]
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def scores(self) -> list:
        return [ScoreReport.from_dict(r["score"]) for r in self.repeats if r["score"] is not None]


class _Stopwatch:
    def __init__(self):
        self.totals = {s: 0.0 for s in STAGES}

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        finally:
            self.totals[name] += time.perf_counter() - start


def _prepare(config: RunConfig):
    ds = load_dataset(config.dataset, config.format, config.labels)
    if config.noise_factor is not None:
        if not ds.is_deterministic_points():
            raise ValueError("noise_factor applies only to datasets with one instance per object")
        ds = gaussianize(ds.base_points(), ds.labels, config.noise_factor, ds.ids).with_labels(
            ds.labels, ds.label_names)
    if config.k > ds.n:
        raise ValueError(f"k={config.k} exceeds the number of objects ({ds.n})")
    return ds


def run_pipeline(config: RunConfig) -> RunReport:
    return execute(config)[0]


def execute(config: RunConfig):
    """Run the pipeline; returns the report and the divergence matrices by world counter."""
    clock = _Stopwatch()
    t0 = time.perf_counter()
    with clock.stage("load"):
        ds = _prepare(config)

    selections = {}

    def select_for(counter):
        if counter not in selections:
            with clock.stage("sample"):
                ens = sample_ensemble(ds, config.M, derive_seed(config.seed, WORLD_STREAM, counter))
            with clock.stage("divergence"):
                div = pairwise_jsd(ens)
            with clock.stage("selection"):
                reps, trace = greedy_selection(div, config.R)
            selections[counter] = (ens, div, reps, trace)
        return selections[counter]

    repeats = []
    for r in range(config.repeat):
        counter = r if config.resample_worlds else 0
        ens, div, reps, steps = select_for(counter)
        cluster_seed = derive_seed(config.seed, CLUSTER_STREAM, r)
        spec = SpectralConfig(sigma=config.sigma, rel_tol=config.rel_tol,
                              max_sweeps=config.max_sweeps, restarts=config.restarts,
                              seed=cluster_seed, row_normalize=config.row_normalize)
        with clock.stage("clustering"):
            labels, trace = consistent_cluster([ens[i] for i in reps], config.k, spec)
        result = None
        if ds.labels is not None:
            with clock.stage("scoring"):
                result = score(labels, ds.labels).to_dict()
        repeats.append({
            "repeat": r,
            "world_seed": derive_seed(config.seed, WORLD_STREAM, counter),
            "cluster_seed": cluster_seed,
            "representatives": [int(i) for i in reps],
            "selection_trace": [dataclasses.asdict(s) for s in steps],
            "divergence_summary": div.summary(),
            "objective_trace": trace.to_dict(),
            "assignments": [int(c) for c in labels],
            "score": result,
        })

    aggregate = None
    if ds.labels is not None:
        accs = np.array([r["score"]["acc"] for r in repeats])
        nmis = np.array([r["score"]["nmi"] for r in repeats])
        aggregate = {"acc_mean": float(accs.mean()), "acc_std": float(accs.std()),
                     "nmi_mean": float(nmis.mean()), "nmi_std": float(nmis.std()),
                     "repeats": len(repeats)}
    timings = dict(clock.totals)
    timings["total"] = time.perf_counter() - t0
    first = repeats[0]
    return RunReport(
        config=config.to_dict(),
        object_ids=list(ds.ids),
        representatives=first["representatives"],
        selection_trace=first["selection_trace"],
        objective_trace=first["objective_trace"],
        assignments=first["assignments"],
        divergence_summary=first["divergence_summary"],
        repeats=repeats,
        aggregate=aggregate,
        timings=timings,
    ), {c: sel[1] for c, sel in selections.items()}


def report_paths(path) -> dict:
    path = Path(path)
    stem = path.with_suffix("") if path.suffix else path
    return {
        "report": path,
        "assignments": stem.with_name(stem.name + ".assignments.csv"),
        "divergences": stem.with_name(stem.name + ".divergences.csv"),
        "trace": stem.with_name(stem.name + ".trace.json"),
    }


def emit_report(report: RunReport, path) -> dict:
    """Write the JSON report and the ``object_id,cluster`` assignments CSV."""
    paths = report_paths(path)
    try:
        paths["report"].write_text(report.to_json() + "\n", encoding="utf-8")
        with paths["assignments"].open("w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["object_id", "cluster"])
            out.writerows(zip(report.object_ids, report.assignments))
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return paths


def load_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
