"""Command line entry point: ``rpclust run`` and ``rpclust make-blobs``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .pipeline import PipelineError, RunConfig, emit_report, execute, report_paths
from .uncertain import points_dataset, write_dataset

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_KEYS = {"resample_worlds", "row_normalize"}
_INT_KEYS = {"k", "M", "R", "max_sweeps", "restarts", "seed", "repeat"}
_FLOAT_KEYS = {"noise_factor", "rel_tol"}


def _coerce(key, raw):
    if key in _BOOL_KEYS:
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in {"1", "true", "yes", "on"}:
            return True
        if low in {"0", "false", "no", "off"}:
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key == "sigma":
        return raw if str(raw) == "auto" else float(raw)
    return str(raw)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, keys may use dashes."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}, line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ValueError(f"{path}, line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _add_run(sub):
    p = sub.add_parser("run", help="cluster an uncertain dataset")
    p.add_argument("--config", help="key = value file; command line flags override it")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=["instance", "gaussian"])
    p.add_argument("--labels")
    p.add_argument("--k", type=int)
    p.add_argument("--M", type=int, help="number of sampled possible worlds (default 100)")
    p.add_argument("--R", type=int, help="number of representative worlds (default 10)")
    p.add_argument("--noise-factor", type=float,
                   help="gaussianize single-instance objects with this fraction of each "
                        "attribute's standard deviation")
    p.add_argument("--sigma", help="kernel width, or 'auto'")
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--max-sweeps", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeat", type=int)
    p.add_argument("--resample-worlds", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--row-normalize", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--output", "-o", default="rpc_report.json")
    p.add_argument("--dump-divergences", action="store_true",
                   help="also write the world-by-world JSD matrix as CSV")
    p.add_argument("--dump-trace", action="store_true",
                   help="also write selection and objective traces as JSON")
    p.set_defaults(func=cmd_run)


def _add_blobs(sub):
    p = sub.add_parser("make-blobs", help="write a labelled Gaussian-blob point dataset")
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--centers", type=int, default=3)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=8.0,
                   help="distance between neighbouring centres, in blob stddevs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", required=True, help="instance CSV to write")
    p.add_argument("--labels-output", required=True)
    p.set_defaults(func=cmd_blobs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpclust",
                                     description="Representative possible-world clustering")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_blobs(sub)
    return parser


def config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in _FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _coerce(key, v)
    missing = [k for k in ("dataset", "k") if k not in values]
    if missing:
        raise ValueError(f"missing required settings: {', '.join(missing)}")
    return RunConfig(**values)


def cmd_run(args) -> int:
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    try:
        report, divergences = execute(config)
    except PipelineError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 1
    try:
        paths = emit_report(report, args.output)
        if args.dump_divergences:
            divergences[0].to_csv(paths["divergences"])
        if args.dump_trace:
            trace = {"selection": report.selection_trace, "objective": report.objective_trace,
                     "repeats": [{"repeat": r["repeat"], "objective": r["objective_trace"]}
                                 for r in report.repeats]}
            paths["trace"].write_text(json.dumps(trace, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error [report]: {exc}", file=sys.stderr)
        return 1
    print(f"representatives: {report.representatives}")
    print(f"objective sweeps: {report.objective_trace['sweeps']} "
          f"(converged={report.objective_trace['converged']})")
    if report.aggregate:
        a = report.aggregate
        print(f"ACC {a['acc_mean']:.4f} +/- {a['acc_std']:.4f}   "
              f"NMI {a['nmi_mean']:.4f} +/- {a['nmi_std']:.4f}   over {a['repeats']} repeats")
    print(f"report: {paths['report']}")
    return 0


def make_blobs(n=150, centers=3, dim=2, separation=8.0, seed=0):
    """Isotropic unit-variance blobs with centres ``separation`` apart along a line."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % centers
    offsets = np.zeros((centers, dim))
    offsets[:, 0] = separation * np.arange(centers)
    return offsets[labels] + rng.standard_normal((n, dim)), labels


def cmd_blobs(args) -> int:
    pts, labels = make_blobs(args.n, args.centers, args.dim, args.separation, args.seed)
    ds = points_dataset(pts, labels, ids=[f"o{i}" for i in range(len(pts))])
    write_dataset(ds, args.output, labels_path=args.labels_output)
    print(f"wrote {len(pts)} objects to {args.output}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
