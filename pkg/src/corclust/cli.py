"""Command-line harness: experiment orchestration, ensemble persistence,
label-file evaluation and synthetic data generation.

Subcommands: ``run`` (multi-seed experiment with a JSON report), ``gen-bps``
(persist a basic-partition ensemble), ``eval`` (score prediction label files
against truth label files, -1 = outlier) and ``synth`` (write a synthetic
blobs-plus-outliers dataset).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cor import CorConfig, run_cor
from .dataset import load_csv, prepare_ground_truth, synth_blobs
from .kmeans import OUTLIER, DistanceKind, kmeans_minus_minus
from .metrics import evaluate
from .partitions import generate_bps_rfs, generate_bps_rps, save_bps

CONFIG_DEFAULTS = {
    "dataset": None,
    "label_col": None,
    "n_smallest_classes": 1,
    "method": "cor",  # cor | kmeans_baseline | kmeansmm_baseline
    "k": None,  # default: true cluster count
    "o": None,  # default: true outlier count
    "r": 100,
    "strategy": "rps",
    "ratio": 0.5,
    "runs": 1,
    "seed": 0,
    "out": None,
    "scale_features": False,
    "max_iter": 100,
    "tol": 1e-9,
    "epsilon": 1e-12,
    "n_init": 10,
    "write_labels": False,
}

METHODS = ("cor", "kmeans_baseline", "kmeansmm_baseline")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _parse_label_col(value):
    if value is None:
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        return str(value)


def _min_max_scale(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (X - lo) / span


def _load_config(args) -> dict:
    config = dict(CONFIG_DEFAULTS)
    if args.config is not None:
        with open(args.config) as fh:
            file_config = json.load(fh)
        unknown = set(file_config) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(file_config)
    for key in CONFIG_DEFAULTS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            config[key] = flag_value
    config["label_col"] = _parse_label_col(config["label_col"])
    if config["method"] not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {config['method']!r}")
    if int(config["runs"]) < 1:
        raise ValueError("runs must be >= 1")
    return config


def _smallest_cluster_as_outliers(labels: np.ndarray, n_clusters: int) -> np.ndarray:
    """Relabel the smallest cluster (ties to the lowest id) as the outlier
    set and renumber the rest 0..K-2."""
    sizes = np.bincount(labels, minlength=n_clusters)
    smallest = int(np.argmin(sizes))
    out = np.empty_like(labels)
    new_id = 0
    remap = {}
    for k in range(n_clusters):
        if k == smallest:
            continue
        remap[k] = new_id
        new_id += 1
    for i, lab in enumerate(labels):
        out[i] = OUTLIER if lab == smallest else remap[int(lab)]
    return out


def _execute_run(method: str, X: np.ndarray, k: int, o: int, config: dict, seed: int):
    """One seeded run; returns (labels, objective_trace, iterations, bp_wall_ms)."""
    if method == "cor":
        result = run_cor(
            X,
            CorConfig(
                n_clusters=k,
                n_outliers=o,
                n_partitions=int(config["r"]),
                bp_strategy=config["strategy"],
                rfs_ratio=float(config["ratio"]),
                seed=seed,
                max_iter=int(config["max_iter"]),
                tol=float(config["tol"]),
                epsilon=float(config["epsilon"]),
                n_init=int(config["n_init"]),
            ),
        )
        return result.labels, list(result.objective_trace), result.n_iter, result.bp_wall_ms
    if method == "kmeansmm_baseline":
        partition, _, trace = kmeans_minus_minus(
            X,
            k,
            o,
            DistanceKind.SQUARED_EUCLIDEAN,
            seed=seed,
            max_iter=int(config["max_iter"]),
            tol=float(config["tol"]),
            n_init=int(config["n_init"]),
        )
        return partition.assignments, trace, len(trace), 0.0
    # kmeans_baseline: true cluster count plus one, smallest cluster = outliers
    partition, _, trace = kmeans_minus_minus(
        X,
        k + 1,
        0,
        DistanceKind.SQUARED_EUCLIDEAN,
        seed=seed,
        max_iter=int(config["max_iter"]),
        tol=float(config["tol"]),
        n_init=int(config["n_init"]),
    )
    labels = _smallest_cluster_as_outliers(partition.assignments, k + 1)
    return labels, trace, len(trace), 0.0


def _write_labels_csv(labels: np.ndarray, path: Path) -> None:
    with open(path, "w") as fh:
        for value in labels:
            fh.write(f"{int(value)}\n")


def cmd_run(args) -> int:
    try:
        config = _load_config(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(str(exc))
    if config["dataset"] is None:
        return _fail("a dataset path is required (config 'dataset' or --dataset)")
    if config["label_col"] is None:
        return _fail("a label column is required to evaluate against ground truth")
    try:
        matrix, raw_labels = load_csv(
            config["dataset"], label_column=config["label_col"], has_header=args.header
        )
        truth = prepare_ground_truth(raw_labels, int(config["n_smallest_classes"]))
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    X = matrix.values
    if config["scale_features"]:
        X = _min_max_scale(X)
    k = int(config["k"]) if config["k"] is not None else truth.n_clusters
    o = int(config["o"]) if config["o"] is not None else truth.n_outliers

    runs = []
    wall_ms = []
    bp_wall_ms = []
    failure = None
    for i in range(int(config["runs"])):
        seed = int(config["seed"]) + i
        start = time.perf_counter()
        try:
            labels, trace, iterations, bp_ms = _execute_run(config["method"], X, k, o, config, seed)
        except Exception as exc:  # flush completed runs with a failure marker
            failure = f"run {i} (seed {seed}) failed: {exc}"
            break
        wall_ms.append((time.perf_counter() - start) * 1000.0)
        bp_wall_ms.append(bp_ms)
        report = evaluate(labels, truth)
        runs.append(
            {
                "seed": seed,
                "metrics": report.to_dict(),
                "objective_trace": trace,
                "iterations": iterations,
            }
        )
        if config["write_labels"] and config["out"] is not None:
            out = Path(config["out"])
            _write_labels_csv(labels, out.parent / f"{out.stem}_run{i}_labels.csv")

    aggregate = {}
    for metric in ("nmi", "rn", "jaccard", "f_measure"):
        if runs:
            values = np.array([r["metrics"][metric] for r in runs])
            aggregate[metric] = {"mean": float(values.mean()), "std": float(values.std())}
        else:
            aggregate[metric] = {"mean": None, "std": None}

    report = {
        "config": {**config, "k": k, "o": o},
        "runs": runs,
        "aggregate": aggregate,
        "timing": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_ms": wall_ms,
            "bp_wall_ms": bp_wall_ms,
        },
    }
    if failure is not None:
        report["failed"] = True
        report["error"] = failure

    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if config["out"] is not None:
        Path(config["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if failure is not None:
        return _fail(failure)
    return 0


def cmd_gen_bps(args) -> int:
    try:
        matrix, _ = load_csv(
            args.dataset, label_column=_parse_label_col(args.label_col), has_header=args.header
        )
        X = matrix.values
        if args.scale_features:
            X = _min_max_scale(X)
        if args.strategy == "rps":
            bps = generate_bps_rps(X, args.r, args.k, seed=args.seed)
        else:
            bps = generate_bps_rfs(X, args.r, args.k, args.ratio, seed=args.seed)
        save_bps(bps, args.out)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    return 0


def _read_label_file(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(float(line)))
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: cannot parse label {line!r}")
    if not values:
        raise ValueError(f"{path}: no labels found")
    return np.array(values, dtype=np.int64)


def cmd_eval(args) -> int:
    try:
        pred = _read_label_file(args.pred)
        truth = _read_label_file(args.truth)
        if pred.shape != truth.shape:
            raise ValueError(
                f"label files are misaligned: {pred.shape[0]} vs {truth.shape[0]} rows"
            )
        report = evaluate(pred, truth)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    sys.stdout.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_synth(args) -> int:
    try:
        matrix, truth = synth_blobs(
            args.n_per_cluster,
            args.k,
            args.d,
            args.sep,
            args.o,
            args.outlier_scale,
            seed=args.seed,
        )
    except ValueError as exc:
        return _fail(str(exc))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row, label in zip(matrix.values, truth.labels):
            name = "outlier" if label == OUTLIER else f"c{label}"
            writer.writerow([repr(float(v)) for v in row] + [name])
    if args.labels_out is not None:
        _write_labels_csv(truth.labels, Path(args.labels_out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corclust",
        description="Consensus clustering with joint outlier removal (COR).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-seed experiment and write a JSON report")
    run.add_argument("--config", help="JSON config file; flags override its fields")
    run.add_argument("--dataset", help="CSV dataset path")
    run.add_argument("--label-col", dest="label_col", help="label column index or header name")
    run.add_argument("--header", action="store_true", help="dataset has a header row")
    run.add_argument("--n-smallest-classes", dest="n_smallest_classes", type=int)
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--k", type=int, help="cluster count (default: true count)")
    run.add_argument("--o", type=int, help="outlier count (default: true count)")
    run.add_argument("--r", type=int, help="basic partitions per run")
    run.add_argument("--strategy", choices=("rps", "rfs"))
    run.add_argument("--ratio", type=float, help="feature ratio for rfs")
    run.add_argument("--runs", type=int, help="number of seeded runs")
    run.add_argument("--seed", type=int, help="master seed; run i uses seed + i")
    run.add_argument("--max-iter", dest="max_iter", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--n-init", dest="n_init", type=int, help="solver restarts per run")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument(
        "--scale-features",
        dest="scale_features",
        action="store_const",
        const=True,
        default=None,
        help="min-max scale features to [0, 1] first",
    )
    run.add_argument(
        "--write-labels",
        dest="write_labels",
        action="store_const",
        const=True,
        default=None,
        help="also write per-run label CSVs next to the report",
    )
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen-bps", help="generate and persist a basic-partition ensemble")
    gen.add_argument("--dataset", required=True)
    gen.add_argument("--label-col", dest="label_col", default=None)
    gen.add_argument("--header", action="store_true")
    gen.add_argument("--r", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--strategy", choices=("rps", "rfs"), default="rps")
    gen.add_argument("--ratio", type=float, default=0.5)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scale-features", dest="scale_features", action="store_true")
    gen.add_argument("--out", required=True, help="CSV path; a .json sidecar is written alongside")
    gen.set_defaults(func=cmd_gen_bps)

    ev = sub.add_parser("eval", help="score a prediction label file against a truth label file")
    ev.add_argument("pred", help="predicted labels, one per line, -1 = outlier")
    ev.add_argument("truth", help="ground-truth labels, one per line, -1 = outlier")
    ev.set_defaults(func=cmd_eval)

    synth = sub.add_parser("synth", help="write a synthetic blobs-plus-outliers CSV")
    synth.add_argument("--n-per-cluster", dest="n_per_cluster", type=int, required=True)
    synth.add_argument("--k", type=int, required=True)
    synth.add_argument("--d", type=int, required=True)
    synth.add_argument("--sep", type=float, required=True)
    synth.add_argument("--o", type=int, required=True)
    synth.add_argument("--outlier-scale", dest="outlier_scale", type=float, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="dataset CSV (last column = class name)")
    synth.add_argument("--labels-out", dest="labels_out", help="also write -1-coded truth labels")
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
