"""Basic-partition ensembles and their sparse binary encodings.

An ensemble of r label vectors over the same n points is re-encoded as an
n x R one-hot block matrix (R = sum of per-partition cluster counts), stored
sparsely as one active column index per partition per row. The flipped
encoding is the elementwise complement and is never materialized densely;
the concatenation of the two serves as input to the KL K-means-- solver.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import ceil
from pathlib import Path

import numpy as np

from ._validation import as_float_matrix, check_count
from .kmeans import kmeans


@dataclass(frozen=True)
class BasicPartitionSet:
    """r label vectors over n points with per-partition cluster counts."""

    labels: np.ndarray  # (n, r) int
    cluster_counts: tuple[int, ...]
    strategy: str = "unspecified"
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ValueError("labels must be a non-empty (n, r) array")
        counts = tuple(int(k) for k in self.cluster_counts)
        if len(counts) != labels.shape[1]:
            raise ValueError("cluster_counts must have one entry per partition")
        for i, k in enumerate(counts):
            column = labels[:, i]
            if column.min() < 0 or column.max() >= k:
                raise ValueError(f"partition {i} has labels outside 0..{k - 1}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cluster_counts", counts)

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]

    @property
    def n_partitions(self) -> int:
        return self.labels.shape[1]

    @property
    def total_columns(self) -> int:
        return sum(self.cluster_counts)


def _compact_labels(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel so that only non-empty clusters are counted, 0..K_i-1."""
    uniq, compact = np.unique(raw, return_inverse=True)
    return compact.astype(np.int64), len(uniq)


def _draw_run_plan(rng: np.random.Generator, r: int, n_clusters: int):
    """Per-run cluster numbers from {2..2K} and derived per-run seeds."""
    ks = rng.integers(2, 2 * n_clusters + 1, size=r)
    run_seeds = rng.integers(0, np.iinfo(np.int64).max, size=r)
    return ks, run_seeds


def generate_bps_rps(X, r: int, n_clusters: int, seed: int = 0) -> BasicPartitionSet:
    """Random-parameter-selection ensemble: r seeded K-means runs whose
    cluster numbers are drawn uniformly from {2..2K}."""
    X = as_float_matrix(X)
    r = check_count(r, "r", minimum=1)
    n_clusters = check_count(n_clusters, "n_clusters", minimum=1)
    if 2 * n_clusters > X.shape[0]:
        raise ValueError(f"2K = {2 * n_clusters} exceeds n = {X.shape[0]}")
    rng = np.random.default_rng(seed)
    ks, run_seeds = _draw_run_plan(rng, r, n_clusters)

    labels = np.empty((X.shape[0], r), dtype=np.int64)
    counts = []
    for i in range(r):
        part = kmeans(X, int(ks[i]), seed=int(run_seeds[i]))
        labels[:, i], k_i = _compact_labels(part.assignments)
        counts.append(k_i)
    return BasicPartitionSet(
        labels,
        tuple(counts),
        strategy="rps",
        seed=int(seed),
        params={"cluster_numbers": [int(k) for k in ks], "run_seeds": [int(s) for s in run_seeds]},
    )


def generate_bps_rfs(X, r: int, n_clusters: int, ratio: float, seed: int = 0) -> BasicPartitionSet:
    """Random-feature-selection ensemble: each run clusters a random subset
    of ceil(ratio * d) features, cluster number drawn from {2..2K}."""
    X = as_float_matrix(X)
    r = check_count(r, "r", minimum=1)
    n_clusters = check_count(n_clusters, "n_clusters", minimum=1)
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must lie in (0, 1]")
    d = X.shape[1]
    n_feat = ceil(ratio * d)
    if n_feat < 1:
        raise ValueError("ratio selects no features")
    if 2 * n_clusters > X.shape[0]:
        raise ValueError(f"2K = {2 * n_clusters} exceeds n = {X.shape[0]}")
    rng = np.random.default_rng(seed)
    ks, run_seeds = _draw_run_plan(rng, r, n_clusters)
    feature_sets = [np.sort(rng.choice(d, size=n_feat, replace=False)) for _ in range(r)]

    labels = np.empty((X.shape[0], r), dtype=np.int64)
    counts = []
    for i in range(r):
        part = kmeans(X[:, feature_sets[i]], int(ks[i]), seed=int(run_seeds[i]))
        labels[:, i], k_i = _compact_labels(part.assignments)
        counts.append(k_i)
    return BasicPartitionSet(
        labels,
        tuple(counts),
        strategy="rfs",
        seed=int(seed),
        params={
            "ratio": float(ratio),
            "n_features_per_run": int(n_feat),
            "cluster_numbers": [int(k) for k in ks],
            "run_seeds": [int(s) for s in run_seeds],
            "feature_sets": [[int(f) for f in fs] for fs in feature_sets],
        },
    )


@dataclass(frozen=True)
class BinaryEncoding:
    """Sparse one-hot block encoding of a partition ensemble.

    ``active`` holds, per row, the r column indices that are 1 in the
    unflipped matrix. With ``flipped=True`` the object denotes the
    elementwise complement (those columns are the zeros), so unflipped rows
    sum to r and flipped rows to R - r.
    """

    active: np.ndarray  # (n, r) column indices into 0..R-1
    cluster_counts: tuple[int, ...]
    flipped: bool = False

    @property
    def n_points(self) -> int:
        return self.active.shape[0]

    @property
    def n_partitions(self) -> int:
        return self.active.shape[1]

    @property
    def n_columns(self) -> int:
        return sum(self.cluster_counts)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_points, self.n_columns), dtype=np.float64)
        dense[np.arange(self.n_points)[:, None], self.active] = 1.0
        return 1.0 - dense if self.flipped else dense

    def to_partitions(self) -> BasicPartitionSet:
        """Recover the label vectors (the encoding is invertible)."""
        offsets = np.concatenate([[0], np.cumsum(self.cluster_counts)[:-1]])
        return BasicPartitionSet(self.active - offsets[None, :], self.cluster_counts)


def encode(bps: BasicPartitionSet, flipped: bool = False) -> BinaryEncoding:
    """One-hot encode an ensemble; ``flipped=True`` yields the complement
    coding (zeros exactly where the unflipped coding has ones)."""
    offsets = np.concatenate([[0], np.cumsum(bps.cluster_counts)[:-1]]).astype(np.int64)
    active = bps.labels + offsets[None, :]
    return BinaryEncoding(active=active, cluster_counts=bps.cluster_counts, flipped=bool(flipped))


@dataclass(frozen=True)
class ConcatenatedBinary:
    """Logical (n, 2R) matrix [unflipped | flipped], stored as the shared
    sparse active-column indices (only R of the 2R entries per row are ones).
    Accepted directly by ``kmeans_minus_minus`` with the KL distance."""

    active: np.ndarray
    cluster_counts: tuple[int, ...]

    @property
    def n_points(self) -> int:
        return self.active.shape[0]

    @property
    def n_half_columns(self) -> int:
        return sum(self.cluster_counts)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, 2 * self.n_half_columns)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_points, self.n_half_columns), dtype=np.float64)
        dense[np.arange(self.n_points)[:, None], self.active] = 1.0
        return np.hstack([dense, 1.0 - dense])


def concat(b: BinaryEncoding, b_flipped: BinaryEncoding) -> ConcatenatedBinary:
    """Join an encoding and its flip into the concatenated solver input.

    Both operands must come from the same ensemble; passing the flags
    swapped or encodings of different provenance is an error.
    """
    if b.flipped or not b_flipped.flipped:
        raise ValueError("concat expects (unflipped, flipped) encodings in that order")
    if (
        b.cluster_counts != b_flipped.cluster_counts
        or b.active.shape != b_flipped.active.shape
        or not np.array_equal(b.active, b_flipped.active)
    ):
        raise ValueError("encodings do not derive from the same basic partitions")
    return ConcatenatedBinary(active=b.active, cluster_counts=b.cluster_counts)


def save_bps(bps: BasicPartitionSet, path) -> None:
    """Write the ensemble as CSV (n rows x r label columns) plus a JSON
    sidecar (same stem, .json) recording cluster counts, strategy and seeds."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in bps.labels:
            writer.writerow([int(v) for v in row])
    sidecar = {
        "n": bps.n_points,
        "r": bps.n_partitions,
        "cluster_counts": list(bps.cluster_counts),
        "strategy": bps.strategy,
        "seed": bps.seed,
        "params": bps.params,
    }
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bps(path) -> BasicPartitionSet:
    path = Path(path)
    labels = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    with open(path.with_suffix(".json")) as fh:
        sidecar = json.load(fh)
    return BasicPartitionSet(
        labels,
        tuple(sidecar["cluster_counts"]),
        strategy=sidecar.get("strategy", "unspecified"),
        seed=sidecar.get("seed"),
        params=sidecar.get("params", {}),
    )
