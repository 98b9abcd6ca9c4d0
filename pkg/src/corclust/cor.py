"""Clustering with Outlier Removal (COR).

The solver clusters the concatenated binary encoding of a basic-partition
ensemble with K-means-- under a generalized KL divergence. Summed over a
binary code row and its implicit complement, that divergence collapses to
binary cross-entropy against clamped centroid probabilities, and minimizing
it is equivalent to minimizing the size-weighted per-cluster holoentropy
(the sum of per-column Shannon entropies) of the surviving inliers. The
traced and convergence-checked quantity is the holoentropy objective itself.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import as_float_matrix, check_count, resolve_seed
from .kmeans import OUTLIER, Centroids, LabeledPartition, _kmeans_mm_core
from .partitions import (
    BasicPartitionSet,
    BinaryEncoding,
    ConcatenatedBinary,
    concat,
    encode,
    generate_bps_rfs,
    generate_bps_rps,
)


def generalized_kl(s, t, epsilon: float = 1e-12):
    """Generalized KL divergence s*log(s/t') - s + t' with t' clamped to
    [epsilon, 1-epsilon] and the convention 0*log(0/x) = 0.

    Accepts scalars or arrays (elementwise); natural logarithm.
    """
    s_arr = np.asarray(s, dtype=np.float64)
    t_clamped = np.clip(np.asarray(t, dtype=np.float64), epsilon, 1.0 - epsilon)
    positive = s_arr > 0.0
    ratio = np.where(positive, s_arr, 1.0) / t_clamped
    value = np.where(positive, s_arr * np.log(ratio), 0.0) - s_arr + t_clamped
    if value.ndim == 0:
        return float(value)
    return value


def point_distance(b_row, centroid, epsilon: float = 1e-12) -> float:
    """Distance from a binary code row (paired with its implicit complement)
    to a centroid probability vector.

    Equals the column sum of generalized_kl(b, m) + generalized_kl(1-b, 1-m),
    which collapses exactly to the binary cross-entropy
    -sum(b*log(m') + (1-b)*log(1-m')) with m' clamped; the closed form is
    what is computed here.
    """
    b = np.asarray(b_row, dtype=np.float64)
    m = np.asarray(centroid, dtype=np.float64)
    if b.shape != m.shape:
        raise ValueError(f"dimension mismatch: row {b.shape} vs centroid {m.shape}")
    mc = np.clip(m, epsilon, 1.0 - epsilon)
    return float(-(b * np.log(mc) + (1.0 - b) * np.log(1.0 - mc)).sum())


def _xlogx(p: np.ndarray) -> np.ndarray:
    return np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)


def _holoentropy_from_active(
    active: np.ndarray, n_columns: int, labels: np.ndarray, n_clusters: int
) -> float:
    """Size-weighted sum of per-cluster column entropies over the inliers."""
    inlier = labels != OUTLIER
    n_in = int(inlier.sum())
    if n_in == 0:
        raise ValueError("no inliers left to evaluate the objective on")
    sizes = np.bincount(labels[inlier], minlength=n_clusters)
    if np.any(sizes == 0):
        raise ValueError("holoentropy objective is undefined for empty clusters")
    total = 0.0
    for k in range(n_clusters):
        members = np.flatnonzero(labels == k)
        p = np.bincount(active[members].ravel(), minlength=n_columns) / members.size
        entropy = -(_xlogx(p) + _xlogx(1.0 - p))
        total += members.size * float(entropy.sum())
    return total / n_in


def _holoentropy_dense(matrix: np.ndarray, labels: np.ndarray, n_clusters: int) -> float:
    inlier = labels != OUTLIER
    n_in = int(inlier.sum())
    if n_in == 0:
        raise ValueError("no inliers left to evaluate the objective on")
    sizes = np.bincount(labels[inlier], minlength=n_clusters)
    if np.any(sizes == 0):
        raise ValueError("holoentropy objective is undefined for empty clusters")
    total = 0.0
    for k in range(n_clusters):
        p = matrix[labels == k].mean(axis=0)
        entropy = -(_xlogx(p) + _xlogx(1.0 - p))
        total += sizes[k] * float(entropy.sum())
    return total / n_in


def holoentropy_objective(encoding, partition: LabeledPartition) -> float:
    """Cluster-size-weighted holoentropy of a partition over a binary matrix.

    Returns sum_k (|C_k|/n_inliers) * sum_j H(p_kj), where p_kj is the
    fraction of cluster-k members with a one in column j and H is the binary
    Shannon entropy (natural log, 0*log 0 = 0). Outlier-labeled points are
    excluded. ``encoding`` may be a BinaryEncoding (the value is invariant
    under flipping since H(p) = H(1-p)) or any dense 0/1 matrix.
    """
    if isinstance(encoding, BinaryEncoding):
        if encoding.n_points != partition.n_points:
            raise ValueError("encoding and partition cover different numbers of points")
        return _holoentropy_from_active(
            encoding.active, encoding.n_columns, partition.assignments, partition.n_clusters
        )
    matrix = np.asarray(encoding, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != partition.n_points:
        raise ValueError("binary matrix and partition cover different numbers of points")
    if not np.isin(matrix, (0.0, 1.0)).all():
        raise ValueError("dense input must be a 0/1 matrix")
    return _holoentropy_dense(matrix, partition.assignments, partition.n_clusters)


class _ConcatKLEngine:
    """K-means-- engine for the sparse [B | flip(B)] view.

    Centroids are probability vectors over the R unflipped columns (the
    flipped half is their complement). The point-centroid distance is the
    binary cross-entropy of `point_distance`, evaluated per centroid as a
    constant minus a sparse gather of log-odds.
    """

    def __init__(self, view: ConcatenatedBinary, epsilon: float):
        self.active = view.active
        self.n_points = view.n_points
        self.n_columns = view.n_half_columns
        self.eps = epsilon

    def rows(self, idx: np.ndarray) -> np.ndarray:
        m = np.zeros((len(idx), self.n_columns))
        m[np.arange(len(idx))[:, None], self.active[idx]] = 1.0
        return m

    def _log_terms(self, centroids: np.ndarray):
        mc = np.clip(centroids, self.eps, 1.0 - self.eps)
        log_m = np.log(mc)
        log_1m = np.log(1.0 - mc)
        return -log_1m.sum(axis=1), log_m - log_1m  # (constant per k, log-odds per k)

    def distances(self, centroids: np.ndarray) -> np.ndarray:
        const, logodds = self._log_terms(centroids)
        D = np.empty((self.n_points, centroids.shape[0]))
        for k in range(centroids.shape[0]):
            D[:, k] = const[k] - logodds[k][self.active].sum(axis=1)
        return D

    def update(self, labels: np.ndarray, n_clusters: int) -> np.ndarray:
        centroids = np.empty((n_clusters, self.n_columns))
        for k in range(n_clusters):
            members = np.flatnonzero(labels == k)
            counts = np.bincount(self.active[members].ravel(), minlength=self.n_columns)
            centroids[k] = counts / members.size
        return centroids

    def inlier_objective(self, labels: np.ndarray, centroids: np.ndarray) -> float:
        const, logodds = self._log_terms(centroids)
        total = 0.0
        for k in range(centroids.shape[0]):
            members = np.flatnonzero(labels == k)
            total += members.size * const[k] - logodds[k][self.active[members]].sum()
        return float(total)


@dataclass(frozen=True)
class CorConfig:
    """Solver configuration: cluster/outlier/ensemble sizes, the generation
    strategy ("rps" or "rfs" with a feature ratio), seed and stopping rule.
    ``n_init`` restarts the solver from that many seeded initializations and
    keeps the lowest-objective result."""

    n_clusters: int
    n_outliers: int
    n_partitions: int = 100
    bp_strategy: str = "rps"
    rfs_ratio: float = 0.5
    seed: int = 0
    max_iter: int = 100
    tol: float = 1e-9
    epsilon: float = 1e-12
    n_init: int = 10

    def __post_init__(self):
        check_count(self.n_clusters, "n_clusters", minimum=1)
        check_count(self.n_outliers, "n_outliers", minimum=0)
        check_count(self.n_partitions, "n_partitions", minimum=1)
        check_count(self.max_iter, "max_iter", minimum=1)
        check_count(self.n_init, "n_init", minimum=1)
        if self.bp_strategy not in ("rps", "rfs"):
            raise ValueError(f"bp_strategy must be 'rps' or 'rfs', got {self.bp_strategy!r}")
        if not 0.0 < self.rfs_ratio <= 1.0:
            raise ValueError("rfs_ratio must lie in (0, 1]")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CorResult:
    """Outcome of a COR run: the labeled partition (exactly o outliers),
    centroids over the unflipped binary columns, the per-iteration
    holoentropy trace, and timing."""

    partition: LabeledPartition
    centroids: Centroids
    objective_trace: list[float]
    n_iter: int
    converged: bool
    config: CorConfig
    wall_ms: float = 0.0
    bp_wall_ms: float = 0.0

    @property
    def labels(self) -> np.ndarray:
        return self.partition.assignments

    @property
    def outlier_indices(self) -> np.ndarray:
        return self.partition.outlier_indices

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "labels": [int(v) for v in self.labels],
            "objective_trace": list(self.objective_trace),
            "iterations": self.n_iter,
            "converged": self.converged,
            "wall_ms": self.wall_ms,
            "bp_wall_ms": self.bp_wall_ms,
        }


def run_cor_from_bps(bps: BasicPartitionSet, config: CorConfig, iteration_hook=None) -> CorResult:
    """Run the COR solver on a pre-built basic-partition ensemble.

    The ensemble is encoded, concatenated with its flip, and clustered by
    K-means-- under the cross-entropy distance, starting from seeded
    distance-weighted row sampling; the traced objective is the holoentropy
    of the current inlier partition, and iteration stops when it changes by
    less than ``config.tol`` or at ``config.max_iter``. Of the
    ``config.n_init`` restarts the lowest-objective one is returned.
    ``config.n_partitions`` must match the ensemble.
    """
    if config.n_partitions != bps.n_partitions:
        raise ValueError(
            f"config.n_partitions = {config.n_partitions} but the ensemble has "
            f"{bps.n_partitions} partitions"
        )
    n = bps.n_points
    if config.n_clusters + config.n_outliers > n:
        raise ValueError("n_clusters + n_outliers exceeds the number of points")

    view = concat(encode(bps, flipped=False), encode(bps, flipped=True))
    engine = _ConcatKLEngine(view, config.epsilon)

    def objective(labels, _centroids):
        return _holoentropy_from_active(engine.active, engine.n_columns, labels, config.n_clusters)

    restart_seeds = np.random.default_rng(config.seed).integers(
        0, np.iinfo(np.int64).max, size=config.n_init
    )
    start = time.perf_counter()
    best = None
    for restart_seed in restart_seeds:
        candidate = _kmeans_mm_core(
            engine,
            config.n_clusters,
            config.n_outliers,
            int(restart_seed),
            config.max_iter,
            config.tol,
            objective_fn=objective,
            iteration_hook=iteration_hook,
            init="d2",
        )
        if best is None or candidate[3][-1] < best[3][-1]:
            best = candidate
    labels, vectors, counts, trace, n_iter, converged = best
    wall_ms = (time.perf_counter() - start) * 1000.0
    return CorResult(
        partition=LabeledPartition(labels, config.n_clusters),
        centroids=Centroids(vectors=vectors, counts=counts),
        objective_trace=trace,
        n_iter=n_iter,
        converged=converged,
        config=config,
        wall_ms=wall_ms,
    )


def run_cor(X, config: CorConfig, iteration_hook=None) -> CorResult:
    """Generate the basic-partition ensemble from raw features and solve.

    Ensemble generation follows ``config.bp_strategy`` seeded by
    ``config.seed``; the solve is performed by ``run_cor_from_bps``.
    """
    X = as_float_matrix(X)
    start = time.perf_counter()
    if config.bp_strategy == "rps":
        bps = generate_bps_rps(X, config.n_partitions, config.n_clusters, seed=config.seed)
    else:
        bps = generate_bps_rfs(
            X, config.n_partitions, config.n_clusters, config.rfs_ratio, seed=config.seed
        )
    bp_wall_ms = (time.perf_counter() - start) * 1000.0
    result = run_cor_from_bps(bps, config, iteration_hook=iteration_hook)
    return CorResult(
        partition=result.partition,
        centroids=result.centroids,
        objective_trace=result.objective_trace,
        n_iter=result.n_iter,
        converged=result.converged,
        config=config,
        wall_ms=result.wall_ms,
        bp_wall_ms=bp_wall_ms,
    )


class COR(BaseEstimator, ClusterMixin):
    """Consensus clustering with joint outlier removal (scikit-learn API).

    Transforms the data into a binary partition space by running several
    seeded K-means basic partitions, then jointly fits ``n_clusters``
    clusters and an ``n_outliers``-element outlier set by K-means-- with a
    KL/cross-entropy distance, minimizing the size-weighted per-cluster
    holoentropy. After ``fit``, ``labels_`` holds cluster ids with -1
    marking outliers (as in DBSCAN).

    Parameters
    ----------
    n_clusters : int, default=2
        Number of clusters K.
    n_outliers : int, default=0
        Number of points o to remove as outliers.
    n_partitions : int, default=100
        Ensemble size r.
    bp_strategy : {"rps", "rfs"}, default="rps"
        Basic-partition generation: random cluster number in {2..2K} over all
        features (rps) or over random feature subsets (rfs).
    rfs_ratio : float, default=0.5
        Fraction of features kept per rfs run (ceil(ratio*d)).
    max_iter : int, default=100
    tol : float, default=1e-9
        Absolute stopping tolerance on the holoentropy objective.
    epsilon : float, default=1e-12
        Probability clamp inside logarithms.
    n_init : int, default=10
        Seeded solver restarts; the lowest-objective run is kept.
    random_state : int, RandomState/Generator or None, default=None

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
        Cluster ids 0..K-1, or -1 for outliers (exactly n_outliers of them).
    cluster_centers_ : ndarray of shape (n_clusters, R)
        Centroid probabilities over the unflipped binary columns.
    objective_trace_ : list of float
        Holoentropy objective per iteration (non-increasing).
    n_iter_ : int
    converged_ : bool
    result_ : CorResult
        Full result record, including the configuration echo.

    Examples
    --------
    >>> from corclust import COR, synth_blobs
    >>> X, truth = synth_blobs(50, 3, 2, 10.0, 5, 40.0, seed=0)
    >>> model = COR(n_clusters=3, n_outliers=5, n_partitions=30, random_state=0).fit(X)
    >>> sorted(model.outlier_indices_) == sorted(truth.outlier_indices)
    True
    """

    def __init__(
        self,
        n_clusters=2,
        n_outliers=0,
        n_partitions=100,
        bp_strategy="rps",
        rfs_ratio=0.5,
        max_iter=100,
        tol=1e-9,
        epsilon=1e-12,
        n_init=10,
        random_state=None,
    ):
        self.n_clusters = n_clusters
        self.n_outliers = n_outliers
        self.n_partitions = n_partitions
        self.bp_strategy = bp_strategy
        self.rfs_ratio = rfs_ratio
        self.max_iter = max_iter
        self.tol = tol
        self.epsilon = epsilon
        self.n_init = n_init
        self.random_state = random_state

    def _config(self, seed: int, n_partitions=None) -> CorConfig:
        return CorConfig(
            n_clusters=self.n_clusters,
            n_outliers=self.n_outliers,
            n_partitions=self.n_partitions if n_partitions is None else n_partitions,
            bp_strategy=self.bp_strategy,
            rfs_ratio=self.rfs_ratio,
            seed=seed,
            max_iter=self.max_iter,
            tol=self.tol,
            epsilon=self.epsilon,
            n_init=self.n_init,
        )

    def _finish(self, result: CorResult):
        self.result_ = result
        self.labels_ = result.labels
        self.outlier_indices_ = result.outlier_indices
        self.cluster_centers_ = result.centroids.vectors
        self.objective_trace_ = list(result.objective_trace)
        self.n_iter_ = result.n_iter
        self.converged_ = result.converged
        return self

    def fit(self, X, y=None):
        """Generate the ensemble from X and fit clusters plus outliers."""
        result = run_cor(X, self._config(resolve_seed(self.random_state)))
        return self._finish(result)

    def fit_from_partitions(self, bps: BasicPartitionSet):
        """Fit from a pre-built (possibly persisted) ensemble instead of raw
        features; ``n_partitions`` is taken from the ensemble."""
        cfg = self._config(resolve_seed(self.random_state), n_partitions=bps.n_partitions)
        return self._finish(run_cor_from_bps(bps, cfg))
