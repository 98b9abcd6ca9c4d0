"""Seeded K-means and the K-means-- procedure with pluggable distances.

K-means-- jointly fits K clusters and an o-element outlier set: every
iteration ranks each point by the distance to its nearest centroid, removes
the o farthest points from assignment and centroid updates, and refits the
centroids on the surviving inliers. With ``n_outliers=0`` it reduces exactly
to Lloyd's algorithm.

All randomness flows through an explicit integer seed; identical inputs and
seed give identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import as_float_matrix, check_count, check_unit_interval, resolve_seed

OUTLIER = -1


class DistanceKind(Enum):
    """Point-to-centroid distance used by K-means--."""

    SQUARED_EUCLIDEAN = "squared_euclidean"
    GENERALIZED_KL = "generalized_kl"

    @classmethod
    def coerce(cls, value) -> "DistanceKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown distance {value!r}; expected one of "
                f"{[m.value for m in cls]}"
            )


@dataclass(frozen=True)
class LabeledPartition:
    """Per-point labels in {0..K-1}, with OUTLIER (-1) marking removed points."""

    assignments: np.ndarray
    n_clusters: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.ndim != 1:
            raise ValueError("assignments must be a 1-D array")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if a.size and (a.min() < OUTLIER or a.max() >= self.n_clusters):
            raise ValueError("assignments must lie in {0..K-1} or be OUTLIER (-1)")
        object.__setattr__(self, "assignments", a)

    @property
    def n_points(self) -> int:
        return self.assignments.shape[0]

    @property
    def inlier_mask(self) -> np.ndarray:
        return self.assignments != OUTLIER

    @property
    def outlier_indices(self) -> np.ndarray:
        return np.flatnonzero(self.assignments == OUTLIER)

    @property
    def n_outliers(self) -> int:
        return int((self.assignments == OUTLIER).sum())

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments[self.inlier_mask], minlength=self.n_clusters)


@dataclass(frozen=True)
class Centroids:
    """Centroid vectors plus per-centroid member counts.

    For the concatenated binary input of the COR solver the vectors live over
    the unflipped columns only; the flipped half is implicitly 1 - vectors.
    """

    vectors: np.ndarray
    counts: np.ndarray


def _select_largest(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest entries, ranked by value descending
    with ties broken by ascending index. Linear-time selection, no full sort."""
    n = values.shape[0]
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    if count >= n:
        return np.arange(n, dtype=np.int64)
    threshold = np.partition(values, n - count)[n - count]
    above = np.flatnonzero(values > threshold)
    at = np.flatnonzero(values == threshold)
    return np.concatenate([above, at[: count - above.size]])


def _repair_empty_clusters(labels: np.ndarray, d_min: np.ndarray, n_clusters: int) -> None:
    """Move the farthest inlier from a cluster of size >= 2 into each empty
    cluster (ties by ascending index); mutates ``labels`` in place."""
    sizes = np.bincount(labels[labels != OUTLIER], minlength=n_clusters)
    for k in range(n_clusters):
        if sizes[k] > 0:
            continue
        eligible = np.flatnonzero((labels != OUTLIER) & (sizes[np.maximum(labels, 0)] >= 2))
        if eligible.size == 0:
            raise RuntimeError("no donor available to repair an empty cluster")
        dd = d_min[eligible]
        donor = eligible[np.flatnonzero(dd == dd.max())[0]]
        sizes[labels[donor]] -= 1
        labels[donor] = k
        sizes[k] = 1


class _SquaredEuclideanEngine:
    def __init__(self, X: np.ndarray):
        self.X = X
        self.n_points = X.shape[0]
        self._sq = np.einsum("ij,ij->i", X, X)

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self.X[idx].astype(np.float64, copy=True)

    def distances(self, centroids: np.ndarray) -> np.ndarray:
        D = self._sq[:, None] - 2.0 * (self.X @ centroids.T)
        D += np.einsum("ij,ij->i", centroids, centroids)[None, :]
        np.maximum(D, 0.0, out=D)
        return D

    def update(self, labels: np.ndarray, n_clusters: int) -> np.ndarray:
        centroids = np.empty((n_clusters, self.X.shape[1]))
        for k in range(n_clusters):
            centroids[k] = self.X[labels == k].mean(axis=0)
        return centroids

    def inlier_objective(self, labels: np.ndarray, centroids: np.ndarray) -> float:
        inl = labels != OUTLIER
        diff = self.X[inl] - centroids[labels[inl]]
        return float(np.einsum("ij,ij->", diff, diff))


class _GeneralizedKLEngine:
    """Coordinate-wise generalized KL divergence sum(s*log(s/t') - s + t')
    over points with entries in [0, 1]; centroid entries are clamped to
    [epsilon, 1-epsilon] inside the logs."""

    def __init__(self, X: np.ndarray, epsilon: float):
        check_unit_interval(X)
        self.X = X
        self.eps = epsilon
        self.n_points = X.shape[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            xlogx = np.where(X > 0.0, X * np.log(np.where(X > 0.0, X, 1.0)), 0.0)
        self._xlogx = xlogx.sum(axis=1)
        self._rowsum = X.sum(axis=1)

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self.X[idx].astype(np.float64, copy=True)

    def _clamped(self, centroids: np.ndarray) -> np.ndarray:
        return np.clip(centroids, self.eps, 1.0 - self.eps)

    def distances(self, centroids: np.ndarray) -> np.ndarray:
        C = self._clamped(centroids)
        return (
            self._xlogx[:, None]
            - self.X @ np.log(C).T
            - self._rowsum[:, None]
            + C.sum(axis=1)[None, :]
        )

    def update(self, labels: np.ndarray, n_clusters: int) -> np.ndarray:
        centroids = np.empty((n_clusters, self.X.shape[1]))
        for k in range(n_clusters):
            centroids[k] = self.X[labels == k].mean(axis=0)
        return centroids

    def inlier_objective(self, labels: np.ndarray, centroids: np.ndarray) -> float:
        inl = labels != OUTLIER
        C = self._clamped(centroids[labels[inl]])
        rows = self.X[inl]
        return float(
            self._xlogx[inl].sum() - (rows * np.log(C)).sum() - self._rowsum[inl].sum() + C.sum()
        )


def _make_engine(X, distance: DistanceKind, epsilon: float):
    from .partitions import ConcatenatedBinary

    if isinstance(X, ConcatenatedBinary):
        if distance is not DistanceKind.GENERALIZED_KL:
            raise ValueError("the concatenated binary view requires the generalized KL distance")
        from .cor import _ConcatKLEngine

        return _ConcatKLEngine(X, epsilon)
    X = as_float_matrix(X)
    if distance is DistanceKind.SQUARED_EUCLIDEAN:
        return _SquaredEuclideanEngine(X)
    return _GeneralizedKLEngine(X, epsilon)


def _d2_init(engine, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding: first row uniform, each further row drawn
    with probability proportional to its distance to the nearest centroid
    chosen so far (under the engine's own distance)."""
    n = engine.n_points
    chosen = [int(rng.integers(n))]
    weights = engine.distances(engine.rows(np.array(chosen[-1:])))[:, 0]
    weights[chosen[-1]] = 0.0
    for _ in range(1, n_clusters):
        np.maximum(weights, 0.0, out=weights)
        total = weights.sum()
        if total > 0.0:
            pick = int(rng.choice(n, p=weights / total))
        else:  # all remaining points coincide with a centroid
            pick = int(rng.choice(np.setdiff1d(np.arange(n), chosen)))
        chosen.append(pick)
        d_new = engine.distances(engine.rows(np.array(chosen[-1:])))[:, 0]
        np.minimum(weights, d_new, out=weights)
        weights[pick] = 0.0
    return engine.rows(np.array(chosen))


def _kmeans_mm_core(
    engine,
    n_clusters: int,
    n_outliers: int,
    seed: int,
    max_iter: int,
    tol: float,
    objective_fn=None,
    iteration_hook=None,
    init: str = "uniform",
):
    """Shared K-means-- iteration: returns (labels, centroids, counts, trace,
    n_iter, converged). ``objective_fn(labels, centroids)`` overrides the
    traced/stopping quantity (default: sum of inlier distances); ``init`` is
    "uniform" (K distinct rows) or "d2" (distance-weighted seeding)."""
    n = engine.n_points
    rng = np.random.default_rng(seed)
    if init == "d2":
        centroids = _d2_init(engine, n_clusters, rng)
    else:
        centroids = engine.rows(rng.choice(n, size=n_clusters, replace=False))

    trace: list[float] = []
    prev_obj = np.inf
    labels = np.zeros(n, dtype=np.int64)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        D = engine.distances(centroids)
        nearest = np.argmin(D, axis=1)
        d_min = D[np.arange(n), nearest]
        labels = nearest.astype(np.int64)
        labels[_select_largest(d_min, n_outliers)] = OUTLIER
        _repair_empty_clusters(labels, d_min, n_clusters)
        centroids = engine.update(labels, n_clusters)
        if objective_fn is not None:
            obj = float(objective_fn(labels, centroids))
        else:
            obj = engine.inlier_objective(labels, centroids)
        trace.append(obj)
        if iteration_hook is not None:
            iteration_hook(labels.copy(), centroids)
        if prev_obj - obj < tol:
            converged = True
            break
        prev_obj = obj
    counts = np.bincount(labels[labels != OUTLIER], minlength=n_clusters)
    return labels, centroids, counts, trace, iteration, converged


def kmeans_minus_minus(
    X,
    n_clusters: int,
    n_outliers: int,
    distance: DistanceKind = DistanceKind.SQUARED_EUCLIDEAN,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-9,
    epsilon: float = 1e-12,
    n_init: int = 1,
    iteration_hook=None,
):
    """Jointly fit K clusters and an o-element outlier set.

    Per iteration: (i) each point's distance to its nearest centroid is
    computed, (ii) the o largest such distances are marked outliers (ties by
    ascending point index), (iii) remaining points go to their nearest
    centroid (ties to the lowest centroid index), (iv) centroids are refit as
    arithmetic means over inliers only. Centroids are seeded from K distinct
    rows drawn uniformly; clusters that empty out are reseeded at the
    farthest inlier.

    Parameters
    ----------
    X : array-like of shape (n, d) or ConcatenatedBinary
        Input points. The generalized KL distance requires entries in [0, 1];
        the sparse concatenated binary view requires the KL distance.
    n_clusters, n_outliers : int
        K and o, with K + o <= n.
    distance : DistanceKind or str
    seed, max_iter, tol, epsilon : scalars
        Seed for reproducibility, iteration cap, absolute objective-change
        stopping tolerance, and the probability clamp used inside KL logs.
    n_init : int, default=1
        Restarts from that many seeded initializations (seeds derived from
        ``seed``); the run with the lowest final objective wins.
    iteration_hook : callable, optional
        Diagnostic callback ``hook(labels, centroid_vectors)`` invoked after
        every centroid update (for every restart).

    Returns
    -------
    (LabeledPartition, Centroids, list[float])
        Final labels (exactly o outliers), fitted centroids with member
        counts, and the winning run's objective trace (non-increasing).
    """
    distance = DistanceKind.coerce(distance)
    n_clusters = check_count(n_clusters, "n_clusters", minimum=1)
    n_outliers = check_count(n_outliers, "n_outliers", minimum=0)
    check_count(max_iter, "max_iter", minimum=1)
    check_count(n_init, "n_init", minimum=1)
    if tol < 0:
        raise ValueError("tol must be >= 0")
    engine = _make_engine(X, distance, epsilon)
    if n_clusters + n_outliers > engine.n_points:
        raise ValueError(
            f"n_clusters + n_outliers = {n_clusters + n_outliers} exceeds "
            f"n = {engine.n_points}"
        )
    restart_seeds = np.random.default_rng(seed).integers(
        0, np.iinfo(np.int64).max, size=n_init
    )
    best = None
    for restart_seed in restart_seeds:
        candidate = _kmeans_mm_core(
            engine,
            n_clusters,
            n_outliers,
            int(restart_seed),
            max_iter,
            tol,
            iteration_hook=iteration_hook,
        )
        if best is None or candidate[3][-1] < best[3][-1]:
            best = candidate
    labels, vectors, counts, trace, _, _ = best
    return (
        LabeledPartition(labels, n_clusters),
        Centroids(vectors=vectors, counts=counts),
        trace,
    )


def kmeans(
    X, n_clusters: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-9, n_init: int = 1
):
    """Seeded Lloyd K-means with squared Euclidean distance.

    Equivalent to ``kmeans_minus_minus`` with ``n_outliers=0``; returns the
    LabeledPartition only (no OUTLIER labels).
    """
    partition, _, _ = kmeans_minus_minus(
        X, n_clusters, 0, DistanceKind.SQUARED_EUCLIDEAN, seed, max_iter, tol, n_init=n_init
    )
    return partition


class KMeansMinusMinus(BaseEstimator, ClusterMixin):
    """Outlier-aware K-means clusterer (scikit-learn estimator API).

    Fits K clusters while excluding the ``n_outliers`` points farthest from
    their nearest centroid from both assignment and centroid updates. After
    ``fit``, ``labels_`` holds cluster ids with -1 for outliers.

    Parameters
    ----------
    n_clusters : int, default=8
    n_outliers : int, default=0
    distance : {"squared_euclidean", "generalized_kl"}, default="squared_euclidean"
        The generalized KL distance requires feature values in [0, 1].
    max_iter : int, default=100
    tol : float, default=1e-9
        Absolute tolerance on the objective change for convergence.
    epsilon : float, default=1e-12
        Probability clamp applied inside KL logarithms.
    n_init : int, default=1
        Seeded restarts; the lowest-objective run is kept.
    random_state : int, RandomState/Generator or None, default=None

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
    cluster_centers_ : ndarray of shape (n_clusters, d)
    objective_trace_ : list of float
    n_iter_ : int
    converged_ : bool
    """

    def __init__(
        self,
        n_clusters=8,
        n_outliers=0,
        distance="squared_euclidean",
        max_iter=100,
        tol=1e-9,
        epsilon=1e-12,
        n_init=1,
        random_state=None,
    ):
        self.n_clusters = n_clusters
        self.n_outliers = n_outliers
        self.distance = distance
        self.max_iter = max_iter
        self.tol = tol
        self.epsilon = epsilon
        self.n_init = n_init
        self.random_state = random_state

    def fit(self, X, y=None):
        seed = resolve_seed(self.random_state)
        partition, centroids, trace = kmeans_minus_minus(
            X,
            self.n_clusters,
            self.n_outliers,
            distance=self.distance,
            seed=seed,
            max_iter=self.max_iter,
            tol=self.tol,
            epsilon=self.epsilon,
            n_init=self.n_init,
        )
        self.labels_ = partition.assignments
        self.cluster_centers_ = centroids.vectors
        self.cluster_sizes_ = centroids.counts
        self.objective_trace_ = trace
        self.n_iter_ = len(trace)
        self.converged_ = len(trace) < self.max_iter or (
            len(trace) >= 2 and trace[-2] - trace[-1] < self.tol
        )
        self.seed_ = seed
        return self

    def predict(self, X):
        """Assign new points to the nearest fitted centroid (no outlier
        removal is applied to new data)."""
        engine = _make_engine(X, DistanceKind.coerce(self.distance), self.epsilon)
        return np.argmin(engine.distances(self.cluster_centers_), axis=1)
