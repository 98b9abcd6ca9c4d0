import itertools

import numpy as np
import pytest

from corclust import DistanceKind, KMeansMinusMinus, kmeans, kmeans_minus_minus
from corclust.kmeans import OUTLIER, _select_largest


def sse_of(points, labels, n_clusters):
    """Independent objective: sum of squared distances to cluster means."""
    total = 0.0
    for k in range(n_clusters):
        members = points[labels == k]
        if len(members):
            total += ((members - members.mean(axis=0)) ** 2).sum()
    return total


def brute_force_kmeans_mm(points, n_clusters, n_outliers):
    """Enumerate every (outlier set, assignment) and return the global
    minimum objective. Feasible for tiny n only."""
    n = len(points)
    best = np.inf
    for out in itertools.combinations(range(n), n_outliers):
        keep = [i for i in range(n) if i not in out]
        for assign in itertools.product(range(n_clusters), repeat=len(keep)):
            if len(set(assign)) < n_clusters:
                continue
            labels = np.full(n, OUTLIER)
            labels[keep] = assign
            best = min(best, sse_of(points, labels, n_clusters))
    return best


class TestKMeans:
    def test_well_separated_pairs_any_seed(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
        for seed in range(8):
            part = kmeans(X, 2, seed=seed)
            assert part.assignments[0] == part.assignments[1]
            assert part.assignments[2] == part.assignments[3]
            assert part.assignments[0] != part.assignments[2]
            assert part.n_outliers == 0

    def test_k_equals_n_gives_zero_objective(self):
        X = np.arange(10.0).reshape(5, 2)
        part = kmeans(X, 5, seed=0)
        assert sse_of(X, part.assignments, 5) == 0.0
        assert sorted(part.assignments) == list(range(5))

    def test_collinear_points_reach_enumerated_optimum(self):
        # all 2-partitions of {0,1,9,10} have min SSE 1.0 ({0,1} | {9,10})
        X = np.array([[0.0], [1.0], [9.0], [10.0]])
        for seed in range(10):
            part = kmeans(X, 2, seed=seed)
            assert sse_of(X, part.assignments, 2) == pytest.approx(1.0, abs=1e-12)

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), 4, seed=0)


class TestKMeansMinusMinus:
    def test_gross_outlier_detected(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0], [100.0, 100.0]])
        for seed in range(8):
            part, centroids, trace = kmeans_minus_minus(X, 2, 1, seed=seed, n_init=10)
            assert part.outlier_indices.tolist() == [4]
            assert part.assignments[0] == part.assignments[1]
            assert part.assignments[2] == part.assignments[3]

    def test_zero_outliers_matches_kmeans(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 3))
        for seed in (0, 3, 9):
            via_mm, _, _ = kmeans_minus_minus(X, 4, 0, seed=seed)
            via_kmeans = kmeans(X, 4, seed=seed)
            assert np.array_equal(via_mm.assignments, via_kmeans.assignments)

    def test_two_triples_plus_far_point(self):
        # global optimum 4.0: clusters {0,1,2} and {50,51,52}, outlier 1000
        X = np.array([[0.0], [1.0], [2.0], [50.0], [51.0], [52.0], [1000.0]])
        assert brute_force_kmeans_mm(X, 2, 1) == pytest.approx(4.0)
        for seed in range(20):
            part, _, trace = kmeans_minus_minus(X, 2, 1, seed=seed, n_init=10)
            assert trace[-1] == pytest.approx(4.0, rel=1e-12)
            assert part.outlier_indices.tolist() == [6]

    def test_exactly_o_outliers_and_counts(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 2))
        part, centroids, _ = kmeans_minus_minus(X, 3, 4, seed=1)
        assert part.n_outliers == 4
        assert part.cluster_sizes.sum() == 26
        assert np.array_equal(centroids.counts, part.cluster_sizes)

    def test_trace_non_increasing_and_centroid_identity(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 4))

        checks = []

        def hook(labels, centroids):
            assert (labels == OUTLIER).sum() == 5  # exactly o at every iteration
            for k in range(3):
                members = X[labels == k]
                checks.append(np.allclose(centroids[k], members.mean(axis=0), rtol=1e-10))

        part, centroids, trace = kmeans_minus_minus(X, 3, 5, seed=7, iteration_hook=hook)
        assert all(checks) and len(checks) >= 3
        diffs = np.diff(trace)
        assert (diffs <= 1e-9).all()
        # final centroids equal the inlier means exactly
        for k in range(3):
            assert np.allclose(centroids.vectors[k], X[part.assignments == k].mean(axis=0))

    def test_seed_determinism(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(50, 3))
        a = kmeans_minus_minus(X, 3, 2, seed=11)
        b = kmeans_minus_minus(X, 3, 2, seed=11)
        assert np.array_equal(a[0].assignments, b[0].assignments)
        assert np.array_equal(a[1].vectors, b[1].vectors)
        assert a[2] == b[2]

    def test_k_plus_o_exceeding_n_rejected(self):
        with pytest.raises(ValueError):
            kmeans_minus_minus(np.zeros((5, 2)), 4, 2, seed=0)

    def test_generalized_kl_requires_unit_interval(self):
        X = np.array([[0.0, 2.0], [1.0, 0.5]])
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            kmeans_minus_minus(X, 1, 0, distance=DistanceKind.GENERALIZED_KL, seed=0)

    def test_generalized_kl_on_unit_data_runs(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(size=(40, 6))
        part, centroids, trace = kmeans_minus_minus(
            X, 3, 3, distance="generalized_kl", seed=2
        )
        assert part.n_outliers == 3
        assert (np.diff(trace) <= 1e-9).all()

    def test_assignment_step_optimal_for_fixed_centroids(self):
        # with centroids held fixed, one assignment + top-o step must reach
        # the brute-force optimum over all exactly-o removals
        rng = np.random.default_rng(8)
        X = rng.normal(size=(9, 2))
        centroids = X[rng.choice(9, size=2, replace=False)]
        o = 2
        D = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
        d_min = D.min(axis=1)
        chosen = _select_largest(d_min, o)
        produced = d_min.sum() - d_min[chosen].sum()
        best = min(
            sum(D[i].min() for i in range(9) if i not in out)
            for out in itertools.combinations(range(9), o)
        )
        assert produced == pytest.approx(best)


class TestSelectLargest:
    def test_simple(self):
        assert sorted(_select_largest(np.array([1.0, 5.0, 3.0, 4.0]), 2)) == [1, 3]

    def test_ties_resolved_by_ascending_index(self):
        values = np.array([2.0, 1.0, 2.0, 2.0, 0.5])
        assert sorted(_select_largest(values, 2)) == [0, 2]

    def test_zero(self):
        assert _select_largest(np.array([1.0, 2.0]), 0).size == 0


class TestEstimator:
    def test_fit_predict_and_params(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(size=(20, 2)), rng.normal(loc=8.0, size=(20, 2))])
        model = KMeansMinusMinus(n_clusters=2, n_outliers=2, random_state=0)
        labels = model.fit_predict(X)
        assert labels.shape == (40,)
        assert (labels == OUTLIER).sum() == 2
        assert model.cluster_centers_.shape == (2, 2)
        params = model.get_params()
        assert params["n_clusters"] == 2 and params["n_outliers"] == 2

    def test_sklearn_clone_compatible(self):
        from sklearn.base import clone

        model = KMeansMinusMinus(n_clusters=3, n_outliers=1, random_state=42)
        cloned = clone(model)
        assert cloned.get_params() == model.get_params()

    def test_predict_assigns_nearest(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
        model = KMeansMinusMinus(n_clusters=2, n_outliers=0, random_state=0).fit(X)
        pred = model.predict(np.array([[0.2, 0.3], [9.8, 10.4]]))
        assert pred[0] == model.labels_[0]
        assert pred[1] == model.labels_[2]
