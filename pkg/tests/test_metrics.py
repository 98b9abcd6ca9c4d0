import math

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score

from corclust import (
    ContingencyTable,
    contingency,
    evaluate,
    nmi,
    outlier_f_measure,
    outlier_jaccard,
    rand_normalized,
    score,
)
from corclust.dataset import prepare_ground_truth
from corclust.kmeans import LabeledPartition


def nmi_oracle(table):
    """Direct loop evaluation of the count-based formula."""
    table = [list(map(float, row)) for row in table]
    n = sum(sum(r) for r in table)
    ni = [sum(r) for r in table]
    nj = [sum(table[i][j] for i in range(len(table))) for j in range(len(table[0]))]
    numerator = 0.0
    for i in range(len(table)):
        for j in range(len(table[0])):
            if table[i][j] > 0:
                numerator += table[i][j] * math.log(n * table[i][j] / (ni[i] * nj[j]))
    h_rows = sum(x * math.log(x / n) for x in ni if x > 0)
    h_cols = sum(x * math.log(x / n) for x in nj if x > 0)
    return numerator / math.sqrt(h_rows * h_cols)


def rn_oracle(table):
    """Direct binomial-pair-count evaluation."""

    def c2(x):
        return x * (x - 1) / 2.0

    n = sum(sum(r) for r in table)
    ni = [sum(r) for r in table]
    nj = [sum(table[i][j] for i in range(len(table))) for j in range(len(table[0]))]
    s_cells = sum(c2(v) for r in table for v in r)
    s_rows = sum(c2(v) for v in ni)
    s_cols = sum(c2(v) for v in nj)
    expected = s_rows * s_cols / c2(n)
    return (s_cells - expected) / (0.5 * (s_rows + s_cols) - expected)


def random_table(rng, max_groups=5, n=60):
    rows = rng.integers(2, max_groups + 1)
    cols = rng.integers(2, max_groups + 1)
    a = rng.integers(0, rows, size=n)
    b = rng.integers(0, cols, size=n)
    counts = np.zeros((rows, cols), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    keep_r = counts.sum(axis=1) > 0
    keep_c = counts.sum(axis=0) > 0
    return counts[keep_r][:, keep_c], a, b


class TestContingency:
    def test_identity_is_diagonal(self):
        labels = np.array([0, 0, 1, 1, -1])
        table = contingency(labels, labels)
        assert np.array_equal(table.counts, np.diag([2, 2, 1]))

    def test_single_predicted_cluster(self):
        table = contingency(np.zeros(4, dtype=int), np.array([0, 0, 0, 1]))
        assert np.array_equal(table.counts, [[3, 1]])

    def test_outlier_groups_appended(self):
        pred = np.array([0, 0, 1, -1])
        truth = np.array([0, 0, 1, -1])
        table = contingency(pred, truth)
        assert np.array_equal(table.counts, np.diag([2, 1, 1]))

    def test_accepts_partition_and_ground_truth(self):
        part = LabeledPartition(np.array([0, 0, 1, -1]), 2)
        truth = prepare_ground_truth(["a", "a", "b", "z"], 1)
        table = contingency(part, truth)
        assert table.n == 4 and table.counts.shape == (3, 3)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            contingency(np.zeros(3, dtype=int), np.zeros(4, dtype=int))


class TestNmi:
    def test_identical_partitions(self):
        assert nmi(ContingencyTable(np.diag([3, 2, 4]))) == pytest.approx(1.0)

    def test_independent_partitions(self):
        assert nmi(ContingencyTable(np.full((2, 2), 5))) == pytest.approx(0.0, abs=1e-12)

    def test_three_by_two_table(self):
        # direct formula evaluation gives 2/sqrt(6)
        table = ContingencyTable(np.array([[2, 0], [0, 1], [0, 1]]))
        expected = nmi_oracle([[2, 0], [0, 1], [0, 1]])
        assert expected == pytest.approx(2.0 / math.sqrt(6.0))
        assert nmi(table) == pytest.approx(expected, abs=1e-12)

    def test_single_group_conventions(self):
        assert nmi(ContingencyTable(np.array([[4]]))) == 1.0
        assert nmi(ContingencyTable(np.array([[2, 2]]))) == 0.0

    def test_matches_oracle_and_sklearn_on_random_tables(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            counts, a, b = random_table(rng)
            mine = nmi(ContingencyTable(counts))
            assert mine == pytest.approx(nmi_oracle(counts.tolist()), abs=1e-10)
            theirs = normalized_mutual_info_score(a, b, average_method="geometric")
            assert mine == pytest.approx(theirs, abs=1e-10)

    def test_transpose_symmetry_and_relabeling(self):
        rng = np.random.default_rng(1)
        counts, _, _ = random_table(rng)
        table = ContingencyTable(counts)
        assert nmi(table) == pytest.approx(nmi(ContingencyTable(counts.T)), abs=1e-12)
        perm = rng.permutation(counts.shape[0])
        assert nmi(ContingencyTable(counts[perm])) == pytest.approx(nmi(table), abs=1e-12)


class TestRandNormalized:
    def test_identical_partitions(self):
        assert rand_normalized(ContingencyTable(np.diag([2, 1, 1]))) == pytest.approx(1.0)

    def test_uniform_two_by_two(self):
        assert rand_normalized(ContingencyTable(np.array([[1, 1], [1, 1]]))) == pytest.approx(-0.5)

    def test_single_cluster_vs_balanced_truth(self):
        assert rand_normalized(ContingencyTable(np.array([[5, 5]]))) <= 0.0

    def test_matches_oracle_and_sklearn_on_random_tables(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            counts, a, b = random_table(rng)
            mine = rand_normalized(ContingencyTable(counts))
            assert mine == pytest.approx(rn_oracle(counts.tolist()), abs=1e-10)
            assert mine == pytest.approx(adjusted_rand_score(a, b), abs=1e-10)

    def test_transpose_symmetry(self):
        counts = np.array([[4, 1, 0], [0, 3, 2]])
        a = rand_normalized(ContingencyTable(counts))
        b = rand_normalized(ContingencyTable(counts.T))
        assert a == pytest.approx(b, abs=1e-12)


class TestOutlierSets:
    def test_identical_sets(self):
        assert outlier_jaccard({1, 2, 3}, {1, 2, 3}) == 1.0
        assert outlier_f_measure({1, 2, 3}, {1, 2, 3}) == 1.0

    def test_disjoint_sets(self):
        assert outlier_jaccard({1}, {2}) == 0.0
        assert outlier_f_measure({1}, {2}) == 0.0

    def test_partial_overlap(self):
        pred = set(range(10))
        true = set(range(4, 14))
        assert outlier_jaccard(pred, true) == pytest.approx(6.0 / 14.0)
        assert outlier_f_measure(pred, true) == pytest.approx(0.6)

    def test_both_empty(self):
        assert outlier_jaccard(set(), set()) == 1.0
        assert outlier_f_measure(set(), set()) == 1.0

    def test_one_empty(self):
        assert outlier_jaccard(set(), {1}) == 0.0
        assert outlier_f_measure({1}, set()) == 0.0

    def test_f_equals_2j_over_1_plus_j(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            size = int(rng.integers(1, 20))
            universe = np.arange(60)
            pred = set(rng.choice(universe, size=size, replace=False).tolist())
            true = set(rng.choice(universe, size=size, replace=False).tolist())
            j = outlier_jaccard(pred, true)
            f = outlier_f_measure(pred, true)
            assert f == pytest.approx(2.0 * j / (1.0 + j))
            assert f >= j


class TestScore:
    def test_single_algorithm(self):
        assert score([[0.4, 0.2, 0.9]]).tolist() == pytest.approx([3.0])

    def test_column_normalization(self):
        assert score([[1.0, 2.0], [2.0, 4.0]]).tolist() == pytest.approx([1.0, 2.0])

    def test_best_everywhere_scores_dataset_count(self):
        values = [[3.0, 5.0, 2.0], [1.0, 4.0, 1.0]]
        assert score(values)[0] == pytest.approx(3.0)
        assert score(values, as_percent=True)[0] == pytest.approx(100.0)

    def test_non_positive_columns_skipped(self):
        values = [[1.0, 0.0], [0.5, -1.0]]
        assert score(values).tolist() == pytest.approx([1.0, 0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            score(np.empty((0, 0)))


class TestEvaluate:
    def test_perfect_prediction(self):
        truth = prepare_ground_truth(["a", "a", "b", "b", "z"], 1)
        report = evaluate(truth.labels, truth)
        assert report.nmi == pytest.approx(1.0)
        assert report.rn == pytest.approx(1.0)
        assert report.jaccard == 1.0 and report.f_measure == 1.0

    def test_no_predicted_outliers(self):
        truth = prepare_ground_truth(["a", "a", "b", "b", "z"], 1)
        pred = np.array([0, 0, 1, 1, 1])
        report = evaluate(pred, truth)
        assert report.jaccard == 0.0 and report.f_measure == 0.0
