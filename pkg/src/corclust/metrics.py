"""External validity metrics for joint clustering and outlier detection.

Predicted outliers are treated as one extra predicted group and ground-truth
outliers as one extra truth group, so NMI and the normalized Rand index score
the full joint task; the outlier set itself is additionally scored by Jaccard
and F-measure. All logarithms are natural and 0*log 0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GroundTruth
from .kmeans import OUTLIER, LabeledPartition


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts between predicted groups (rows) and ground-truth
    groups (columns)."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.size == 0:
            raise ValueError("contingency counts must form a non-empty 2-D array")
        if counts.min() < 0:
            raise ValueError("contingency counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _group_index(labels: np.ndarray) -> np.ndarray:
    """Map labels to contiguous group ids; -1 (outlier) becomes the last
    group when present."""
    labels = np.asarray(labels, dtype=np.int64)
    outlier = labels == OUTLIER
    clusters = np.unique(labels[~outlier])
    out = np.searchsorted(clusters, labels)
    out[outlier] = len(clusters)
    return out


def _as_label_array(obj) -> np.ndarray:
    if isinstance(obj, LabeledPartition):
        return obj.assignments
    if isinstance(obj, GroundTruth):
        return obj.labels
    return np.asarray(obj, dtype=np.int64)


def contingency(pred, truth) -> ContingencyTable:
    """Build the contingency table between a prediction and the ground truth.

    Accepts LabeledPartition / GroundTruth / plain label arrays where -1
    marks outliers; the outlier group, when present, is appended as an extra
    row (prediction side) or column (truth side).
    """
    p = _as_label_array(pred)
    t = _as_label_array(truth)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} predicted vs {t.shape[0]} truth labels")
    pi = _group_index(p)
    ti = _group_index(t)
    n_rows = int(pi.max()) + 1
    n_cols = int(ti.max()) + 1
    counts = np.zeros((n_rows, n_cols), dtype=np.int64)
    np.add.at(counts, (pi, ti), 1)
    return ContingencyTable(counts)


def nmi(table: ContingencyTable) -> float:
    """Normalized mutual information: mutual information over the geometric
    mean of the marginal entropies.

    When either marginal entropy is zero the value is 0 by convention,
    except that two identical single-group partitions score 1.
    """
    counts = table.counts.astype(np.float64)
    n = counts.sum()
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    rows_nz = rows[rows > 0]
    cols_nz = cols[cols > 0]
    h_rows = -np.sum(rows_nz * np.log(rows_nz / n))
    h_cols = -np.sum(cols_nz * np.log(cols_nz / n))
    if h_rows <= 0.0 or h_cols <= 0.0:
        return 1.0 if (len(rows_nz) == 1 and len(cols_nz) == 1) else 0.0
    nz = counts > 0
    i, j = np.nonzero(nz)
    mi = np.sum(counts[nz] * np.log(n * counts[nz] / (rows[i] * cols[j])))
    return float(np.clip(mi / np.sqrt(h_rows * h_cols), 0.0, 1.0))


def rand_normalized(table: ContingencyTable) -> float:
    """Normalized (adjusted-for-chance) Rand index from binomial pair counts.

    Bounded above by 1; can be negative for worse-than-chance agreement.
    Returns 1 when the expected-agreement denominator vanishes (both
    partitions trivial and identical).
    """

    def comb2(x):
        return x * (x - 1) / 2.0

    counts = table.counts.astype(np.float64)
    n = counts.sum()
    if n < 2:
        raise ValueError("the normalized Rand index needs at least 2 points")
    sum_cells = comb2(counts).sum()
    sum_rows = comb2(counts.sum(axis=1)).sum()
    sum_cols = comb2(counts.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(n)
    denom = 0.5 * (sum_rows + sum_cols) - expected
    if denom == 0.0:
        return 1.0
    return float((sum_cells - expected) / denom)


def _as_index_set(obj) -> set:
    if isinstance(obj, LabeledPartition):
        return set(obj.outlier_indices.tolist())
    if isinstance(obj, GroundTruth):
        return set(obj.outlier_indices.tolist())
    return set(int(i) for i in obj)


def outlier_jaccard(pred_outliers, true_outliers) -> float:
    """|intersection| / |union| of the two outlier sets; 1 when both empty."""
    p = _as_index_set(pred_outliers)
    t = _as_index_set(true_outliers)
    if not p and not t:
        return 1.0
    return len(p & t) / len(p | t)


def outlier_f_measure(pred_outliers, true_outliers) -> float:
    """Harmonic mean of precision and recall of the predicted outlier set;
    0 when precision + recall is 0, 1 when both sets are empty."""
    p = _as_index_set(pred_outliers)
    t = _as_index_set(true_outliers)
    if not p and not t:
        return 1.0
    if not p or not t:
        return 0.0
    tp = len(p & t)
    precision = tp / len(p)
    recall = tp / len(t)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score(values, as_percent: bool = False):
    """Cross-dataset score: per algorithm, the sum over datasets of its value
    divided by the best value on that dataset.

    ``values`` is an (algorithms x datasets) matrix of a positive metric.
    Datasets whose best value is <= 0 are skipped. With ``as_percent`` the
    result is rescaled by 100 / number of counted datasets, so an algorithm
    that is best everywhere scores 100.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("values must be a non-empty (algorithms x datasets) matrix")
    col_max = values.max(axis=0)
    counted = col_max > 0.0
    if not counted.any():
        raise ValueError("no dataset has a positive best value")
    totals = (values[:, counted] / col_max[counted]).sum(axis=1)
    if as_percent:
        totals = 100.0 * totals / counted.sum()
    return totals


@dataclass(frozen=True)
class EvalReport:
    """The four joint-task metrics for one prediction."""

    nmi: float
    rn: float
    jaccard: float
    f_measure: float

    def to_dict(self) -> dict:
        return {
            "nmi": self.nmi,
            "rn": self.rn,
            "jaccard": self.jaccard,
            "f_measure": self.f_measure,
        }


def evaluate(pred, truth) -> EvalReport:
    """All four metrics for a prediction against the ground truth (labels may
    be LabeledPartition/GroundTruth or plain arrays with -1 for outliers)."""
    table = contingency(pred, truth)
    p = _as_label_array(pred)
    t = _as_label_array(truth)
    return EvalReport(
        nmi=nmi(table),
        rn=rand_normalized(table),
        jaccard=outlier_jaccard(np.flatnonzero(p == OUTLIER), np.flatnonzero(t == OUTLIER)),
        f_measure=outlier_f_measure(np.flatnonzero(p == OUTLIER), np.flatnonzero(t == OUTLIER)),
    )
