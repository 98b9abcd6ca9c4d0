"""Dataset ingestion, ground-truth preparation and synthetic data generation.

The loader reads plain CSV (optional single header row, decimal-point reals)
and returns a dense feature matrix plus, when a label column is selected, the
raw labels as strings. Ground truth for joint clustering + outlier detection
is derived by declaring the smallest classes to be the outlier set.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count


@dataclass(frozen=True)
class DataMatrix:
    """Dense n x d real-valued feature matrix with optional row identifiers."""

    values: np.ndarray
    row_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"data matrix must be 2-D and non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.row_ids is not None:
            ids = tuple(self.row_ids)
            if len(ids) != values.shape[0]:
                raise ValueError("row_ids length does not match number of rows")
            if len(set(ids)) != len(ids):
                raise ValueError("row_ids must be unique")
            object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """Reference labels for evaluation: class ids 0..K-1 for inliers, -1 for
    outliers, plus a boolean outlier mask."""

    labels: np.ndarray
    outlier_mask: np.ndarray
    n_clusters: int
    n_outliers: int
    class_names: tuple[str, ...] = field(default=())
    outlier_classes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        mask = np.asarray(self.outlier_mask, dtype=bool)
        if labels.shape != mask.shape or labels.ndim != 1:
            raise ValueError("labels and outlier_mask must be 1-D arrays of equal length")
        if int(mask.sum()) != self.n_outliers:
            raise ValueError("outlier_mask does not contain exactly n_outliers true entries")
        inlier_classes = np.unique(labels[~mask])
        if self.n_clusters > 0 and not np.array_equal(inlier_classes, np.arange(self.n_clusters)):
            raise ValueError("inlier labels must span exactly 0..K-1")
        if np.any(labels[mask] != -1):
            raise ValueError("outlier rows must carry label -1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "outlier_mask", mask)

    @property
    def outlier_indices(self) -> np.ndarray:
        return np.flatnonzero(self.outlier_mask)


class CsvFormatError(ValueError):
    """Raised when a CSV cell or row cannot be interpreted; the message names
    the offending 1-based row and column."""


def _resolve_label_column(label_column, header: list[str] | None, n_cols: int) -> int:
    if isinstance(label_column, str):
        if header is None:
            raise CsvFormatError(
                f"label column {label_column!r} given by name but the file has no header"
            )
        try:
            return header.index(label_column)
        except ValueError:
            raise CsvFormatError(f"label column {label_column!r} not found in header {header}")
    idx = int(label_column)
    if idx < 0:
        idx += n_cols
    if not 0 <= idx < n_cols:
        raise CsvFormatError(f"label column index {label_column} out of range for {n_cols} columns")
    return idx


def load_csv(path, label_column=None, has_header: bool = False):
    """Load a CSV file into a DataMatrix.

    Parameters
    ----------
    path : str or Path
        File to read.
    label_column : int, str or None
        Column (index, or header name when ``has_header``) holding class
        labels. Excluded from the feature matrix and returned verbatim as
        strings. None means every column is a feature.
    has_header : bool
        Whether the first row is a header.

    Returns
    -------
    (DataMatrix, list[str] | None)
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if has_header:
        if not rows:
            raise CsvFormatError(f"{path}: empty file, expected a header row")
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    else:
        header = None
    rows = [r for r in rows if r]  # drop blank lines
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")

    n_cols = len(rows[0])
    label_idx = None
    if label_column is not None:
        label_idx = _resolve_label_column(label_column, header, n_cols)
    if n_cols - (0 if label_idx is None else 1) < 1:
        raise CsvFormatError(f"{path}: no feature columns left after excluding the label column")

    data = np.empty((len(rows), n_cols - (0 if label_idx is None else 1)), dtype=np.float64)
    labels: list[str] | None = [] if label_idx is not None else None
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise CsvFormatError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {n_cols} (ragged rows)"
            )
        j_out = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                labels.append(cell.strip())
                continue
            try:
                value = float(cell)
            except ValueError:
                raise CsvFormatError(f"{path}: row {i + 1}, column {j + 1}: cannot parse {cell!r}")
            if not math.isfinite(value):
                raise CsvFormatError(
                    f"{path}: row {i + 1}, column {j + 1}: non-finite value {cell!r}"
                )
            data[i, j_out] = value
            j_out += 1
    return DataMatrix(data), labels


def prepare_ground_truth(raw_labels, n_smallest_classes: int = 1) -> GroundTruth:
    """Declare the smallest classes to be outliers and renumber the rest.

    The ``n_smallest_classes`` classes with the fewest members form the
    outlier set; ties in class size are broken by ascending lexicographic
    class name. The surviving classes are renumbered 0..K-1 in ascending
    name order.
    """
    n_smallest_classes = check_count(n_smallest_classes, "n_smallest_classes", minimum=1)
    names = [str(x) for x in raw_labels]
    counts = Counter(names)
    if len(counts) < n_smallest_classes + 1:
        raise ValueError(
            f"need at least {n_smallest_classes + 1} distinct classes, got {len(counts)}"
        )
    by_size = sorted(counts, key=lambda c: (counts[c], c))
    outlier_classes = set(by_size[:n_smallest_classes])
    kept = sorted(c for c in counts if c not in outlier_classes)
    mapping = {c: i for i, c in enumerate(kept)}

    labels = np.array([-1 if c in outlier_classes else mapping[c] for c in names], dtype=np.int64)
    mask = labels == -1
    return GroundTruth(
        labels=labels,
        outlier_mask=mask,
        n_clusters=len(kept),
        n_outliers=int(mask.sum()),
        class_names=tuple(kept),
        outlier_classes=tuple(sorted(outlier_classes)),
    )


def synth_blobs(
    n_per_cluster: int,
    n_clusters: int,
    n_features: int,
    cluster_sep: float,
    n_outliers: int,
    outlier_scale: float,
    seed: int,
):
    """Generate isotropic Gaussian blobs (unit std) plus far outliers.

    Cluster centers are placed pairwise at least ``cluster_sep`` apart;
    outliers land on a random-direction shell whose distance to *every*
    center is at least ``outlier_scale``. Output is a pure function of the
    arguments, including the seed.

    Returns
    -------
    (DataMatrix, GroundTruth)
        Rows are ordered cluster 0 block, ..., cluster K-1 block, outliers.
    """
    n_per_cluster = check_count(n_per_cluster, "n_per_cluster", minimum=1)
    K = check_count(n_clusters, "n_clusters", minimum=1)
    d = check_count(n_features, "n_features", minimum=1)
    o = check_count(n_outliers, "n_outliers", minimum=0)
    if not outlier_scale > cluster_sep:
        raise ValueError("outlier_scale must exceed cluster_sep")

    rng = np.random.default_rng(seed)
    box = cluster_sep * max(K, 2)
    centers = np.empty((K, d))
    placed = 0
    for _ in range(1000 * K):
        cand = rng.uniform(0.0, box, size=d)
        if placed == 0 or np.min(np.linalg.norm(centers[:placed] - cand, axis=1)) >= cluster_sep:
            centers[placed] = cand
            placed += 1
            if placed == K:
                break
    if placed < K:
        raise ValueError(
            f"could not place {K} centers at separation {cluster_sep} in {d} dims "
            "after bounded retries"
        )

    points = np.concatenate(
        [center + rng.standard_normal((n_per_cluster, d)) for center in centers]
    )
    labels = np.repeat(np.arange(K), n_per_cluster)

    if o > 0:
        mean_center = centers.mean(axis=0)
        spread = float(np.max(np.linalg.norm(centers - mean_center, axis=1)))
        radii = rng.uniform(outlier_scale + spread, 2.0 * (outlier_scale + spread), size=o)
        dirs = rng.standard_normal((o, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        outliers = mean_center + radii[:, None] * dirs
        points = np.concatenate([points, outliers])
        labels = np.concatenate([labels, np.full(o, -1, dtype=np.int64)])

    mask = labels == -1
    truth = GroundTruth(
        labels=labels,
        outlier_mask=mask,
        n_clusters=K,
        n_outliers=o,
        class_names=tuple(str(k) for k in range(K)),
        outlier_classes=("outlier",) if o else (),
    )
    return DataMatrix(points), truth
