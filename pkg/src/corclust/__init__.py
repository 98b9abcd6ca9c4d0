"""corclust: consensus clustering with joint outlier removal.

The COR estimator re-encodes data as the one-hot matrix of a basic-partition
ensemble and runs K-means-- with a KL/cross-entropy distance on that binary
space together with its complement coding, producing K clusters and an
o-element outlier set that minimize a size-weighted per-cluster holoentropy.
"""

from .cor import (
    COR,
    CorConfig,
    CorResult,
    generalized_kl,
    holoentropy_objective,
    point_distance,
    run_cor,
    run_cor_from_bps,
)
from .dataset import (
    CsvFormatError,
    DataMatrix,
    GroundTruth,
    load_csv,
    prepare_ground_truth,
    synth_blobs,
)
from .kmeans import (
    OUTLIER,
    Centroids,
    DistanceKind,
    KMeansMinusMinus,
    LabeledPartition,
    kmeans,
    kmeans_minus_minus,
)
from .metrics import (
    ContingencyTable,
    EvalReport,
    contingency,
    evaluate,
    nmi,
    outlier_f_measure,
    outlier_jaccard,
    rand_normalized,
    score,
)
from .partitions import (
    BasicPartitionSet,
    BinaryEncoding,
    ConcatenatedBinary,
    concat,
    encode,
    generate_bps_rfs,
    generate_bps_rps,
    load_bps,
    save_bps,
)

__version__ = "0.1.0"

__all__ = [
    "COR",
    "CorConfig",
    "CorResult",
    "generalized_kl",
    "holoentropy_objective",
    "point_distance",
    "run_cor",
    "run_cor_from_bps",
    "CsvFormatError",
    "DataMatrix",
    "GroundTruth",
    "load_csv",
    "prepare_ground_truth",
    "synth_blobs",
    "OUTLIER",
    "Centroids",
    "DistanceKind",
    "KMeansMinusMinus",
    "LabeledPartition",
    "kmeans",
    "kmeans_minus_minus",
    "ContingencyTable",
    "EvalReport",
    "contingency",
    "evaluate",
    "nmi",
    "outlier_f_measure",
    "outlier_jaccard",
    "rand_normalized",
    "score",
    "BasicPartitionSet",
    "BinaryEncoding",
    "ConcatenatedBinary",
    "concat",
    "encode",
    "generate_bps_rfs",
    "generate_bps_rps",
    "load_bps",
    "save_bps",
    "__version__",
]
