"""Multi-view object retrieval: fusion strategies, index, evaluation."""

from .core import euclidean_distance, l2_normalize, normalize_rows
from .errors import (
    DanglingReferenceError,
    DimensionMismatchError,
    DuplicateObjectIdError,
    EmptyDatabaseError,
    EmptyListError,
    EmptyMatrixError,
    EmptyViewSetError,
    FormatError,
    InvalidConfigError,
    LengthMismatchError,
    MissingGroundTruthError,
    MvsError,
    OutOfRangeError,
    UnknownStrategyError,
    ZeroVectorError,
)
from .evaluation import (
    EvalReport,
    StrategyResult,
    average_precision,
    evaluate,
    interpolated_curve,
    precision_at_k,
    write_report,
)
from .fusion import (
    ALL_STRATEGIES,
    STRATEGY_NAMES,
    FusionStrategy,
    early_fuse,
    late_fuse,
    pairwise_distances,
)
from .index import (
    Database,
    ObjectRecord,
    Query,
    RankedItem,
    build_database,
    load_index,
    load_query_file,
    load_query_set,
    rank,
    read_features,
    save_index,
    write_features,
)
from .synthgen import SynthConfig, SynthDataset, generate, write_dataset

__version__ = "0.1.0"

__all__ = [
    "ALL_STRATEGIES",
    "Database",
    "DanglingReferenceError",
    "DimensionMismatchError",
    "DuplicateObjectIdError",
    "EmptyDatabaseError",
    "EmptyListError",
    "EmptyMatrixError",
    "EmptyViewSetError",
    "EvalReport",
    "FormatError",
    "FusionStrategy",
    "InvalidConfigError",
    "LengthMismatchError",
    "MissingGroundTruthError",
    "MvsError",
    "ObjectRecord",
    "OutOfRangeError",
    "Query",
    "RankedItem",
    "STRATEGY_NAMES",
    "StrategyResult",
    "SynthConfig",
    "SynthDataset",
    "UnknownStrategyError",
    "ZeroVectorError",
    "average_precision",
    "build_database",
    "early_fuse",
    "euclidean_distance",
    "evaluate",
    "generate",
    "interpolated_curve",
    "l2_normalize",
    "late_fuse",
    "load_index",
    "load_query_file",
    "load_query_set",
    "normalize_rows",
    "pairwise_distances",
    "precision_at_k",
    "rank",
    "read_features",
    "save_index",
    "write_dataset",
    "write_features",
]
