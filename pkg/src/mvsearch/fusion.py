"""Early- and late-fusion combinators for multi-view matching.

Early fusion collapses a set of view feature vectors into one vector
before any distance is computed.  Late fusion computes the full grid of
pairwise view distances first and then reduces that grid to a single
object-level distance.
"""

from enum import Enum

import numpy as np

from .core import STORAGE_DTYPE, l2_normalize
from .errors import (
    DimensionMismatchError,
    EmptyMatrixError,
    EmptyViewSetError,
    UnknownStrategyError,
)

# Clamp for inverse-distance weights: a zero pairwise distance (an exact
# duplicate image) must dominate the weighting, not divide by zero.
IWAVG_EPSILON = 1e-9


class FusionStrategy(Enum):
    """The nine ranking strategies, addressable by their CLI names."""

    SINGLE = "single"
    EF_MAX = "ef-max"
    EF_AVG = "ef-avg"
    LF_MIN = "lf-min"
    LF_AVG = "lf-avg"
    LF_WAVG = "lf-wavg"
    LF_IWAVG = "lf-iwavg"
    LF_MIN_AVG = "lf-min-avg"
    LF_MIN_WAVG = "lf-min-wavg"

    @property
    def cli_name(self) -> str:
        return self.value

    @property
    def is_early(self) -> bool:
        return self in (FusionStrategy.EF_MAX, FusionStrategy.EF_AVG)

    @property
    def is_late(self) -> bool:
        return self in (
            FusionStrategy.LF_MIN,
            FusionStrategy.LF_AVG,
            FusionStrategy.LF_WAVG,
            FusionStrategy.LF_IWAVG,
            FusionStrategy.LF_MIN_AVG,
            FusionStrategy.LF_MIN_WAVG,
        )

    @classmethod
    def parse(cls, name: str) -> "FusionStrategy":
        try:
            return cls(name)
        except ValueError:
            raise UnknownStrategyError(
                f"unknown strategy {name!r}; valid names: {', '.join(STRATEGY_NAMES)}"
            ) from None


ALL_STRATEGIES = tuple(FusionStrategy)
STRATEGY_NAMES = tuple(s.value for s in ALL_STRATEGIES)
LATE_STRATEGIES = tuple(s for s in ALL_STRATEGIES if s.is_late)
EARLY_STRATEGIES = tuple(s for s in ALL_STRATEGIES if s.is_early)


def as_view_set(views) -> np.ndarray:
    """Coerce to a nonempty (n_views, dim) float32 matrix."""
    try:
        mat = np.asarray(views, dtype=STORAGE_DTYPE)
    except ValueError:
        raise DimensionMismatchError("views have inconsistent dimensionality") from None
    if mat.ndim == 1 and mat.size == 0 or mat.ndim == 2 and mat.shape[0] == 0:
        raise EmptyViewSetError("view set is empty")
    if mat.ndim != 2 or mat.shape[1] < 1:
        raise DimensionMismatchError(f"expected an (n_views, dim) matrix, got shape {mat.shape}")
    return mat


def early_fuse(views, mode: FusionStrategy, renormalize: bool = False) -> np.ndarray:
    """Collapse a view set into one vector by componentwise max or mean.

    Averages are accumulated in float64 and stored back as float32.  With
    ``renormalize`` the fused vector is L2-normalized afterwards; by
    default it is used as-is, unit length or not.
    """
    mat = as_view_set(views)
    if mode is FusionStrategy.EF_MAX:
        fused = mat.max(axis=0)
    elif mode is FusionStrategy.EF_AVG:
        fused = mat.astype(np.float64).mean(axis=0).astype(STORAGE_DTYPE)
    else:
        raise UnknownStrategyError(f"{mode.value!r} is not an early-fusion mode")
    if renormalize:
        fused = l2_normalize(fused)
    return fused


def pairwise_distances(query_views, object_views) -> np.ndarray:
    """All pairwise Euclidean distances between two view sets.

    Returns an (M, N) float64 matrix with entry (i, j) equal to
    euclidean_distance(query_views[i], object_views[j]).
    """
    q = as_view_set(query_views).astype(np.float64)
    o = as_view_set(object_views).astype(np.float64)
    if q.shape[1] != o.shape[1]:
        raise DimensionMismatchError(
            f"dimension mismatch: query views have dim {q.shape[1]}, "
            f"object views have dim {o.shape[1]}"
        )
    diff = q[:, None, :] - o[None, :, :]
    return np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))


def _as_distance_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise EmptyMatrixError(f"expected a nonempty 2-D distance matrix, got shape {m.shape}")
    return m


def late_fuse(matrix, mode: FusionStrategy, literal_minwavg: bool = False) -> float:
    """Reduce an M x N pairwise-distance grid to one object-level distance.

    Weighted modes compute their normalized weights explicitly and then
    sum weight * distance, so a 1 x 1 matrix [[d]] returns d bit-exactly
    under every mode.

    ``literal_minwavg`` switches LF_MIN_WAVG from weighting per-row
    minima (the default) to weighting per-row maxima.
    """
    m = _as_distance_matrix(matrix)
    if mode is FusionStrategy.LF_MIN:
        return float(m.min())
    if mode is FusionStrategy.LF_AVG:
        return float(m.mean())
    if mode is FusionStrategy.LF_WAVG:
        total = m.sum()
        if total == 0.0:
            return 0.0
        w = m / total
        return float((m * w).sum())
    if mode is FusionStrategy.LF_IWAVG:
        inv = 1.0 / np.maximum(m, IWAVG_EPSILON)
        w = inv / inv.sum()
        return float((m * w).sum())
    if mode is FusionStrategy.LF_MIN_AVG:
        return float(m.min(axis=1).mean())
    if mode is FusionStrategy.LF_MIN_WAVG:
        rows = m.max(axis=1) if literal_minwavg else m.min(axis=1)
        total = rows.sum()
        if total == 0.0:
            return 0.0
        w = rows / total
        return float((rows * w).sum())
    raise UnknownStrategyError(f"{mode.value!r} is not a late-fusion mode")
