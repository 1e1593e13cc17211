"""Vector primitives: unit-length normalization and Euclidean distance.

Feature vectors are stored as float32 (the precision of the feature
files); distance sums are accumulated in float64 so that high-dimensional
vectors do not suffer accumulation drift.
"""

import numpy as np

from .errors import DimensionMismatchError, ZeroVectorError

STORAGE_DTYPE = np.float32

# Norms below this are treated as degenerate descriptors.
ZERO_NORM_THRESHOLD = 1e-12

# Vectors whose norm is already within this tolerance of 1 pass through
# normalization unchanged.  This makes normalization idempotent at the
# bit level: normalized feature files survive load/normalize/save cycles
# byte-identically.
UNIT_TOLERANCE = 1e-6


def as_feature_vector(values) -> np.ndarray:
    """Coerce to a 1-D float32 feature vector, validating shape and finiteness."""
    v = np.asarray(values, dtype=STORAGE_DTYPE)
    if v.ndim != 1 or v.size < 1:
        raise DimensionMismatchError(
            f"feature vector must be 1-D with at least one value, got shape {v.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector contains non-finite values")
    return v


def normalize_rows(mat) -> np.ndarray:
    """L2-normalize each row of a 2-D float32 matrix.

    Rows already unit length within UNIT_TOLERANCE are returned bit-exact;
    other rows are divided by their float64 norm and rounded back to
    float32.  Raises ZeroVectorError if any row norm falls below
    ZERO_NORM_THRESHOLD.
    """
    out = np.array(mat, dtype=STORAGE_DTYPE)
    if out.ndim != 2 or out.shape[1] < 1:
        raise DimensionMismatchError(f"expected a 2-D matrix of vectors, got shape {out.shape}")
    m64 = out.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", m64, m64))
    if np.any(norms < ZERO_NORM_THRESHOLD):
        idx = int(np.argmax(norms < ZERO_NORM_THRESHOLD))
        raise ZeroVectorError(f"vector {idx} has near-zero norm {norms[idx]:.3e}")
    fix = np.abs(norms - 1.0) > UNIT_TOLERANCE
    if np.any(fix):
        out[fix] = (m64[fix] / norms[fix, None]).astype(STORAGE_DTYPE)
    return out


def l2_normalize(v) -> np.ndarray:
    """Scale a vector to unit Euclidean norm.

    The output is a positive scalar multiple of the input.  Inputs whose
    norm is already 1 within UNIT_TOLERANCE are returned unchanged.
    """
    return normalize_rows(as_feature_vector(v)[None, :])[0]


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two equal-length vectors.

    Differences and the sum of squares are computed in float64 regardless
    of the input dtype.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.sqrt(np.einsum("i,i->", d, d)))
