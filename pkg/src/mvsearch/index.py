"""Object database, binary persistence, and the exhaustive ranking engine.

File formats, little-endian throughout:

MVF1 feature file
    offset  0   4 bytes   magic b"MVF1"
    offset  4   u32       version (1)
    offset  8   u32       dim
    offset 12   u64       view_count
    offset 20   records   view_count x (u64 object_index, dim x f32)

MVI1 index file
    offset  0   4 bytes   magic b"MVI1"
    offset  4   u32       version (1)
    offset  8   u64       manifest_length
    offset 16   bytes     manifest JSON (UTF-8)
    then        bytes     embedded MVF1 payload, including its header

Manifest JSON:
    {"dim": <int>, "objects": [{"id": <str>, "category": <str>,
     "views": [<image path>, ...]}, ...]}

Feature records reference objects by their position in "objects".  The
canonical writers emit records grouped per object in manifest order; the
reader tolerates interleaved records and assigns views in encounter
order.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import STORAGE_DTYPE, normalize_rows
from .errors import (
    DanglingReferenceError,
    DimensionMismatchError,
    DuplicateObjectIdError,
    EmptyDatabaseError,
    EmptyViewSetError,
    FormatError,
    UnknownStrategyError,
)
from .fusion import IWAVG_EPSILON, FusionStrategy, early_fuse

MVF_MAGIC = b"MVF1"
MVI_MAGIC = b"MVI1"
FORMAT_VERSION = 1

_MVF_HEADER = struct.Struct("<4sIIQ")
_MVI_HEADER = struct.Struct("<4sIQ")

# Row block size for the distance kernel; 256 x 1024 float64 is a 2 MB
# scratch buffer, small enough to stay cache-resident.
_CHUNK_ROWS = 256


# ---------------------------------------------------------------------------
# MVF1 feature payload


def features_to_bytes(dim: int, object_indices, vectors) -> bytes:
    """Serialize feature records to an MVF1 payload."""
    vecs = np.ascontiguousarray(vectors, dtype="<f4")
    idx = np.asarray(object_indices, dtype="<u8")
    if vecs.ndim != 2 or vecs.shape[1] != dim:
        raise DimensionMismatchError(f"feature matrix shape {vecs.shape} does not match dim {dim}")
    if idx.shape != (vecs.shape[0],):
        raise DanglingReferenceError("one object index required per feature record")
    record = np.dtype([("object_index", "<u8"), ("vector", "<f4", (dim,))])
    records = np.empty(vecs.shape[0], dtype=record)
    records["object_index"] = idx
    records["vector"] = vecs
    return _MVF_HEADER.pack(MVF_MAGIC, FORMAT_VERSION, dim, vecs.shape[0]) + records.tobytes()


def features_from_bytes(buf: bytes, base_offset: int = 0):
    """Parse an MVF1 payload into (dim, object_indices, vectors).

    ``base_offset`` shifts reported error offsets when the payload is
    embedded in a larger file.
    """
    if len(buf) < _MVF_HEADER.size:
        raise FormatError(
            f"truncated MVF1 header: need {_MVF_HEADER.size} bytes, have {len(buf)}",
            base_offset + len(buf),
        )
    magic, version, dim, count = _MVF_HEADER.unpack_from(buf, 0)
    if magic != MVF_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MVF_MAGIC!r}", base_offset)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported MVF1 version {version}", base_offset + 4)
    if dim < 1:
        raise FormatError(f"invalid dim {dim}", base_offset + 8)
    record = np.dtype([("object_index", "<u8"), ("vector", "<f4", (dim,))])
    expected = _MVF_HEADER.size + count * record.itemsize
    if len(buf) != expected:
        raise FormatError(
            f"MVF1 payload length {len(buf)} does not match header "
            f"(expected {expected} bytes for {count} records of dim {dim})",
            base_offset + min(len(buf), expected),
        )
    records = np.frombuffer(buf, dtype=record, count=count, offset=_MVF_HEADER.size)
    return dim, records["object_index"].astype(np.int64), records["vector"].astype(STORAGE_DTYPE)


def write_features(path, dim: int, object_indices, vectors) -> None:
    Path(path).write_bytes(features_to_bytes(dim, object_indices, vectors))


def read_features(path):
    return features_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Records and database


@dataclass(frozen=True)
class ObjectRecord:
    """One database object: id, category label, and its view vectors."""

    object_id: str
    category: str
    views: np.ndarray  # (n_views, dim) float32, L2-normalized
    view_paths: tuple = ()


@dataclass(frozen=True)
class Query:
    """A (possibly multi-view) query, optionally carrying ground truth."""

    query_id: str
    views: np.ndarray  # (n_views, dim) float32, L2-normalized
    category: Optional[str] = None


class RankedItem(NamedTuple):
    object_id: str
    distance: float


RankedList = list  # of RankedItem, ascending by (distance, object_id)


class Database:
    """Immutable multi-view object database.

    Holds the normalized view vectors of all objects in one stacked
    matrix plus per-object offsets, and precomputes the early-fused
    vector of every object for both EF modes.  Safe for concurrent
    ranking once built.
    """

    def __init__(self, objects, dim, view_matrix, view_starts, view_counts, manifest_bytes):
        self.objects = tuple(objects)
        self.dim = int(dim)
        self.view_matrix = view_matrix
        self.view_starts = view_starts
        self.view_counts = view_counts
        self.manifest_bytes = manifest_bytes
        self.ids = tuple(o.object_id for o in self.objects)
        self.categories = tuple(o.category for o in self.objects)
        self._id_array = np.array(self.ids)
        self._category_of = {o.object_id: o.category for o in self.objects}
        self._views64 = view_matrix.astype(np.float64)
        ef_max = np.stack([early_fuse(o.views, FusionStrategy.EF_MAX) for o in self.objects])
        ef_avg = np.stack([early_fuse(o.views, FusionStrategy.EF_AVG) for o in self.objects])
        self._ef = {FusionStrategy.EF_MAX: ef_max, FusionStrategy.EF_AVG: ef_avg}
        self._ef64 = {mode: mat.astype(np.float64) for mode, mat in self._ef.items()}

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def total_views(self) -> int:
        return int(self.view_matrix.shape[0])

    def category_of(self, object_id: str) -> str:
        return self._category_of[object_id]

    def fused_vectors(self, mode: FusionStrategy) -> np.ndarray:
        """Precomputed (n_objects, dim) early-fusion matrix for one EF mode."""
        return self._ef[mode]

    @classmethod
    def from_parts(cls, manifest: dict, object_indices, vectors, manifest_bytes=None) -> "Database":
        """Assemble and validate a database from a manifest and feature records."""
        if not isinstance(manifest, dict) or "objects" not in manifest or "dim" not in manifest:
            raise FormatError("manifest must be a JSON object with 'dim' and 'objects'")
        dim = manifest["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise FormatError(f"manifest dim must be a positive integer, got {dim!r}")
        entries = manifest["objects"]
        if not entries:
            raise EmptyDatabaseError("manifest lists no objects")

        vectors = np.asarray(vectors, dtype=STORAGE_DTYPE)
        if vectors.ndim != 2:
            raise DimensionMismatchError(f"feature matrix must be 2-D, got shape {vectors.shape}")
        if vectors.shape[1] != dim:
            raise DimensionMismatchError(
                f"feature dim {vectors.shape[1]} does not match manifest dim {dim}"
            )
        if not np.all(np.isfinite(vectors)):
            raise ValueError("feature matrix contains non-finite values")
        object_indices = np.asarray(object_indices, dtype=np.int64)

        seen = set()
        expected_counts = []
        for entry in entries:
            oid = entry["id"]
            if oid in seen:
                raise DuplicateObjectIdError(f"duplicate object id {oid!r}")
            seen.add(oid)
            paths = entry.get("views", [])
            if len(paths) < 1:
                raise EmptyViewSetError(f"object {oid!r} lists no views")
            expected_counts.append(len(paths))

        n_obj = len(entries)
        if object_indices.size and (object_indices.min() < 0 or object_indices.max() >= n_obj):
            bad = object_indices[(object_indices < 0) | (object_indices >= n_obj)][0]
            raise DanglingReferenceError(
                f"feature record references object index {bad}, but manifest has {n_obj} objects"
            )
        counts = np.bincount(object_indices, minlength=n_obj)
        for i, entry in enumerate(entries):
            if counts[i] != expected_counts[i]:
                raise DanglingReferenceError(
                    f"object {entry['id']!r} lists {expected_counts[i]} views "
                    f"but has {counts[i]} feature records"
                )

        # Regroup records into manifest order (tolerates interleaved files).
        order = np.argsort(object_indices, kind="stable")
        stacked = normalize_rows(vectors[order])
        starts = np.zeros(n_obj, dtype=np.int64)
        np.cumsum(counts[:-1], out=starts[1:])

        objects = []
        for i, entry in enumerate(entries):
            s = int(starts[i])
            objects.append(
                ObjectRecord(
                    object_id=entry["id"],
                    category=entry["category"],
                    views=stacked[s : s + int(counts[i])],
                    view_paths=tuple(entry.get("views", [])),
                )
            )
        if manifest_bytes is None:
            manifest_bytes = json.dumps(manifest).encode("utf-8")
        return cls(objects, dim, stacked, starts, counts.astype(np.int64), manifest_bytes)


def build_database(manifest_path, features_path) -> Database:
    """Build a database from a manifest JSON file and an MVF1 feature file."""
    manifest_bytes = Path(manifest_path).read_bytes()
    try:
        manifest = json.loads(manifest_bytes)
    except json.JSONDecodeError as e:
        raise FormatError(f"manifest is not valid JSON: {e}") from None
    dim, indices, vectors = read_features(features_path)
    if dim != manifest.get("dim"):
        raise DimensionMismatchError(
            f"feature file dim {dim} does not match manifest dim {manifest.get('dim')}"
        )
    return Database.from_parts(manifest, indices, vectors, manifest_bytes=manifest_bytes)


# ---------------------------------------------------------------------------
# Index persistence (MVI1)


def index_to_bytes(db: Database) -> bytes:
    indices = np.repeat(np.arange(len(db), dtype=np.int64), db.view_counts)
    payload = features_to_bytes(db.dim, indices, db.view_matrix)
    header = _MVI_HEADER.pack(MVI_MAGIC, FORMAT_VERSION, len(db.manifest_bytes))
    return header + db.manifest_bytes + payload


def index_from_bytes(buf: bytes) -> Database:
    if len(buf) < _MVI_HEADER.size:
        raise FormatError(
            f"truncated MVI1 header: need {_MVI_HEADER.size} bytes, have {len(buf)}", len(buf)
        )
    magic, version, manifest_len = _MVI_HEADER.unpack_from(buf, 0)
    if magic != MVI_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MVI_MAGIC!r}", 0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported MVI1 version {version}", 4)
    body_start = _MVI_HEADER.size
    if len(buf) < body_start + manifest_len:
        raise FormatError(
            f"manifest_length {manifest_len} exceeds file size {len(buf)}", len(buf)
        )
    manifest_bytes = buf[body_start : body_start + manifest_len]
    try:
        manifest = json.loads(manifest_bytes)
    except json.JSONDecodeError as e:
        raise FormatError(f"embedded manifest is not valid JSON: {e}", body_start) from None
    feat_start = body_start + manifest_len
    dim, indices, vectors = features_from_bytes(buf[feat_start:], base_offset=feat_start)
    if dim != manifest.get("dim"):
        raise DimensionMismatchError(
            f"embedded feature dim {dim} does not match manifest dim {manifest.get('dim')}"
        )
    return Database.from_parts(manifest, indices, vectors, manifest_bytes=manifest_bytes)


def save_index(db: Database, path) -> None:
    Path(path).write_bytes(index_to_bytes(db))


def load_index(path) -> Database:
    return index_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Query loading


def load_query_file(path, query_id: Optional[str] = None, category: Optional[str] = None) -> Query:
    """Load one per-query MVF1 file; views are normalized idempotently."""
    path = Path(path)
    _, _, vectors = read_features(path)
    if vectors.shape[0] < 1:
        raise EmptyViewSetError(f"query file {path} contains no views")
    return Query(
        query_id=query_id if query_id is not None else path.stem,
        views=normalize_rows(vectors),
        category=category,
    )


def load_query_set(queries_dir) -> list:
    """Load a queries/ directory: queries.json plus per-query MVF1 files."""
    queries_dir = Path(queries_dir)
    listing_path = queries_dir / "queries.json"
    try:
        listing = json.loads(listing_path.read_text("utf-8"))
    except FileNotFoundError:
        raise FormatError(f"missing {listing_path}") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"queries.json is not valid JSON: {e}") from None
    queries = []
    for entry in listing["queries"]:
        queries.append(
            load_query_file(
                queries_dir / entry["file"],
                query_id=entry["id"],
                category=entry.get("category"),
            )
        )
    return queries


# ---------------------------------------------------------------------------
# Ranking engine


def _row_distances(target64: np.ndarray, query64: np.ndarray, out: np.ndarray) -> None:
    """Distances from each query row to each target row, into out (M, n).

    Works block-by-block over the target rows so each block is read once
    for all query views while the scratch buffer stays in cache.  Exact
    float64 differences: identical rows produce a distance of exactly 0.
    """
    n, dim = target64.shape
    m = query64.shape[0]
    buf = np.empty((min(_CHUNK_ROWS, n), dim))
    for s in range(0, n, _CHUNK_ROWS):
        e = min(s + _CHUNK_ROWS, n)
        block = target64[s:e]
        scratch = buf[: e - s]
        for i in range(m):
            np.subtract(block, query64[i], out=scratch)
            np.einsum("ij,ij->i", scratch, scratch, out=out[i, s:e])
    np.sqrt(out, out=out)


def _segment_sums(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.add.reduceat(values, starts, axis=-1)


def _late_fused_distances(
    d: np.ndarray,
    starts: np.ndarray,
    counts: np.ndarray,
    mode: FusionStrategy,
    literal_minwavg: bool,
) -> np.ndarray:
    """Reduce the (M, total_views) distance grid to one value per object.

    Mirrors fusion.late_fuse exactly, including the explicit-weight
    formulation that keeps single-entry blocks bit-identical to the raw
    distance.
    """
    m = d.shape[0]
    if mode in (FusionStrategy.LF_MIN, FusionStrategy.SINGLE):
        return np.minimum.reduceat(d, starts, axis=1).min(axis=0)
    if mode is FusionStrategy.LF_AVG:
        return _segment_sums(d, starts).sum(axis=0) / (m * counts)
    if mode is FusionStrategy.LF_WAVG:
        totals = _segment_sums(d, starts).sum(axis=0)
        rep = np.repeat(np.where(totals == 0.0, 1.0, totals), counts)
        weighted = d * (d / rep)
        return _segment_sums(weighted, starts).sum(axis=0)
    if mode is FusionStrategy.LF_IWAVG:
        inv = 1.0 / np.maximum(d, IWAVG_EPSILON)
        totals = _segment_sums(inv, starts).sum(axis=0)
        rep = np.repeat(totals, counts)
        weighted = d * (inv / rep)
        return _segment_sums(weighted, starts).sum(axis=0)
    if mode is FusionStrategy.LF_MIN_AVG:
        return np.minimum.reduceat(d, starts, axis=1).mean(axis=0)
    if mode is FusionStrategy.LF_MIN_WAVG:
        if literal_minwavg:
            rows = np.maximum.reduceat(d, starts, axis=1)
        else:
            rows = np.minimum.reduceat(d, starts, axis=1)
        totals = rows.sum(axis=0)
        safe = np.where(totals == 0.0, 1.0, totals)
        return (rows * (rows / safe)).sum(axis=0)
    raise UnknownStrategyError(f"{mode.value!r} is not a late-fusion mode")


def _renormalized(mat32: np.ndarray) -> np.ndarray:
    # Same semantics as l2_normalize applied per row.
    return normalize_rows(mat32)


def rank(
    db: Database,
    query: Query,
    strategy: FusionStrategy,
    k: int = 20,
    renormalize_ef: bool = False,
    literal_minwavg: bool = False,
) -> RankedList:
    """Exhaustively rank all database objects for one query.

    Returns the top-k (object_id, fused distance) pairs sorted ascending
    by distance, ties broken by ascending object id.  Distances are
    computed with float64 accumulation; ties are exact float64 equality.
    """
    if isinstance(strategy, str):
        strategy = FusionStrategy.parse(strategy)
    views = query.views
    if views.ndim != 2 or views.shape[0] < 1:
        raise EmptyViewSetError(f"query {query.query_id!r} has no views")
    if views.shape[1] != db.dim:
        raise DimensionMismatchError(
            f"query dim {views.shape[1]} does not match database dim {db.dim}"
        )
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if strategy is FusionStrategy.SINGLE and views.shape[0] != 1:
        raise UnknownStrategyError(
            f"strategy 'single' requires a one-view query, got {views.shape[0]} views"
        )

    if strategy.is_early:
        fused = early_fuse(views, strategy, renormalize=renormalize_ef)
        if renormalize_ef:
            targets64 = _renormalized(db.fused_vectors(strategy)).astype(np.float64)
        else:
            targets64 = db._ef64[strategy]
        distances = np.empty((1, len(db)))
        _row_distances(targets64, fused.astype(np.float64)[None, :], distances)
        fused_distances = distances[0]
    else:
        d = np.empty((views.shape[0], db.total_views))
        _row_distances(db._views64, views.astype(np.float64), d)
        fused_distances = _late_fused_distances(
            d, db.view_starts, db.view_counts, strategy, literal_minwavg
        )

    order = np.lexsort((db._id_array, fused_distances))[: min(k, len(db))]
    return [RankedItem(db.ids[i], float(fused_distances[i])) for i in order]
