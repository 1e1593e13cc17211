"""Deterministic synthetic multi-view dataset generator.

Geometry in feature space only: category centroids on the unit sphere,
object centroids scattered around them, views scattered around objects,
queries drawn from held-out objects with an extra clutter term.  All
points are re-normalized onto the sphere, so synthetic data flows
through the same unit-norm code paths as real descriptors.

Randomness comes from numpy's PCG64 generator seeded with config.seed.
The draw order is fixed and is part of the format contract:

    1. anchor direction: standard_normal(dim)
    2. per category c:   g_c = standard_normal(dim),
                         centroid_c = normalize(anchor + category_separation * g_c)
    3. per category, per database object:
                         h = standard_normal(dim)  (object offset)
                         n_views = integers(views_min, views_max + 1)
                         per view: z = standard_normal(dim)  (view noise)
    4. per category, per query object, after that category's database
       objects: h, n_views, then per view z = standard_normal(dim) and
       w = standard_normal(dim) (clutter).

The clutter draw w is consumed for every query view even when
clutter_sigma is zero, so two configs differing only in clutter_sigma
produce the identical database and identically-directed query noise,
scaled differently.  That makes clutter ladders seed-paired.

small separation  ->  centroids collapse toward the shared anchor
large separation  ->  centroids approach uniform on the sphere
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List

import numpy as np

from .core import STORAGE_DTYPE, normalize_rows
from .errors import InvalidConfigError
from .index import Database, Query, features_to_bytes


@dataclass(frozen=True)
class SynthConfig:
    num_categories: int = 45
    objects_per_category: int = 5
    views_min: int = 2
    views_max: int = 3
    dim: int = 64
    category_separation: float = 1.0
    object_spread: float = 0.1
    view_noise_sigma: float = 0.05
    clutter_sigma: float = 0.0
    queries_per_category: int = 1
    seed: int = 0

    def __post_init__(self):
        def bad(msg):
            raise InvalidConfigError(msg)

        if self.num_categories < 1:
            bad(f"num_categories must be >= 1, got {self.num_categories}")
        if self.objects_per_category < 1:
            bad(f"objects_per_category must be >= 1, got {self.objects_per_category}")
        if self.views_min < 1:
            bad(f"views_min must be >= 1, got {self.views_min}")
        if self.views_max < self.views_min:
            bad(f"views_max {self.views_max} is below views_min {self.views_min}")
        if self.dim < 1:
            bad(f"dim must be >= 1, got {self.dim}")
        for name in ("category_separation", "object_spread", "view_noise_sigma", "clutter_sigma"):
            if getattr(self, name) < 0:
                bad(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.queries_per_category < 0:
            bad(f"queries_per_category must be >= 0, got {self.queries_per_category}")

    @classmethod
    def from_json(cls, path) -> "SynthConfig":
        try:
            raw = json.loads(Path(path).read_text("utf-8"))
        except json.JSONDecodeError as e:
            raise InvalidConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise InvalidConfigError("config file must hold a JSON object")
        try:
            return cls(**raw)
        except TypeError as e:
            raise InvalidConfigError(f"bad config field: {e}") from None


@dataclass
class QuerySpec:
    query_id: str
    category: str
    views: np.ndarray  # (n_views, dim) float32, unit rows


@dataclass
class SynthDataset:
    config: SynthConfig
    manifest: dict
    object_indices: np.ndarray
    features: np.ndarray
    queries: List[QuerySpec]

    def to_database(self) -> Database:
        return Database.from_parts(self.manifest, self.object_indices, self.features)

    def to_queries(self) -> List[Query]:
        return [Query(q.query_id, q.views, q.category) for q in self.queries]


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return normalize_rows(rng.standard_normal(dim).astype(STORAGE_DTYPE)[None, :])[0]


def _scatter(center32: np.ndarray, sigma: float, draw: np.ndarray) -> np.ndarray:
    point = center32.astype(np.float64) + sigma * draw
    return normalize_rows(point.astype(STORAGE_DTYPE)[None, :])[0]


def generate(config: SynthConfig) -> SynthDataset:
    """Produce a manifest, feature records, and ground-truthed queries."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    dim = config.dim

    anchor = _unit(rng, dim)
    centroids = []
    for _ in range(config.num_categories):
        g = rng.standard_normal(dim)
        centroids.append(_scatter(anchor, config.category_separation, g))

    entries = []
    indices = []
    vectors = []
    queries: List[QuerySpec] = []
    for c, centroid in enumerate(centroids):
        category = f"cat_{c:03d}"
        for o in range(config.objects_per_category):
            obj_id = f"obj_{c:03d}_{o:03d}"
            h = rng.standard_normal(dim)
            obj_center = _scatter(centroid, config.object_spread, h)
            n_views = int(rng.integers(config.views_min, config.views_max + 1))
            paths = []
            for v in range(n_views):
                z = rng.standard_normal(dim)
                vectors.append(_scatter(obj_center, config.view_noise_sigma, z))
                indices.append(len(entries))
                paths.append(f"images/{obj_id}/view_{v:02d}.png")
            entries.append({"id": obj_id, "category": category, "views": paths})
        for qn in range(config.queries_per_category):
            h = rng.standard_normal(dim)
            q_center = _scatter(centroid, config.object_spread, h)
            n_views = int(rng.integers(config.views_min, config.views_max + 1))
            rows = []
            for _ in range(n_views):
                z = rng.standard_normal(dim)
                w = rng.standard_normal(dim)  # consumed even at clutter 0
                noisy = (
                    q_center.astype(np.float64)
                    + config.view_noise_sigma * z
                    + config.clutter_sigma * w
                )
                rows.append(normalize_rows(noisy.astype(STORAGE_DTYPE)[None, :])[0])
            queries.append(
                QuerySpec(
                    query_id=f"query_{c:03d}_{qn:02d}",
                    category=category,
                    views=np.stack(rows),
                )
            )

    manifest = {"dim": dim, "objects": entries}
    return SynthDataset(
        config=config,
        manifest=manifest,
        object_indices=np.asarray(indices, dtype=np.int64),
        features=np.stack(vectors),
        queries=queries,
    )


def write_dataset(dataset: SynthDataset, out_dir) -> dict:
    """Write manifest.json, features.mvf, and a queries/ directory.

    Returns the paths written, keyed by role.  Byte-identical for a
    fixed config.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(dataset.manifest, indent=2) + "\n", "utf-8")
    features_path = out_dir / "features.mvf"
    features_path.write_bytes(
        features_to_bytes(dataset.config.dim, dataset.object_indices, dataset.features)
    )

    queries_dir = out_dir / "queries"
    queries_dir.mkdir(exist_ok=True)
    listing = {"dim": dataset.config.dim, "queries": []}
    for q in dataset.queries:
        fname = f"{q.query_id}.mvf"
        (queries_dir / fname).write_bytes(
            features_to_bytes(
                dataset.config.dim,
                np.zeros(q.views.shape[0], dtype=np.int64),
                q.views,
            )
        )
        listing["queries"].append({"id": q.query_id, "category": q.category, "file": fname})
    (queries_dir / "queries.json").write_text(json.dumps(listing, indent=2) + "\n", "utf-8")
    return {
        "manifest": manifest_path,
        "features": features_path,
        "queries": queries_dir,
        "config": dataset.config,
    }


def config_to_json(config: SynthConfig) -> str:
    return json.dumps(asdict(config), indent=2) + "\n"
