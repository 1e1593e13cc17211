"""Shared construction helpers for the test suite."""

import numpy as np

from mvsearch import Database, Query


def random_unit_rows(rng, n, dim):
    mat = rng.standard_normal((n, dim))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return mat.astype(np.float32)


def make_db(rng, view_counts, categories=None, dim=8, vectors=None):
    """Database with the given per-object view counts and random unit views."""
    n = len(view_counts)
    if categories is None:
        categories = [f"cat_{i % 3}" for i in range(n)]
    entries = []
    for i, count in enumerate(view_counts):
        oid = f"obj_{i:03d}"
        entries.append(
            {
                "id": oid,
                "category": categories[i],
                "views": [f"images/{oid}/view_{v:02d}.png" for v in range(count)],
            }
        )
    total = int(sum(view_counts))
    if vectors is None:
        vectors = random_unit_rows(rng, total, dim)
    indices = np.repeat(np.arange(n, dtype=np.int64), view_counts)
    manifest = {"dim": dim, "objects": entries}
    return Database.from_parts(manifest, indices, vectors)


def db_as_python(db):
    """Database views as plain nested lists, for the scalar reference."""
    return [
        (obj.object_id, [[float(x) for x in row] for row in obj.views])
        for obj in db.objects
    ]


def random_query(rng, n_views, dim, query_id="q"):
    return Query(query_id, random_unit_rows(rng, n_views, dim))


def query_as_python(query):
    return [[float(x) for x in row] for row in query.views]
