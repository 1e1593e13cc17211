"""Acceptance suite: one test per release criterion.

Each test prints into the summary block that conftest appends to the
run, so a release build shows one PASS/FAIL line per criterion.
"""

import functools
import json
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from helpers import db_as_python, make_db, query_as_python, random_query, random_unit_rows
from mvsearch import SynthConfig, evaluate, generate
from mvsearch.errors import FormatError
from mvsearch.evaluation import average_precision
from mvsearch.fusion import (
    ALL_STRATEGIES,
    EARLY_STRATEGIES,
    LATE_STRATEGIES,
    FusionStrategy,
    late_fuse,
)
from mvsearch.index import (
    features_from_bytes,
    features_to_bytes,
    index_from_bytes,
    index_to_bytes,
    rank,
)
from reference import (
    ref_early_fuse,
    ref_distance,
    ref_late_fuse,
    ref_pairwise,
    ref_textbook_ap,
)

BENCHMARK = dict(
    num_categories=45,
    objects_per_category=5,
    views_min=3,
    views_max=5,
    dim=32,
    category_separation=2.0,
    object_spread=0.05,
    view_noise_sigma=0.2,
    queries_per_category=1,
)
BENCHMARK_SEEDS = (0, 1, 2, 3, 4)


@functools.lru_cache(maxsize=None)
def _benchmark_means(clutter_sigma):
    """Mean mAP per strategy over the benchmark seeds, standard mode."""
    sums = {s: 0.0 for s in ALL_STRATEGIES}
    for seed in BENCHMARK_SEEDS:
        config = SynthConfig(clutter_sigma=clutter_sigma, seed=seed, **BENCHMARK)
        dataset = generate(config)
        report = evaluate(
            dataset.to_database(),
            dataset.to_queries(),
            list(ALL_STRATEGIES),
            ap_mode="standard",
        )
        for result in report.results:
            sums[result.strategy] += result.map_value
    return {s: total / len(BENCHMARK_SEEDS) for s, total in sums.items()}


def test_fusion_formula_oracle():
    """late-fusion formulas match a scalar brute-force oracle within 1e-12"""
    started = time.monotonic()
    worked = np.array([[0.2, 0.5], [0.4, 0.3]])
    expected = {
        FusionStrategy.LF_MIN: 0.2,
        FusionStrategy.LF_AVG: 0.35,
        FusionStrategy.LF_WAVG: 0.54 / 1.4,
        FusionStrategy.LF_IWAVG: 0.3116883116883117,
        FusionStrategy.LF_MIN_AVG: 0.25,
        FusionStrategy.LF_MIN_WAVG: 0.26,
    }
    for mode, value in expected.items():
        assert late_fuse(worked, mode) == pytest.approx(value, rel=1e-7)

    rng = np.random.default_rng(424242)
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 7))
        matrix = rng.uniform(1e-12, 1.0, size=(m, n)) + 1e-12
        rows = [[float(x) for x in row] for row in matrix]
        for mode in LATE_STRATEGIES:
            got = late_fuse(matrix, mode)
            want = ref_late_fuse(rows, mode.value)
            assert got == pytest.approx(want, rel=1e-12), (mode, rows)
    assert time.monotonic() - started < 5.0


def test_degenerate_collapse_to_single_view():
    """all nine strategies agree exactly on one-view-vs-one-view ranking"""
    rng = np.random.default_rng(31337)
    for case in range(200):
        n_objects = int(rng.integers(2, 12))
        dim = int(rng.integers(2, 17))
        db = make_db(rng, [1] * n_objects, dim=dim)
        query = random_query(rng, 1, dim)
        baseline = rank(db, query, FusionStrategy.SINGLE, k=n_objects)
        for strategy in ALL_STRATEGIES:
            ranked = rank(db, query, strategy, k=n_objects)
            assert ranked == baseline, (case, strategy)


def _oracle_rank(objects, query_views, k):
    """Score every strategy with the scalar reference, sharing the grids."""
    per_strategy = {s: [] for s in ALL_STRATEGIES}
    fused_queries = {mode: ref_early_fuse(query_views, mode.value) for mode in EARLY_STRATEGIES}
    for object_id, views in objects:
        grid = ref_pairwise(query_views, views)
        for mode in LATE_STRATEGIES:
            per_strategy[mode].append((ref_late_fuse(grid, mode.value), object_id))
        if len(query_views) == 1:
            per_strategy[FusionStrategy.SINGLE].append((min(grid[0]), object_id))
        for mode in EARLY_STRATEGIES:
            fused_object = ref_early_fuse(views, mode.value)
            per_strategy[mode].append(
                (ref_distance(fused_queries[mode], fused_object), object_id)
            )
    out = {}
    for strategy, scored in per_strategy.items():
        if scored:
            out[strategy] = sorted(scored, key=lambda pair: (pair[0], pair[1]))[:k]
    return out


def test_ranking_matches_brute_force_oracle():
    """rank() reproduces a brute-force reference on 50 random databases"""
    started = time.monotonic()
    rng = np.random.default_rng(90210)
    for trial in range(50):
        n_objects = int(rng.integers(3, 101))
        dim = int(rng.integers(4, 33))
        counts = [int(rng.integers(1, 5)) for _ in range(n_objects)]
        blocks = [random_unit_rows(rng, c, dim) for c in counts]
        if trial % 5 == 0 and n_objects >= 4:
            # exact duplicates force ties that only the id order resolves
            for dup in (1, 3):
                counts[dup] = counts[dup - 1]
                blocks[dup] = blocks[dup - 1].copy()
        db = make_db(rng, counts, dim=dim, vectors=np.vstack(blocks))
        n_query_views = 1 if trial % 3 == 0 else int(rng.integers(2, 5))
        query = random_query(rng, n_query_views, dim)

        oracle = _oracle_rank(db_as_python(db), query_as_python(query), k=n_objects)
        for strategy, want in oracle.items():
            got = rank(db, query, strategy, k=n_objects)
            assert [item.object_id for item in got] == [oid for _, oid in want], (
                trial,
                strategy,
            )
            for item, (dist, _) in zip(got, want):
                assert item.distance == pytest.approx(dist, rel=1e-9, abs=1e-12)
    assert time.monotonic() - started < 30.0


def test_multiview_beats_single_view():
    """every fusion strategy >= the single-view baseline; best wins by 0.05"""
    started = time.monotonic()
    means = _benchmark_means(clutter_sigma=0.0)
    single = means[FusionStrategy.SINGLE]
    fusion = {s: m for s, m in means.items() if s is not FusionStrategy.SINGLE}
    for strategy, mean_map in fusion.items():
        assert mean_map >= single, (
            f"{strategy.value} mean mAP {mean_map:.4f} fell below "
            f"the single-view baseline {single:.4f}"
        )
    best = max(fusion.values())
    assert best >= single + 0.05, (
        f"best fusion mAP {best:.4f} does not exceed single-view {single:.4f} by 0.05"
    )
    assert time.monotonic() - started < 120.0


def test_clutter_degrades_every_strategy():
    """raising query clutter lowers mean mAP for every strategy"""
    clean = _benchmark_means(clutter_sigma=0.0)
    cluttered = _benchmark_means(clutter_sigma=0.6)
    for strategy in ALL_STRATEGIES:
        assert cluttered[strategy] < clean[strategy], (
            f"{strategy.value}: {clean[strategy]:.4f} -> {cluttered[strategy]:.4f}"
        )


# Twenty relevance lists with AveP worked out by hand (result-list-length
# denominator).  Kept as exact rationals.
HAND_COMPUTED_AVEP = [
    ([1], Fraction(1)),
    ([0], Fraction(0)),
    ([1, 0, 1], Fraction(5, 9)),
    ([1, 1, 1, 1], Fraction(1)),
    ([0, 0, 0], Fraction(0)),
    ([1, 0], Fraction(1, 2)),
    ([0, 1], Fraction(1, 4)),
    ([1, 1, 0], Fraction(2, 3)),
    ([0, 0, 1], Fraction(1, 9)),
    ([1, 0, 0, 1], Fraction(3, 8)),
    ([0, 1, 1], Fraction(7, 18)),
    ([1, 1, 1, 0, 0], Fraction(3, 5)),
    ([0, 0, 0, 0, 1], Fraction(1, 25)),
    ([1, 0, 1, 0, 1], Fraction(34, 75)),
    ([0, 1, 0, 1, 0], Fraction(1, 5)),
    ([1, 1, 0, 0, 1, 1], Fraction(49, 90)),
    ([0, 0, 1, 1, 1], Fraction(43, 150)),
    ([1, 0, 0, 0], Fraction(1, 4)),
    ([0, 1, 1, 0, 1, 0], Fraction(53, 180)),
    ([1, 1, 1, 1, 1, 0, 0, 0], Fraction(5, 8)),
]


def test_average_precision_hand_values():
    """AveP reproduces 20 hand-computed values; standard mode matches textbook"""
    assert len(HAND_COMPUTED_AVEP) == 20
    for rels, want in HAND_COMPUTED_AVEP:
        assert average_precision(rels, "paper") == pytest.approx(float(want), rel=1e-12), rels

    rng = np.random.default_rng(777)
    checked = [rels for rels, _ in HAND_COMPUTED_AVEP]
    checked += [[int(b) for b in rng.integers(0, 2, size=rng.integers(1, 40))] for _ in range(200)]
    for rels in checked:
        assert average_precision(rels, "standard") == pytest.approx(
            ref_textbook_ap(rels), rel=1e-12
        ), rels


_TIMING_SCRIPT = r"""
import json, time
import numpy as np
from mvsearch import Database, Query, rank
from mvsearch.fusion import FusionStrategy

rng = np.random.default_rng(12345)
counts = [2] * 4000 + [3] * 1000          # 11000 views / 5000 objects = 2.2
dim = 1024
total = sum(counts)
entries = [
    {"id": f"obj_{i:05d}", "category": f"cat_{i % 45:03d}",
     "views": [f"img/{i}/{v}.png" for v in range(c)]}
    for i, c in enumerate(counts)
]
vectors = rng.standard_normal((total, dim)).astype(np.float32)
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True).astype(np.float32)
indices = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
db = Database.from_parts({"dim": dim, "objects": entries}, indices, vectors)

queries = [Query(f"q{j}", vectors[rng.integers(0, total, size=3)].copy())
           for j in range(5)]

def median_seconds(strategy, reps=5):
    times = []
    for j in range(reps):
        t0 = time.perf_counter()
        rank(db, queries[j % len(queries)], strategy, k=20)
        times.append(time.perf_counter() - t0)
    times.sort()
    return times[len(times) // 2]

print(json.dumps({s.value: median_seconds(s) for s in
                  (FusionStrategy.LF_AVG, FusionStrategy.EF_MAX, FusionStrategy.EF_AVG)}))
"""


def test_query_time_within_ceiling(tmp_path):
    """late-fusion query on a 5000-object dim-1024 index stays within 0.319 s"""
    script = tmp_path / "timing_probe.py"
    script.write_text(_TIMING_SCRIPT)
    env = dict(os.environ)
    env.update(
        OMP_NUM_THREADS="1",
        OPENBLAS_NUM_THREADS="1",
        MKL_NUM_THREADS="1",
        VECLIB_MAXIMUM_THREADS="1",
        NUMEXPR_NUM_THREADS="1",
    )
    result = subprocess.run(
        [sys.executable, str(script)], capture_output=True, text=True, env=env, timeout=300
    )
    assert result.returncode == 0, result.stderr
    timings = json.loads(result.stdout)
    lf_avg = timings["lf-avg"]
    assert lf_avg <= 0.319, f"lf-avg median {lf_avg:.4f}s exceeds the 0.319s ceiling"
    assert timings["ef-max"] < lf_avg, timings
    assert timings["ef-avg"] < lf_avg, timings
    # aspirational target; the hard bound above is the criterion
    if lf_avg > 0.05:
        print(f"note: lf-avg median {lf_avg:.4f}s is over the 0.05s target")


def test_persistence_round_trips_bit_identical(rng):
    """100 feature/index save-load round-trips are bit-identical; corrupt headers fail cleanly"""
    for trial in range(100):
        n_objects = int(rng.integers(1, 9))
        dim = int(rng.integers(1, 25))
        counts = [int(rng.integers(1, 4)) for _ in range(n_objects)]
        total = sum(counts)
        vectors = random_unit_rows(rng, total, dim)
        indices = np.repeat(np.arange(n_objects, dtype=np.int64), counts)

        feature_blob = features_to_bytes(dim, indices, vectors)
        got_dim, got_idx, got_vecs = features_from_bytes(feature_blob)
        assert features_to_bytes(got_dim, got_idx, got_vecs) == feature_blob

        db = make_db(rng, counts, dim=dim, vectors=vectors)
        index_blob = index_to_bytes(db)
        assert index_to_bytes(index_from_bytes(index_blob)) == index_blob

    sample = index_to_bytes(make_db(rng, [2, 1], dim=6))
    corruptions = [
        b"ZZZZ" + sample[4:],                                   # wrong magic
        sample[:4] + (9).to_bytes(4, "little") + sample[8:],    # wrong version
        sample[:8] + (2**40).to_bytes(8, "little") + sample[16:],  # manifest overrun
        sample[:7],                                             # truncated header
        sample[:-5],                                            # truncated features
    ]
    for corrupt in corruptions:
        with pytest.raises(FormatError) as first:
            index_from_bytes(corrupt)
        with pytest.raises(FormatError) as second:
            index_from_bytes(corrupt)
        assert str(first.value) == str(second.value)
        assert first.value.offset == second.value.offset
