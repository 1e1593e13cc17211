"""Retrieval quality metrics and strategy-comparison reports.

Two average-precision denominators are supported.  "paper" divides the
precision sum by the result-list length, so AveP depends on how deep the
list goes even past the last relevant item.  "standard" divides by the
number of relevant items actually retrieved, the usual IR convention.
Reports always label which mode produced them.
"""

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    EmptyListError,
    LengthMismatchError,
    MissingGroundTruthError,
    OutOfRangeError,
)
from .fusion import FusionStrategy
from .index import Database, Query, rank

AP_MODES = ("paper", "standard")


def precision_at_k(rels: Sequence[int], k: int) -> float:
    """Fraction of the first k results that are relevant."""
    if not 1 <= k <= len(rels):
        raise OutOfRangeError(f"k={k} outside 1..{len(rels)}")
    return sum(1 for r in rels[:k] if r) / k


def average_precision(rels: Sequence[int], mode: str = "paper") -> float:
    """AveP of a binary relevance list.

    mode "paper": sum of P(k) over relevant ranks, divided by the list
    length.  mode "standard": divided by the number of relevant items
    (0.0 when the list has none).
    """
    if mode not in AP_MODES:
        raise ValueError(f"unknown AveP mode {mode!r}, expected one of {AP_MODES}")
    if len(rels) == 0:
        raise EmptyListError("relevance list is empty")
    hits = 0
    total = 0.0
    for i, r in enumerate(rels, start=1):
        if r:
            hits += 1
            total += hits / i
    if mode == "paper":
        return total / len(rels)
    return total / hits if hits else 0.0


def precision_sequence(rels: Sequence[int]) -> np.ndarray:
    """P(k) for every rank k in the list."""
    if len(rels) == 0:
        raise EmptyListError("relevance list is empty")
    flags = np.asarray(rels, dtype=np.float64)
    return np.cumsum(flags) / np.arange(1, len(rels) + 1)


def interpolated_curve(precision_lists: Sequence[Sequence[float]]) -> List[Tuple[int, float]]:
    """Mean interpolated precision per rank across queries.

    Per query, P_interp(k) = max over k' >= k of P(k'); the curves are
    then averaged rank-wise.  All inputs must share one length.
    """
    if not precision_lists:
        raise EmptyListError("no precision sequences given")
    lengths = {len(p) for p in precision_lists}
    if len(lengths) != 1:
        raise LengthMismatchError(f"precision sequences differ in length: {sorted(lengths)}")
    stacked = np.asarray(precision_lists, dtype=np.float64)
    interp = np.maximum.accumulate(stacked[:, ::-1], axis=1)[:, ::-1]
    means = interp.mean(axis=0)
    return [(k + 1, float(v)) for k, v in enumerate(means)]


@dataclass
class StrategyResult:
    strategy: FusionStrategy
    ap_mode: str
    map_value: float
    mean_seconds: float
    curve: List[Tuple[int, float]]
    per_query: Dict[str, float] = field(default_factory=dict)


@dataclass
class EvalReport:
    results: List[StrategyResult]
    ap_mode: str
    k: int

    def result_for(self, strategy: FusionStrategy) -> StrategyResult:
        for r in self.results:
            if r.strategy is strategy:
                return r
        raise KeyError(strategy)


def _relevance(db: Database, ranked, category: str) -> List[int]:
    return [1 if db.category_of(item.object_id) == category else 0 for item in ranked]


def evaluate(
    db: Database,
    queries: Sequence[Query],
    strategies: Sequence[FusionStrategy],
    k: Optional[int] = None,
    ap_mode: str = "paper",
    renormalize_ef: bool = False,
    literal_minwavg: bool = False,
) -> EvalReport:
    """Rank every query under every strategy and score the results.

    Relevance is category equality against the query's ground truth.
    Under SINGLE, each view of a query is issued as an independent
    single-view query; the per-view AvePs average into that query's
    AveP and each view contributes its own precision curve.  Timing is
    wall-clock per query (all of its views, for SINGLE).
    """
    if ap_mode not in AP_MODES:
        raise ValueError(f"unknown AveP mode {ap_mode!r}, expected one of {AP_MODES}")
    for q in queries:
        if q.category is None:
            raise MissingGroundTruthError(f"query {q.query_id!r} has no ground-truth category")
    if k is None:
        k = len(db)

    results = []
    for strategy in strategies:
        per_query: Dict[str, float] = {}
        curves: List[np.ndarray] = []
        elapsed = 0.0
        for q in queries:
            t0 = time.perf_counter()
            if strategy is FusionStrategy.SINGLE:
                aps = []
                for row in q.views:
                    sub = Query(q.query_id, row[None, :], q.category)
                    ranked = rank(db, sub, strategy, k)
                    rels = _relevance(db, ranked, q.category)
                    aps.append(average_precision(rels, ap_mode))
                    curves.append(precision_sequence(rels))
                ap = sum(aps) / len(aps)
            else:
                ranked = rank(
                    db, q, strategy, k,
                    renormalize_ef=renormalize_ef,
                    literal_minwavg=literal_minwavg,
                )
                rels = _relevance(db, ranked, q.category)
                ap = average_precision(rels, ap_mode)
                curves.append(precision_sequence(rels))
            elapsed += time.perf_counter() - t0
            per_query[q.query_id] = ap
        map_value = sum(per_query.values()) / len(per_query)
        results.append(
            StrategyResult(
                strategy=strategy,
                ap_mode=ap_mode,
                map_value=map_value,
                mean_seconds=elapsed / len(queries),
                curve=interpolated_curve(curves),
                per_query=per_query,
            )
        )
    return EvalReport(results=results, ap_mode=ap_mode, k=k)


def write_report(report: EvalReport, out_dir, include_timing: bool = True) -> List[Path]:
    """Write map.csv, per_query.csv, and one curve CSV per strategy.

    All numbers carry six decimal places.  Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    map_path = out_dir / "map.csv"
    with map_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["strategy", "mode", "mAP"]
        if include_timing:
            header.append("mean_query_seconds")
        writer.writerow(header)
        for r in report.results:
            row = [r.strategy.cli_name, r.ap_mode, f"{r.map_value:.6f}"]
            if include_timing:
                row.append(f"{r.mean_seconds:.6f}")
            writer.writerow(row)
    written.append(map_path)

    for r in report.results:
        curve_path = out_dir / f"curve_{r.strategy.cli_name}.csv"
        with curve_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "mean_interpolated_precision"])
            for rank_k, value in r.curve:
                writer.writerow([rank_k, f"{value:.6f}"])
        written.append(curve_path)

    pq_path = out_dir / "per_query.csv"
    with pq_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "strategy", "AveP"])
        for r in report.results:
            for qid in sorted(r.per_query):
                writer.writerow([qid, r.strategy.cli_name, f"{r.per_query[qid]:.6f}"])
    written.append(pq_path)
    return written
