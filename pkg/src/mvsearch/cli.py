"""Command-line entry point: gen, build, query, eval, serve.

Exit codes: 0 success, 1 usage error (bad flags, unknown strategy,
invalid generator config), 2 data or format error (unreadable files,
corrupt payloads, mismatched dimensions).
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import InvalidConfigError, MvsError, UnknownStrategyError
from .evaluation import AP_MODES, evaluate, write_report
from .fusion import ALL_STRATEGIES, STRATEGY_NAMES, FusionStrategy
from .index import build_database, load_index, load_query_file, load_query_set, rank, save_index
from .service import serve
from .synthgen import SynthConfig, config_to_json, generate, write_dataset


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _nonnegative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


_GEN_KNOBS = (
    ("num-categories", _positive_int),
    ("objects-per-category", _positive_int),
    ("views-min", _positive_int),
    ("views-max", _positive_int),
    ("dim", _positive_int),
    ("category-separation", _nonnegative_float),
    ("object-spread", _nonnegative_float),
    ("view-noise-sigma", _nonnegative_float),
    ("clutter-sigma", _nonnegative_float),
    ("queries-per-category", _nonnegative_int),
    ("seed", int),
)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvs", description="Multi-view object retrieval engine.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--config", help="JSON file of generator settings")
    p_gen.add_argument("--out", required=True, help="output directory")
    for flag, kind in _GEN_KNOBS:
        p_gen.add_argument(f"--{flag}", type=kind, default=None)
    p_gen.set_defaults(func=_cmd_gen)

    p_build = sub.add_parser("build", help="build an index from manifest + features")
    p_build.add_argument("--manifest", required=True)
    p_build.add_argument("--features", required=True)
    p_build.add_argument("--out", required=True, help="index file to write")
    p_build.set_defaults(func=_cmd_build)

    p_query = sub.add_parser("query", help="rank an index for one query file")
    p_query.add_argument("--index", required=True)
    p_query.add_argument("--query", required=True, help="MVF1 file of query views")
    p_query.add_argument("--strategy", required=True)
    p_query.add_argument("--topk", type=_positive_int, default=20)
    p_query.add_argument("--format", choices=("json", "csv"), default="json")
    p_query.add_argument("--renormalize-ef", action="store_true",
                         help="re-normalize early-fused vectors before distance")
    p_query.add_argument("--literal-minwavg", action="store_true",
                         help="use the per-row maximum variant of lf-min-wavg")
    p_query.set_defaults(func=_cmd_query)

    p_eval = sub.add_parser("eval", help="evaluate strategies over a query set")
    p_eval.add_argument("--index", required=True)
    p_eval.add_argument("--queries", required=True, help="directory with queries.json")
    p_eval.add_argument("--strategies", required=True,
                        help="comma-separated strategy names, or 'all'")
    p_eval.add_argument("--k", type=_positive_int, default=None,
                        help="result-list depth (default: database size)")
    p_eval.add_argument("--ap-mode", choices=AP_MODES, default="paper")
    p_eval.add_argument("--out", required=True, help="report directory")
    p_eval.add_argument("--no-timing", action="store_true",
                        help="omit timing columns for byte-stable reports")
    p_eval.set_defaults(func=_cmd_eval)

    p_serve = sub.add_parser("serve", help="serve an index over HTTP")
    p_serve.add_argument("--index", required=True)
    p_serve.add_argument("--port", type=_nonnegative_int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def _cmd_gen(args) -> int:
    base = SynthConfig.from_json(args.config) if args.config else SynthConfig()
    overrides = {}
    for flag, _ in _GEN_KNOBS:
        attr = flag.replace("-", "_")
        value = getattr(args, attr)
        if value is not None:
            overrides[attr] = value
    config = dataclasses.replace(base, **overrides) if overrides else base
    dataset = generate(config)
    write_dataset(dataset, args.out)
    (Path(args.out) / "config.json").write_text(config_to_json(config), "utf-8")
    n_views = dataset.features.shape[0]
    print(
        f"generated {config.num_categories} categories, "
        f"{len(dataset.manifest['objects'])} objects ({n_views} views), "
        f"{len(dataset.queries)} queries -> {args.out}"
    )
    return 0


def _cmd_build(args) -> int:
    db = build_database(args.manifest, args.features)
    save_index(db, args.out)
    print(f"indexed {len(db)} objects ({db.total_views} views), dim {db.dim} -> {args.out}")
    return 0


def _cmd_query(args) -> int:
    strategy = FusionStrategy.parse(args.strategy)
    db = load_index(args.index)
    query = load_query_file(args.query)
    ranked = rank(
        db, query, strategy, k=args.topk,
        renormalize_ef=args.renormalize_ef,
        literal_minwavg=args.literal_minwavg,
    )
    if args.format == "json":
        rows = [
            {
                "object_id": item.object_id,
                "category": db.category_of(item.object_id),
                "distance": item.distance,
            }
            for item in ranked
        ]
        print(json.dumps(rows, indent=2))
    else:
        print("rank,object_id,category,distance")
        for i, item in enumerate(ranked, start=1):
            print(f"{i},{item.object_id},{db.category_of(item.object_id)},{item.distance:.6f}")
    return 0


def _parse_strategies(text: str):
    if text.strip() == "all":
        return list(ALL_STRATEGIES)
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise UnknownStrategyError(
            f"no strategy names given; expected 'all' or names from: {', '.join(STRATEGY_NAMES)}"
        )
    return [FusionStrategy.parse(name) for name in names]


def _cmd_eval(args) -> int:
    strategies = _parse_strategies(args.strategies)
    db = load_index(args.index)
    queries = load_query_set(args.queries)
    report = evaluate(db, queries, strategies, k=args.k, ap_mode=args.ap_mode)
    write_report(report, args.out, include_timing=not args.no_timing)
    for result in report.results:
        print(f"{result.strategy.value}\tmAP={result.map_value:.6f}")
    print(f"report written to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    serve(args.index, port=args.port)
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    try:
        return args.func(args)
    except (UnknownStrategyError, InvalidConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (MvsError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
