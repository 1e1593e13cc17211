"""Command-line entry point: train, extract.

Exit codes: 0 success, 1 usage error (bad flags, unknown layer or
label), 2 data error (unreadable manifests, images, or model files).
"""

import argparse
import sys

from .errors import MvxError, ShapeAssemblyError, UnknownLabelError
from .extraction import EXTRACT_LAYERS, extract, write_extraction
from .network import NetworkSpec, build_network
from .training import TrainConfig, load_model, save_model, train


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvx", description="ConvNet view-feature extractor.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="train a classifier on a labeled image manifest")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--out-model", required=True)
    p_train.add_argument("--epochs", type=_nonnegative_int, required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=_cmd_train)

    p_extract = sub.add_parser("extract", help="write unit-norm features for a manifest")
    p_extract.add_argument("--model", required=True)
    p_extract.add_argument("--manifest", required=True)
    p_extract.add_argument("--layer", choices=EXTRACT_LAYERS, default="fc7")
    p_extract.add_argument("--out-features", required=True)
    p_extract.add_argument("--out-manifest", required=True)
    p_extract.set_defaults(func=_cmd_extract)
    return parser


def _cmd_train(args) -> int:
    from .data import load_manifest

    classes = sorted({entry.category for entry in load_manifest(args.manifest)})
    model = build_network(NetworkSpec(num_classes=len(classes)))
    log = train(model, args.manifest, TrainConfig(epochs=args.epochs, seed=args.seed), classes)
    for stats in log:
        print(f"epoch {stats.epoch}\tloss={stats.loss:.6f}\taccuracy={stats.accuracy:.4f}")
    save_model(model, classes, args.out_model)
    print(f"saved model ({len(classes)} classes) -> {args.out_model}")
    return 0


def _cmd_extract(args) -> int:
    model, _ = load_model(args.model)
    result = extract(model, args.manifest, layer=args.layer)
    write_extraction(result, args.out_features, args.out_manifest)
    for path, reason in result.failures:
        print(f"warning: skipped {path}: {reason}", file=sys.stderr)
    print(
        f"extracted {len(result.records)} vectors (dim {result.dim}, {args.layer}) "
        f"for {len(result.objects)} objects -> {args.out_features}"
    )
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    try:
        return args.func(args)
    except (UnknownLabelError, ShapeAssemblyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (MvxError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
