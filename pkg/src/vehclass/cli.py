"""Command-line entry points: ``train``, ``classify``, ``eval``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 some images failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .classify import ClassificationError
from .codebook import DEFAULT_K
from .evaluation import PROTOCOLS, DatasetError, evaluate, load_dataset, split
from .feature import format_descriptors
from .imgio import PnmError, load_image_and_mask, save_pgm
from .model import MODES, ModelFormatError, ModelParams, load_model, save_model, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3
DEFAULT_TRAIN_PER_CLASS = 50


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_dump_flags(p):
    p.add_argument("--dump-edges", metavar="DIR", type=Path, help="write Canny edge maps as PGM")
    p.add_argument("--dump-descriptors", metavar="DIR", type=Path, help="write descriptors as text")


def _add_train_flags(p, mode_required):
    p.add_argument("--mode", choices=MODES, required=mode_required)
    p.add_argument("--data", type=Path, required=True, help="dataset root, one subdirectory per class")
    p.add_argument("--train-per-class", type=int, default=DEFAULT_TRAIN_PER_CLASS)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=ModelParams.sigma)
    p.add_argument("--canny-low", type=float, default=None, help="absolute magnitude (default 0.1*max)")
    p.add_argument("--canny-high", type=float, default=None, help="absolute magnitude (default 0.3*max)")
    p.add_argument("--stride", type=int, default=ModelParams.stride, help="dense anchor stride (intra)")
    p.add_argument("--tau", type=float, default=None, help="match threshold (default: auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vehclass", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write it to --out")
    _add_train_flags(p, mode_required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_dump_flags(p)

    p = sub.add_parser("classify", help="classify images with a trained model")
    p.add_argument("model", type=Path)
    p.add_argument("images", type=Path, nargs="+")
    _add_dump_flags(p)

    p = sub.add_parser("eval", help="train-and-evaluate, or evaluate an existing model")
    p.add_argument("model", type=Path, nargs="?", help="evaluate this model on every image in --data")
    _add_train_flags(p, mode_required=False)
    p.add_argument("--protocol", choices=PROTOCOLS, default="whole")
    p.add_argument("--csv", type=Path)
    _add_dump_flags(p)
    return parser


def _params(args) -> ModelParams:
    if args.stride < 1:
        raise UsageError("--stride must be >= 1")
    if args.sigma <= 0:
        raise UsageError("--sigma must be positive")
    if args.k < 1:
        raise UsageError("--k must be positive")
    if args.tau is not None and args.tau <= 0:
        raise UsageError("--tau must be positive")
    return ModelParams(sigma=args.sigma, canny_low=args.canny_low, canny_high=args.canny_high, stride=args.stride)


def _dumper(args, subdir=""):
    def dump(name, feats):
        if args.dump_edges and feats.edges is not None:
            d = args.dump_edges / subdir
            d.mkdir(parents=True, exist_ok=True)
            save_pgm(d / f"{name}.edges.pgm", feats.edges.data)
        if args.dump_descriptors:
            d = args.dump_descriptors / subdir
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{name}.desc.txt").write_text(format_descriptors(feats))
    return dump


def _train_from_args(args, train_set):
    hooks = {}
    if args.dump_edges or args.dump_descriptors:
        names = {c: [it.image.name.split(".")[0] for it in train_set.items[c]] for c in train_set.classes}

        def on_features(label, i, feats):
            _dumper(args, label)(names[label][i], feats)
        hooks["on_features"] = on_features
    return train(train_set.loaded(), args.mode, k=args.k, seed=args.seed, params=_params(args),
                 tau=args.tau, **hooks)


def _print_summary(summary, out):
    counts = ", ".join(f"{c}: {n} images / {summary.descriptors_per_class[c]} descriptors"
                       for c, n in summary.images_per_class.items())
    print(f"training set: {counts}", file=out)
    print(f"k-means: {summary.iterations} iterations, inertia {summary.inertia!r}", file=out)
    print(f"tau: {summary.tau!r}", file=out)


def cmd_train(args, out=sys.stdout) -> int:
    ds = load_dataset(args.data)
    train_set, _, _ = split(ds, args.train_per_class, args.seed)
    model, summary = _train_from_args(args, train_set)
    save_model(model, args.out)
    _print_summary(summary, out)
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


def cmd_classify(args, out=sys.stdout) -> int:
    model = load_model(args.model)
    dump = _dumper(args)
    failures = 0
    for path in args.images:
        try:
            image, mask = load_image_and_mask(path)
            feats = model.features(image, mask)
            dump(path.name.split(".")[0], feats)
            pred = model.predict_descriptors(feats.descriptors)
        except ClassificationError as exc:
            failures += 1
            print(f"{path}\tFAILED\t{exc.reason}", file=out)
            continue
        except (PnmError, ValueError) as exc:
            failures += 1
            print(f"{path}\tFAILED\terror: {exc}", file=out)
            continue
        print(f"{path}\t{pred.label}\t{pred.value!r}\t{pred.count}", file=out)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_eval(args, out=sys.stdout) -> int:
    ds = load_dataset(args.data)
    if args.model is not None:
        model = load_model(args.model)
        protocol, eval_set = "whole", ds
        print(f"model: {args.model} (mode {model.mode}); evaluating all {len(ds)} images", file=out)
    else:
        if args.mode is None:
            raise UsageError("eval needs --mode when no model file is given")
        train_set, eval_set, protocol = split(ds, args.train_per_class, args.seed, args.protocol)
        model, summary = _train_from_args(args, train_set)
        _print_summary(summary, out)
    cm = evaluate(model, eval_set, protocol)
    print(f"eval set: {len(eval_set)} images", file=out)
    out.write(cm.format_table())
    if args.csv:
        args.csv.write_text(cm.to_csv())
    return EXIT_OK


COMMANDS = {"train": cmd_train, "classify": cmd_classify, "eval": cmd_eval}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"vehclass: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, PnmError, ModelFormatError, ValueError, OSError) as exc:
        print(f"vehclass: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
