"""Desk-scale versions of both classification experiments on synthetic data.

Generates the inter- and intra-style corpora, trains on a seeded per-class
sample, and prints a confusion matrix per task. Use --seeds to sweep.
"""

import argparse
import tempfile
import time
from pathlib import Path

from vehclass.evaluation import evaluate, split
from vehclass.model import ModelParams, train
from vehclass.synthetic import gen_synthetic


def run(style, root, args, seed):
    ds = gen_synthetic(root / f"{style}_{seed}", args.n, seed, style)
    t0 = time.perf_counter()
    tr, ev, protocol = split(ds, args.train_per_class, seed, args.protocol)
    model, summary = train(tr.loaded(), style, k=args.k, seed=seed, params=ModelParams(stride=args.stride))
    cm = evaluate(model, ev, protocol)
    return cm, summary, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--train-per-class", type=int, default=10)
    ap.add_argument("--k", type=int, default=32)
    ap.add_argument("--stride", type=int, default=2)
    ap.add_argument("--protocol", choices=("whole", "holdout"), default="holdout")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--keep", help="write corpora here instead of a temp dir")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(args.keep or tmp)
        for style in ("inter", "intra"):
            for seed in args.seeds:
                cm, summary, secs = run(style, root, args, seed)
                print(f"== {style} seed={seed}  tau={summary.tau:.4f}  "
                      f"kmeans iters={summary.iterations}  {secs:.1f}s")
                print(cm.format_table())


if __name__ == "__main__":
    main()
