"""Write a synthetic two-class vehicle corpus to disk.

    python scripts/make_synthetic.py --style inter --out synth/inter --n 60 --seed 0
"""

import argparse

from vehclass.synthetic import STYLES, gen_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--style", choices=sorted(STYLES), default="inter")
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=60, help="images per class")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ds = gen_synthetic(args.out, args.n, args.seed, args.style)
    print(f"{args.out}: " + ", ".join(f"{c}={n}" for c, n in zip(ds.classes, ds.counts())))


if __name__ == "__main__":
    main()
