"""Classify A_q growth of the wake weight over a grid of exponents."""

import argparse

import numpy as np

from oseenlab.muckenhoupt import AqScan, aq_scan_classify
from oseenlab.weights import WeightSpec, is_muckenhoupt_admissible


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--alphas", type=float, nargs="+", default=[-2.7, 0.0, 0.4, 3.0])
    p.add_argument("--betas", type=float, nargs="+", default=[-1.5, -1.0, 0.4, 1.2])
    args = p.parse_args()

    print(f"{'alpha':>6} {'beta':>6} {'label':>8} {'slope':>7} admissible")
    for alpha in args.alphas:
        for beta in args.betas:
            w = WeightSpec(alpha, beta)
            res = aq_scan_classify(AqScan(w, args.q))
            print(f"{alpha:6.2f} {beta:6.2f} {res.label:>8} {res.slope:7.3f} {bool(is_muckenhoupt_admissible(w, args.q))}")


if __name__ == "__main__":
    main()
