"""Picard iteration for the perturbation equation at small and 100x data."""

import argparse

import numpy as np

from oseenlab.duhamel import geometric_grid, picard_iterate
from oseenlab.field import solenoidal_bump, synthetic_wake_profile


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--half-width", type=float, default=16.0)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--wake", type=float, default=0.02)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--iterations", type=int, default=7)
    p.add_argument("--scales", type=float, nargs="+", default=[1.0, 100.0])
    args = p.parse_args()

    bump = solenoidal_bump(args.n, args.half_width, width=1.5)
    wake = synthetic_wake_profile(args.wake, args.n, args.half_width, drift=args.a)
    grid = geometric_grid(8, 32, 0.02)
    for scale in args.scales:
        b = bump.with_values(scale * args.amplitude * bump.values)
        rep = picard_iterate(b, wake, args.a, args.iterations, grid)
        print(f"scale {scale:g}: |b|_3 = {rep.data_norm3:.3g}, ratios {np.round(rep.ratios, 4).tolist()}")
        print(f"  contracting={rep.contracting} diverged={rep.diverged} {rep.message}")


if __name__ == "__main__":
    main()
