"""Euclidean Hardy constant 4/(n-2)^2 approached by truncated |x|^(-(n-2)/2) profiles."""

import argparse

from carnot.hardy import RadialProfile, euclid_ratio
from carnot.quadrature import default_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--L", type=float, nargs="*", default=[1, 2, 4, 8, 16])
    ap.add_argument("--full", action="store_true", help="also integrate in R^n on a log radial grid")
    args = ap.parse_args()
    bound = 4 / (args.n - 2) ** 2
    print(f"n={args.n}, constant {bound:g}")
    for L in args.L:
        f = RadialProfile(args.n, L)
        line = f"L={L:6g}: 1-D ratio {f.ratio_1d():.5f}"
        if args.full:
            spec = default_spec(args.n, radial_map="log", radial_points=int(75 * L))
            line += f", {args.n}-D ratio {euclid_ratio(f, args.n, spec):.5f}"
        print(line)


if __name__ == "__main__":
    main()
