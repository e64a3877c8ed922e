"""Monte-Carlo gauge-ball volumes against the r^Q law."""

import argparse

from carnot.algebra import preset
from carnot.gauge import ball_volume_scaling, build_gauge


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algebras", nargs="*", default=["heisenberg", "engel", "free(2,3)"])
    ap.add_argument("--radii", type=float, nargs="*", default=[0.25, 0.5, 1.0])
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    for name in args.algebras:
        A = preset(name)
        sc = ball_volume_scaling(build_gauge(A.weights), args.radii, args.samples, args.seed, args.threads)
        print(f"{name} (Q={A.homogeneous_dimension})")
        for r, v, e in zip(sc.radii, sc.volumes, sc.errors):
            print(f"  r={r:<6g} vol={v:.6e} +- {e:.1e}")
        for row in sc.ratios():
            print(f"  ratio {row['r1']:g}/{row['r0']:g}: {row['ratio']:.4f} vs {row['expected']:g} (z={row['z']:+.2f})")


if __name__ == "__main__":
    main()
