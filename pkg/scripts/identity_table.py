"""Exact identity residuals on the shipped presets."""

import argparse
import time

from carnot.algebra import preset
from carnot.group import identity_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("algebras", nargs="*",
                    default=["heisenberg(1)", "heisenberg(2)", "engel", "free(2,3)", "free(3,2)", "free(2,4)"])
    args = ap.parse_args()
    for name in args.algebras:
        A = preset(name)
        t0 = time.perf_counter()
        suite = identity_suite(A)
        dt = time.perf_counter() - t0
        failed = [k for k, v in suite.items() if not v]
        status = "all zero" if not failed else f"NONZERO: {failed}"
        print(f"{name:15s} dims={A.layer_dims!s:14s} Q={A.homogeneous_dimension:3d} "
              f"{len(suite)} identities {status} ({dt:.2f}s)")


if __name__ == "__main__":
    main()
