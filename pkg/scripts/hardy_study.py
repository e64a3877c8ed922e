"""Hardy ratios, integration-by-parts residuals and dilation scaling on Heisenberg and Engel."""

import argparse
from fractions import Fraction

from carnot.algebra import preset
from carnot.gauge import build_gauge
from carnot.group import left_invariant_fields
from carnot.hardy import Bump, ExpGauss, hardy_report, homogeneity_check, ibp_residual
from carnot.poly import Polynomial
from carnot.quadrature import default_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algebras", nargs="*", default=["heisenberg", "engel"])
    args = ap.parse_args()
    for name in args.algebras:
        A = preset(name)
        q, Q = A.dim, A.homogeneous_dimension
        g = build_gauge(A.weights)
        frame = left_invariant_fields(A)
        spec = default_spec(q)
        x1 = Polynomial.var(q, 0)
        one = Polynomial.const(q, 1)
        print(f"\n{name} (q={q}, Q={Q})")
        phi = Bump(one + x1, g, Fraction(1, 2), 2)
        for s in range(1, (Q + 1) // 2):
            r = ibp_residual(phi, s, frame, spec)
            print(f"  IBP s={s}: lhs={r.lhs:.6e} rhs={r.rhs:.6e} residual={r.residual:.2e}")
        for label, f in [("exp-gauge", ExpGauss(one, g)), ("(1+x1) exp-gauge", ExpGauss(one + x1, g))]:
            for s in range(0, (Q + 1) // 2):
                rep = hardy_report(f, s, frame, spec)
                print(f"  {label:18s} s={s}: LHS={rep.lhs:.6e} ratio_hom={rep.ratio_homogeneous:.6f} "
                      f"ratio_full={rep.ratio_full:.6f}")
        sc = homogeneity_check(ExpGauss(one + x1, g), 1, 2, frame, spec)
        print(f"  scaling r=2, s=1: LHS ratio {sc.lhs_ratio:.9f} (expected {sc.lhs_expected:g}), "
              f"max rel err {sc.max_relative_error():.1e}")


if __name__ == "__main__":
    main()
