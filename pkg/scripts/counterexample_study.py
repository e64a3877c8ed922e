"""Flag, symbol failure and step-3 repair for the five-dimensional counterexample."""

import argparse

from carnot.hypo import (
    adapted_coordinates,
    bracket_flag,
    counterexample,
    counterexample_limit,
    curve_product,
    gauge_symbol_scan,
    general_radial,
    radial_quality_checks,
    step3_repair,
    transform_family,
    well_adapted_check,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=16, help="smallest curve parameter is 2^-kmax")
    args = ap.parse_args()
    F = counterexample()
    flag = bracket_flag(F)
    print(f"flag dims {flag.dims}, step {flag.step}, weights {flag.weights}, regular {flag.regular}")

    limit = counterexample_limit()
    print(f"\nrho*|Z1 rho| along x1=t, x3=t^3 (limit {limit:.6f})")
    print(f"{'t':>12s} {'value':>12s} {'rel.err':>10s} {'3t':>10s}")
    ts = [2.0**-k for k in range(2, args.kmax + 1, 2)]
    for t, v in zip(ts, curve_product(F, F.weights, 0, ts)):
        print(f"{t:12.3e} {v:12.8f} {v / limit - 1:10.3e} {3 * t:10.3e}")

    ac = adapted_coordinates(F)
    before = gauge_symbol_scan(F, F.weights, 1, 1)
    print(f"\nscan of rho, order 1: {before.verdict}, slope {before.slope:.3f}")
    wa = well_adapted_check(ac.zeta)
    for v in wa.violations:
        print(f"  violation zeta_{v.l + 1},{v.lp + 1} alpha={v.alpha} derivative={v.derivative}")

    rep = step3_repair(ac.zeta)
    print("\nrepair:", "; ".join(rep.change.render()))
    after = gauge_symbol_scan(transform_family(ac.family, rep.change), rep.zeta.weights, 1, 3)
    print(f"scan after repair (|gamma| <= 3): {after.verdict}, worst ratio {after.worst.ratio:.3f}")

    for label, Z in [("unrepaired", ac.zeta), ("repaired", rep.zeta)]:
        q = radial_quality_checks(general_radial(Z))
        bad = {k: v for k, v in q.verdicts.items() if v != "bounded"}
        print(f"radial checks {label}: {'all bounded' if not bad else bad}")


if __name__ == "__main__":
    main()
