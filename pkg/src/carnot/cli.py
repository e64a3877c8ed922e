"""Command-line entry point.

Every subcommand writes a JSON report (or CSV/text) on stdout and a one-line
summary on stderr. Exit status: 0 when the requested checks pass (or match
``--expect``), 1 when a check fails, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import __version__

SUBCOMMANDS = (
    "validate", "identities", "frame", "radial", "gauge-scan", "ball-volume",
    "hardy-check", "hardy-ibp", "hardy-scaling",
    "hypo-flag", "hypo-repair", "hypo-scan", "hypo-radial",
)
FORMATS = ("json", "csv", "text")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one invocation."""

    subcommand: str
    options: dict = field(default_factory=dict)
    seed: int | None = None
    threads: int = 1
    output_format: str = "json"
    output: str | None = None
    expect: str | None = None

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        common = {"command", "config", "seed", "threads", "format", "output", "expect"}
        opts = {k: v for k, v in vars(ns).items() if k not in common}
        return cls(ns.command, opts, ns.seed, ns.threads, ns.format, ns.output, ns.expect)


@dataclass
class Outcome:
    report: dict
    passed: bool
    verdict: str
    summary: str
    csv: str | None = None


# ---------------------------------------------------------------------------
# helpers


def _algebra(name: str):
    from .algebra import StructuralError, load_algebra

    try:
        return load_algebra(name)
    except StructuralError as exc:
        raise InputError(str(exc)) from exc


def _family(name: str):
    from .hypo import load_family

    try:
        return load_family(name)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load family {name!r}: {exc}") from exc


def _spec(cfg: RunConfig, q: int):
    from .quadrature import QuadratureSpec, default_spec

    path = cfg.options.get("spec")
    try:
        if path:
            spec = QuadratureSpec.from_dict(json.loads(Path(path).read_text()))
        else:
            spec = default_spec(q)
        if spec.method == "monte-carlo":
            seed = cfg.seed if cfg.seed is not None else spec.seed
            if seed is None:
                raise InputError("Monte-Carlo quadrature needs --seed")
            spec = replace(spec, seed=seed)
        return replace(spec, threads=cfg.threads)
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"bad quadrature spec: {exc}") from exc


def _scan_settings(cfg: RunConfig, mode: str):
    from .gauge import ScanSettings

    o = cfg.options
    return ScanSettings(
        shells=o["shells"], samples_per_shell=o["samples"], mode=o.get("mode") or mode,
        seed=cfg.seed, threads=cfg.threads,
    )


def _residual_text(residuals: Sequence) -> str:
    for r in residuals:
        if not r.is_zero():
            return r.render() if hasattr(r, "render") else str(r)
    return "0"


def _render(p) -> str:
    from .poly import render

    return render(p)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig) -> Outcome:
    from .algebra import StructuralError, algebra_from_dict, load_algebra, validate

    src = cfg.options["algebra"]
    path = Path(src)
    try:
        if path.suffix == ".json" or path.exists():
            A = algebra_from_dict(json.loads(path.read_text()), check=False)
        else:
            A = load_algebra(src)
    except (StructuralError, OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    rep = validate(A)
    report = {
        "algebra": A.name or src,
        "layer_dims": list(A.layer_dims),
        "weights": list(A.weights),
        "homogeneous_dimension": A.homogeneous_dimension,
        **rep.to_dict(),
    }
    ok = rep.ok
    return Outcome(report, ok, "valid" if ok else "invalid",
                   f"{A.name or src}: {'valid' if ok else f'{len(rep.violations)} violation(s)'}")


def cmd_identities(cfg: RunConfig) -> Outcome:
    from .group import identity_residuals

    A = _algebra(cfg.options["algebra"])
    res = identity_residuals(A)
    ids = {k: {"residual": _residual_text(v), "zero": all(r.is_zero() for r in v)} for k, v in res.items()}
    ok = all(v["zero"] for v in ids.values())
    failed = [k for k, v in ids.items() if not v["zero"]]
    return Outcome({"algebra": A.name, "identities": ids}, ok, "pass" if ok else "fail",
                   f"{A.name}: {len(ids) - len(failed)}/{len(ids)} identities hold" + (f"; failing {failed}" if failed else ""))


def cmd_frame(cfg: RunConfig) -> Outcome:
    from .group import frame_bracket_residuals, left_invariant_fields

    A = _algebra(cfg.options["algebra"])
    fr = left_invariant_fields(A)
    ok = all(v.is_zero() for v in frame_bracket_residuals(fr).values())
    report = {
        "algebra": A.name,
        "weights": list(A.weights),
        "fields": [Y.render() for Y in fr.fields],
        "zeta": {f"{l + 1},{k + 1}": _render(z) for l, row in enumerate(fr.zeta) for k, z in enumerate(row) if z},
        "bracket_relations_hold": ok,
    }
    return Outcome(report, ok, "pass" if ok else "fail", f"{A.name}: frame of {A.dim} fields")


def cmd_radial(cfg: RunConfig) -> Outcome:
    from .group import left_invariant_fields, radial_field, radial_sigma_low_step

    A = _algebra(cfg.options["algebra"])
    R = radial_field(A)
    fr = left_invariant_fields(A)
    ok = R.reconstruct(fr) == R.coordinate_form
    report = {
        "algebra": A.name,
        "sigma": [_render(s) for s in R.sigma],
        "coordinate_form": R.coordinate_form.render(),
        "reconstruction_exact": ok,
    }
    if A.step <= 4:
        low = radial_sigma_low_step(A, corrected=A.step == 4)
        report["closed_form_agrees"] = low == R.sigma
        ok = ok and report["closed_form_agrees"]
    return Outcome(report, ok, "pass" if ok else "fail", f"{A.name}: radial field " + ("exact" if ok else "MISMATCH"))


def _scan_target(text: str, gauge, A):
    from .poly import Polynomial, parse_polynomial

    if text == "rho":
        return gauge.power(1), 1, "gauge"
    if text.startswith("x") and text[1:].isdigit():
        l = int(text[1:]) - 1
        if not 0 <= l < A.dim:
            raise InputError(f"coordinate {text} out of range")
        return Polynomial.var(A.dim, l), A.weights[l], "symbol"
    try:
        return parse_polynomial(text, A.dim), None, "symbol"
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _scan_outcome(rep, label: str) -> Outcome:
    ok = rep.verdict == "bounded"
    return Outcome(rep.to_dict(), ok, rep.verdict,
                   f"{label}: {rep.verdict} (worst ratio {rep.worst.ratio:.3g}, slope {rep.slope:.3f})"
                   if rep.worst else f"{label}: {rep.verdict}", rep.to_csv())


def cmd_gauge_scan(cfg: RunConfig) -> Outcome:
    from .gauge import build_gauge, symbol_scan
    from .group import left_invariant_fields

    o = cfg.options
    A = _algebra(o["algebra"])
    gauge = build_gauge(A.weights)
    f, alpha, mode = _scan_target(o["function"], gauge, A)
    if o.get("order") is not None:
        alpha = o["order"]
    if alpha is None:
        raise InputError("--order is required for a polynomial scan target")
    fr = left_invariant_fields(A)
    rep = symbol_scan(f, alpha, fr.horizontal, gauge, o["max_order"], _scan_settings(cfg, mode))
    out = _scan_outcome(rep, f"{A.name} {o['function']} order {alpha}")
    out.report = {"algebra": A.name, "function": o["function"], **out.report}
    return out


def cmd_ball_volume(cfg: RunConfig) -> Outcome:
    from .gauge import ball_volume_scaling, build_gauge

    o = cfg.options
    if cfg.seed is None:
        raise InputError("ball-volume is stochastic and needs --seed")
    A = _algebra(o["algebra"])
    gauge = build_gauge(A.weights)
    radii = [o["radius"], 2 * o["radius"]]
    vs = ball_volume_scaling(gauge, radii, int(o["samples"]), cfg.seed, cfg.threads)
    ok = vs.passes(o["sigmas"])
    report = {"algebra": A.name, "Q": A.homogeneous_dimension, **vs.to_dict()}
    return Outcome(report, ok, "pass" if ok else "fail",
                   f"{A.name}: volume ratio {vs.ratios()[0]['ratio']:.5g} vs 2^Q = {2 ** A.homogeneous_dimension}")


def _test_function(o: dict, gauge, default: str):
    from .hardy import parse_test_function

    text = o.get("function") or default
    try:
        return parse_test_function(text, gauge), text
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from exc


def _hardy_setup(cfg: RunConfig):
    from .gauge import build_gauge
    from .group import left_invariant_fields

    o = cfg.options
    A = _algebra(o["algebra"])
    return A, build_gauge(A.weights), left_invariant_fields(A), _spec(cfg, A.dim)


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, float) and not math.isfinite(v):
            v = str(v)
        elif isinstance(v, float):
            v = float(f"{v:.12g}")
        elif isinstance(v, (list, tuple)):
            v = [float(f"{a:.12g}") if isinstance(a, float) and math.isfinite(a) else a for a in v]
        out[k] = v
    return out


def cmd_hardy_check(cfg: RunConfig) -> Outcome:
    from .hardy import HardyPreconditionError, hardy_report

    o = cfg.options
    A, gauge, fr, spec = _hardy_setup(cfg)
    f, text = _test_function(o, gauge, "1 * exp-gauge")
    try:
        rep = hardy_report(f, o["s"], fr, spec)
    except HardyPreconditionError as exc:
        raise InputError(str(exc)) from exc
    ok = math.isfinite(rep.lhs) and math.isfinite(rep.ratio_homogeneous) and rep.lhs >= 0
    report = {"algebra": A.name, "function": text, "quadrature": spec.to_dict(), **_jsonable(rep.to_dict())}
    return Outcome(report, ok, "pass" if ok else "fail",
                   f"{A.name} s={rep.s}: LHS/RHS_hom = {rep.ratio_homogeneous:.6g}, LHS/RHS_full = {rep.ratio_full:.6g}")


def cmd_hardy_ibp(cfg: RunConfig) -> Outcome:
    from .hardy import HardyPreconditionError, ibp_residual

    o = cfg.options
    A, gauge, fr, spec = _hardy_setup(cfg)
    r0, r1 = o["annulus"]
    f, text = _test_function(o, gauge, f"(1 + x1) * bump({r0},{r1})")
    try:
        rep = ibp_residual(f, o["s"], fr, spec)
    except HardyPreconditionError as exc:
        raise InputError(str(exc)) from exc
    ok = rep.residual < o["tol"]
    report = {"algebra": A.name, "function": text, "tolerance": o["tol"], "quadrature": spec.to_dict(),
              **_jsonable(rep.to_dict())}
    return Outcome(report, ok, "pass" if ok else "fail",
                   f"{A.name} s={rep.s}: IBP relative residual {rep.residual:.3e} (tol {o['tol']:g})")


def cmd_hardy_scaling(cfg: RunConfig) -> Outcome:
    from .hardy import HardyPreconditionError, check_hardy_range, homogeneity_check

    o = cfg.options
    A, gauge, fr, spec = _hardy_setup(cfg)
    f, text = _test_function(o, gauge, "(1 + x1) * bump(1/2,2)")
    try:
        check_hardy_range(o["s"], A.homogeneous_dimension)
    except HardyPreconditionError as exc:
        raise InputError(str(exc)) from exc
    rep = homogeneity_check(f, o["s"], Fraction(o["r"]), fr, spec)
    err = rep.max_relative_error()
    ok = err < o["tol"]
    report = {"algebra": A.name, "function": text, "max_relative_error": float(f"{err:.6g}"),
              "tolerance": o["tol"], **_jsonable(rep.to_dict())}
    return Outcome(report, ok, "pass" if ok else "fail",
                   f"{A.name} s={rep.s} r={rep.r:g}: worst relative deviation {err:.3e}")


def cmd_hypo_flag(cfg: RunConfig) -> Outcome:
    from .hypo import NotHormanderError, bracket_flag

    o = cfg.options
    F = _family(o["family"])
    try:
        fl = bracket_flag(F, depth=o["depth"], probes=o["probes"], seed=cfg.seed or 0)
    except NotHormanderError as exc:
        return Outcome({"family": F.name, "hormander": False, "error": str(exc)}, False, "not-hormander", str(exc))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    ok = fl.regular
    return Outcome({"family": F.name, "hormander": True, **fl.to_dict()}, ok, "regular" if ok else "irregular",
                   f"{F.name or o['family']}: dims {fl.dims}, step {fl.step}, {'regular' if ok else 'IRREGULAR'}")


def _adapted(F, seed):
    from .hypo import AdaptationError, NotHormanderError, adapted_coordinates, bracket_flag

    try:
        return adapted_coordinates(F, bracket_flag(F, seed=seed or 0))
    except (NotHormanderError, AdaptationError) as exc:
        raise InputError(str(exc)) from exc


def cmd_hypo_repair(cfg: RunConfig) -> Outcome:
    from .hypo import RepairError, step3_repair, well_adapted_check

    F = _family(cfg.options["family"])
    ad = _adapted(F, cfg.seed)
    before = well_adapted_check(ad.zeta)
    try:
        rep = step3_repair(ad.zeta)
    except RepairError as exc:
        report = {"family": F.name, "error": str(exc), "asymmetric": [list(a) for a in exc.asymmetric]}
        return Outcome(report, False, "fail", str(exc))
    after = well_adapted_check(rep.zeta)
    commute = all(
        not _bracket_nonzero(a, b)
        for i, a in enumerate(rep.change.new_coordinate_fields())
        for b in rep.change.new_coordinate_fields()[i + 1:]
    )
    ok = after.ok and commute
    report = {
        "family": F.name,
        "adapted_change": ad.change.render(),
        "before": before.to_dict(),
        "repair": rep.to_dict(),
        "after": after.to_dict(),
        "new_coordinate_fields_commute": commute,
        "repaired_fields": [rep.change.push_field(X).render() for X in ad.family.fields],
    }
    change = [c for c in rep.change.render() if c.split(" = ")[0][1:] != c.split(" = ")[1][1:]]
    return Outcome(report, ok, "pass" if ok else "fail",
                   f"{F.name}: " + (", ".join(change) if change else "identity change") + ("; well-adapted" if after.ok else "; STILL VIOLATING"))


def _bracket_nonzero(a, b) -> bool:
    from .poly import field_bracket

    return not field_bracket(a, b).is_zero()


def _maybe_repair(F, ad, do_repair: bool):
    from .hypo import step3_repair, transform_family

    if not do_repair:
        return ad.family, ad.zeta, None
    rep = step3_repair(ad.zeta)
    return transform_family(ad.family, rep.change), rep.zeta, rep


def cmd_hypo_scan(cfg: RunConfig) -> Outcome:
    from .gauge import build_gauge, symbol_scan

    o = cfg.options
    F = _family(o["family"])
    ad = _adapted(F, cfg.seed)
    fam, zeta, rep = _maybe_repair(F, ad, o["repair"])
    gauge = build_gauge(zeta.weights)
    scan = symbol_scan(gauge.power(1), o["target_order"], fam.fields, gauge, o["max_order"], _scan_settings(cfg, "gauge"))
    out = _scan_outcome(scan, f"{F.name or o['family']}{' (repaired)' if rep else ''} rho order {o['target_order']:g}")
    out.report = {"family": F.name, "repaired": rep is not None, "weights": list(zeta.weights), **out.report}
    return out


def cmd_hypo_radial(cfg: RunConfig) -> Outcome:
    from .hypo import general_radial, radial_quality_checks

    o = cfg.options
    F = _family(o["family"])
    ad = _adapted(F, cfg.seed)
    _, zeta, rep = _maybe_repair(F, ad, o["repair"])
    R = general_radial(zeta)
    q = radial_quality_checks(R, settings=_scan_settings(cfg, "symbol"))
    report = {
        "family": F.name,
        "repaired": rep is not None,
        "sigma": [_render(s) for s in R.sigma],
        "sigma_tilde": [_render(s) for s in R.sigma_tilde],
        **q.to_dict(),
    }
    bad = [k for k, v in q.verdicts.items() if v != "bounded"]
    return Outcome(report, q.ok, "bounded" if q.ok else "unbounded",
                   f"{F.name}: " + ("all radial checks bounded" if q.ok else f"not bounded: {bad}"))


COMMANDS: dict[str, Callable[[RunConfig], Outcome]] = {
    "validate": cmd_validate,
    "identities": cmd_identities,
    "frame": cmd_frame,
    "radial": cmd_radial,
    "gauge-scan": cmd_gauge_scan,
    "ball-volume": cmd_ball_volume,
    "hardy-check": cmd_hardy_check,
    "hardy-ibp": cmd_hardy_ibp,
    "hardy-scaling": cmd_hardy_scaling,
    "hypo-flag": cmd_hypo_flag,
    "hypo-repair": cmd_hypo_repair,
    "hypo-scan": cmd_hypo_scan,
    "hypo-radial": cmd_hypo_radial,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="seed for stochastic paths (required where sampling is random)")
    p.add_argument("--threads", type=int, default=1, help="worker thread cap (results do not depend on it)")
    p.add_argument("--format", choices=FORMATS, default="json", help="report format on stdout")
    p.add_argument("--output", default=None, help="write the report to this file instead of stdout")
    p.add_argument("--expect", default=None,
                   help="expected verdict (e.g. unbounded, fail); exit 0 iff the verdict matches")
    p.add_argument("--config", default=None, help="JSON file of option defaults; unknown keys are rejected")


def _scan_opts(p: argparse.ArgumentParser, max_order: int) -> None:
    p.add_argument("--max-order", "--max-derivs", dest="max_order", type=int, default=max_order,
                   help="largest |gamma| scanned")
    p.add_argument("--shells", type=int, default=10, help="dyadic shells 2^0 .. 2^-shells")
    p.add_argument("--samples", type=int, default=256, help="points per shell")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carnot", description="Exact and numerical checks on Carnot groups and Hörmander families.")
    parser.add_argument("--version", action="version", version=f"carnot {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, description=help_)
        _add_common(p)
        return p

    alg = "preset name (heisenberg, heisenberg(2), engel, abelian(3), free(2,3)) or JSON file"
    p = add("validate", "check the stratified Lie algebra axioms")
    p.add_argument("--algebra", required=True, help=alg)
    p = add("identities", "run the exact identity suite")
    p.add_argument("--algebra", required=True, help=alg)
    p = add("frame", "left-invariant frame in exponential coordinates")
    p.add_argument("--algebra", required=True, help=alg)
    p = add("radial", "radial field coefficients and exact reconstruction")
    p.add_argument("--algebra", required=True, help=alg)

    p = add("gauge-scan", "shell scan of the symbol estimates")
    p.add_argument("--algebra", required=True, help=alg)
    p.add_argument("--function", default="rho", help="rho, a coordinate x<l>, or a polynomial")
    p.add_argument("--order", "--target-order", dest="order", type=float, default=None,
                   help="symbol order (default: 1 for rho, w_l for x<l>)")
    p.add_argument("--mode", choices=("symbol", "gauge"), default=None,
                   help="normalise by r^(order-|gamma|)_+ (symbol) or r^(order-|gamma|) (gauge)")
    _scan_opts(p, 3)

    p = add("ball-volume", "Monte-Carlo volume ratio of gauge balls of radii r and 2r")
    p.add_argument("--algebra", required=True, help=alg)
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--samples", type=float, default=1e6, help="samples per radius")
    p.add_argument("--sigmas", type=float, default=3.0, help="pass band in standard errors")

    for name, help_ in (("hardy-check", "Hardy ratios for one test function"),
                        ("hardy-ibp", "relative residual of the integration-by-parts identity"),
                        ("hardy-scaling", "dilation scaling of the Hardy integrals")):
        p = add(name, help_)
        p.add_argument("--algebra", required=True, help=alg)
        p.add_argument("--s", type=int, default=1, help="integer Sobolev order")
        p.add_argument("--function", default=None,
                       help="'<polynomial> * exp-gauge[(lam)]' or '<polynomial> * bump(r0,r1)'")
        p.add_argument("--spec", default=None, help="quadrature spec JSON")
        if name == "hardy-ibp":
            p.add_argument("--annulus", type=Fraction, nargs=2, default=(Fraction(1, 2), Fraction(2)),
                           metavar=("R0", "R1"))
            p.add_argument("--tol", type=float, default=1e-5)
        if name == "hardy-scaling":
            p.add_argument("--r", type=str, default="2", help="dilation factor (rational)")
            p.add_argument("--tol", type=float, default=1e-6)

    fam = "counterexample, step2, irregular, group:<preset>, or a family JSON file"
    p = add("hypo-flag", "bracket flag, adapted basis and regularity probe")
    p.add_argument("--family", required=True, help=fam)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--probes", type=int, default=64)
    p = add("hypo-repair", "well-adaptedness test and step-3 repair")
    p.add_argument("--family", required=True, help=fam)
    p = add("hypo-scan", "symbol scan of the gauge along the family")
    p.add_argument("--family", required=True, help=fam)
    p.add_argument("--target-order", type=float, default=1.0)
    p.add_argument("--repair", action="store_true", help="apply the step-3 repair first")
    _scan_opts(p, 3)
    p = add("hypo-radial", "general radial field and its quality checks")
    p.add_argument("--family", required=True, help=fam)
    p.add_argument("--repair", action="store_true", help="apply the step-3 repair first")
    _scan_opts(p, 1)
    return parser


def _normalise_argv(argv: list[str]) -> list[str]:
    """Accept ``hardy ibp`` as well as ``hardy-ibp``, and ``group frame`` for ``frame``."""
    if len(argv) >= 2 and argv[0] == "group" and argv[1] in ("frame", "radial"):
        return argv[1:]
    if len(argv) >= 2 and f"{argv[0]}-{argv[1]}" in SUBCOMMANDS:
        return [f"{argv[0]}-{argv[1]}"] + argv[2:]
    return argv


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    if not known.config or not argv or argv[0] not in subparsers:
        return parser.parse_args(argv)
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    sub = subparsers[argv[0]]
    data = {k.replace("-", "_"): v for k, v in data.items()}
    known_dests = {a.dest for a in sub._actions} - {"help", "config"}
    unknown = sorted(k for k in data if k not in known_dests)
    if unknown:
        raise InputError(f"unknown config keys: {unknown}")
    sub.set_defaults(**data)
    for action in sub._actions:
        if action.dest in data:
            action.required = False
    return parser.parse_args(argv)


def _dump(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"


def _text(report: dict, prefix: str = "") -> str:
    lines = []
    for k, v in sorted(report.items()):
        if isinstance(v, dict):
            lines.append(f"{prefix}{k}:")
            lines.append(_text(v, prefix + "  ").rstrip("\n"))
        else:
            lines.append(f"{prefix}{k}: {v}")
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    argv = _normalise_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        ns = _apply_config(parser, argv)
        cfg = RunConfig.from_namespace(ns)
        if cfg.threads < 1:
            raise InputError("--threads must be at least 1")
        outcome = COMMANDS[cfg.subcommand](cfg)
    except InputError as exc:
        print(f"carnot: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if cfg.expect is not None:
        ok = cfg.expect in (outcome.verdict, "pass" if outcome.passed else "fail")
        outcome.report["expect"] = cfg.expect
    else:
        ok = outcome.passed
    outcome.report["verdict"] = outcome.verdict
    outcome.report["passed"] = outcome.passed
    if cfg.output_format == "csv":
        if outcome.csv is None:
            print("carnot: error: CSV output is only available for scans", file=sys.stderr)
            return 2
        text = outcome.csv
    elif cfg.output_format == "text":
        text = _text(outcome.report)
    else:
        text = _dump(outcome.report)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    status = "ok" if ok else "FAILED"
    print(f"[{status}] {outcome.summary}", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
