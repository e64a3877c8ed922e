"""General polynomial vector-field families satisfying a Hörmander condition.

The pipeline is: bracket flag at a base point, adapted coordinates in which
the adapted frame is the standard frame at the origin, an exact
well-adaptedness test on the Taylor coefficients of ``zeta``, the quadratic
repair available in step 3, and a radial field built by truncated Neumann
inversion of ``Id + zeta``.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

from .algebra import StratifiedAlgebra
from .gauge import Gauge, ScanSettings, SymbolReport, build_gauge, grad_gauge_symbolic, symbol_scan
from .group import left_invariant_fields
from .linalg import SparseBasis, rank, solve, to_fraction
from .poly import (
    GaugeExpr,
    Polynomial,
    PolyVectorField,
    _apply_poly,
    combine_fields,
    field_bracket,
    polynomial_from_terms,
    polynomial_to_terms,
)


class NotHormanderError(ValueError):
    """The bracket flag does not fill the tangent space within the allowed depth."""


class AdaptationError(ValueError):
    pass


class RepairError(ValueError):
    """The step-3 repair cannot be built (symmetry fails or the step exceeds 3)."""

    def __init__(self, message: str, asymmetric: Sequence[tuple] = ()):
        super().__init__(message)
        self.asymmetric = list(asymmetric)


# ---------------------------------------------------------------------------
# families and coordinate changes


@dataclass(frozen=True, eq=False)
class FieldFamily:
    dim: int
    fields: tuple[PolyVectorField, ...]
    base_point: tuple[Fraction, ...]
    weights: tuple[int, ...] | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "base_point", tuple(to_fraction(a) for a in self.base_point))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(int(a) for a in self.weights))
            if len(self.weights) != self.dim:
                raise ValueError("one weight per coordinate is required")
        if len(self.base_point) != self.dim:
            raise ValueError("base point has the wrong dimension")
        if not self.fields or len(self.fields) > self.dim:
            raise ValueError("need between 1 and dim horizontal fields")
        for X in self.fields:
            if X.dim != self.dim or any(c.nvars != self.dim for c in X.coeffs):
                raise ValueError("field coefficients must be polynomials in dim variables")

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    def word_field(self, word: Sequence[int]) -> PolyVectorField:
        """Right-nested bracket ``[X_j1, [X_j2, ... X_jk]]``."""
        return self._word_fields(tuple(word))

    def _word_fields(self, word: tuple[int, ...]) -> PolyVectorField:
        cache = self.__dict__.setdefault("_wcache", {})
        if word not in cache:
            if len(word) == 1:
                cache[word] = self.fields[word[0]]
            else:
                cache[word] = field_bracket(self.fields[word[0]], self._word_fields(word[1:]))
        return cache[word]


@dataclass(frozen=True, eq=False)
class CoordinateChange:
    """``y = forward(x)`` with polynomial inverse ``x = inverse(y)``."""

    forward: tuple[Polynomial, ...]
    inverse: tuple[Polynomial, ...]

    @property
    def dim(self) -> int:
        return len(self.forward)

    @classmethod
    def identity(cls, q: int) -> "CoordinateChange":
        xs = tuple(Polynomial.variables(q))
        return cls(xs, xs)

    @classmethod
    def affine(cls, matrix: Sequence[Sequence], shift: Sequence) -> "CoordinateChange":
        """``y = M^-1 (x - shift)`` so that ``x = shift + M y``."""
        q = len(matrix)
        from .linalg import inverse as mat_inverse

        M = [[to_fraction(a) for a in row] for row in matrix]
        Minv = mat_inverse(M)
        xs = Polynomial.variables(q)
        shift = [to_fraction(a) for a in shift]
        fwd = tuple(
            sum((xs[j].scale(Minv[i][j]) for j in range(q)), Polynomial.zero(q))
            - sum((Minv[i][j] * shift[j] for j in range(q)), Fraction(0))
            for i in range(q)
        )
        inv = tuple(
            sum((xs[j].scale(M[i][j]) for j in range(q)), Polynomial.zero(q)) + shift[i] for i in range(q)
        )
        return cls(fwd, inv)

    def is_identity(self) -> bool:
        xs = Polynomial.variables(self.dim)
        return all(f == x for f, x in zip(self.forward, xs))

    def roundtrip_residual(self) -> list[Polynomial]:
        """``forward(inverse(y)) - y``; zero when the two maps are inverse."""
        xs = Polynomial.variables(self.dim)
        return [f.substitute(list(self.inverse)) - x for f, x in zip(self.forward, xs)]

    def then(self, other: "CoordinateChange") -> "CoordinateChange":
        """Apply ``self`` first, then ``other``."""
        fwd = tuple(g.substitute(list(self.forward)) for g in other.forward)
        inv = tuple(h.substitute(list(other.inverse)) for h in self.inverse)
        return CoordinateChange(fwd, inv)

    def push_field(self, V: PolyVectorField) -> PolyVectorField:
        """``V`` written in the new coordinates."""
        if self.is_identity():
            return V
        inv = list(self.inverse)
        return PolyVectorField(_apply_poly(V, f).substitute(inv) for f in self.forward)

    def push_point(self, x: Sequence) -> tuple[Fraction, ...]:
        pt = [to_fraction(a) for a in x]
        return tuple(f.evaluate(pt) for f in self.forward)

    def new_coordinate_fields(self) -> list[PolyVectorField]:
        """``d/dy_l`` written in the old coordinates."""
        fwd = list(self.forward)
        return [
            PolyVectorField(h.diff(l).substitute(fwd) for h in self.inverse) for l in range(self.dim)
        ]

    def render(self, names: str = "x", new: str = "y") -> list[str]:
        from .poly import render

        labels = [f"{names}{i + 1}" for i in range(self.dim)]
        return [f"{new}{i + 1} = {render(f, labels)}" for i, f in enumerate(self.forward)]


def transform_family(F: FieldFamily, change: CoordinateChange, weights: Sequence[int] | None = None) -> FieldFamily:
    return FieldFamily(
        F.dim,
        tuple(change.push_field(X) for X in F.fields),
        change.push_point(F.base_point),
        tuple(weights) if weights is not None else F.weights,
        F.name,
    )


# ---------------------------------------------------------------------------
# bracket flag


def _eval_field(V: PolyVectorField, point: Sequence[Fraction]) -> list[Fraction]:
    return [c.evaluate(point) for c in V.coeffs]


def _words(n: int, k: int):
    for w in itertools.product(range(n), repeat=k):
        if k >= 2 and w[-1] == w[-2]:
            continue
        yield w


def flag_dims(F: FieldFamily, point: Sequence[Fraction], depth: int) -> tuple[int, ...]:
    """Exact ``dim W_k(point)`` for ``k = 1..depth`` (stops early once full)."""
    dims, rows = [], []
    for k in range(1, depth + 1):
        for w in _words(F.n_fields, k):
            rows.append(_eval_field(F.word_field(w), point))
        dims.append(rank(rows))
        if dims[-1] == F.dim:
            break
    return tuple(dims)


@dataclass(frozen=True)
class AdaptedSlot:
    coordinate: int
    weight: int
    word: tuple[int, ...]
    # coefficients on (lower adapted slots, words of this layer)
    combination: tuple[tuple[object, Fraction], ...]


@dataclass(frozen=True, eq=False)
class FlagReport:
    dims: tuple[int, ...]
    step: int
    weights: tuple[int, ...]
    slots: tuple[AdaptedSlot, ...]
    adapted_fields: tuple[PolyVectorField, ...]
    evaluation: tuple[tuple[Fraction, ...], ...]
    regular: bool
    probe_dims: tuple[tuple[int, ...], ...]
    depth: int

    @property
    def horizontal_slots(self) -> tuple[int, ...]:
        return tuple(l for l, a in enumerate(self.weights) if a == 1)

    def to_dict(self) -> dict:
        mism = sorted({d for d in self.probe_dims if d != self.dims})
        return {
            "dims": list(self.dims),
            "step": self.step,
            "weights": list(self.weights),
            "adapted_basis": [
                {"coordinate": s.coordinate + 1, "weight": s.weight, "word": [i + 1 for i in s.word]}
                for s in sorted(self.slots, key=lambda s: s.coordinate)
            ],
            "evaluation_matrix": [[str(a) for a in row] for row in self.evaluation],
            "regular": self.regular,
            "probe_points": len(self.probe_dims),
            "probe_mismatches": [list(d) for d in mism],
        }


def _probe_points(F: FieldFamily, n: int, box: Fraction, seed: int) -> list[list[Fraction]]:
    rng = random.Random(seed)
    den = 64
    span = int(box * den)
    return [[c + Fraction(rng.randint(-span, span), den) for c in F.base_point] for _ in range(n)]


def bracket_flag(F: FieldFamily, depth: int = 6, probes: int = 64, box=Fraction(1, 2), seed: int = 0) -> FlagReport:
    """Flag dimensions, adapted basis and regularity probe at the base point."""
    q = F.dim
    x0 = F.base_point
    dims = flag_dims(F, x0, depth)
    if dims[-1] != q:
        raise NotHormanderError(f"not Hörmander at depth {depth}: flag dims {dims} never reach {q}")
    m = len(dims)

    basis = SparseBasis()
    slots: list[AdaptedSlot] = []
    fields_by_slot: dict[int, PolyVectorField] = {}
    value_by_slot: dict[int, list[Fraction]] = {}
    for k in range(1, m + 1):
        layer_words, pivots = [], []
        for w in _words(F.n_fields, k):
            v = _eval_field(F.word_field(w), x0)
            if basis.add({i: a for i, a in enumerate(v) if a}, w):
                layer_words.append((w, v))
                pivots.append(basis.pivots[-1])
        if len(layer_words) != dims[k - 1] - (dims[k - 2] if k > 1 else 0):
            raise AdaptationError("inconsistent flag dimensions")
        lower = sorted(value_by_slot)
        rows = lower + pivots
        cols = [value_by_slot[s] for s in lower] + [v for _, v in layer_words]
        M = [[c[r] for c in cols] for r in rows]
        for p, (word, _) in zip(pivots, layer_words):
            rhs = [int(r == p) for r in rows]
            coef = solve(M, rhs)
            parts = [(("slot", s), coef[i]) for i, s in enumerate(lower) if coef[i]]
            parts += [(("word", w), coef[len(lower) + j]) for j, (w, _) in enumerate(layer_words) if coef[len(lower) + j]]
            flds = [fields_by_slot[t[1]] if t[0] == "slot" else F.word_field(t[1]) for t, _ in parts]
            Y = combine_fields([Polynomial.const(q, c) for _, c in parts], flds)
            slots.append(AdaptedSlot(p, k, word, tuple(parts)))
            fields_by_slot[p] = Y
            value_by_slot[p] = _eval_field(Y, x0)
    weights = [0] * q
    for s in slots:
        weights[s.coordinate] = s.weight
    weights = tuple(weights)
    if F.weights is not None and F.weights != weights:
        raise AdaptationError(f"weight override {F.weights} disagrees with the flag weights {weights}")
    adapted = tuple(fields_by_slot[l] for l in range(q))
    evaluation = tuple(tuple(value_by_slot[l][r] for l in range(q)) for r in range(q))
    probe = tuple(flag_dims(F, p, m) for p in _probe_points(F, probes, to_fraction(box), seed))
    regular = all(d == dims for d in probe)
    return FlagReport(dims, m, weights, tuple(slots), adapted, evaluation, regular, probe, depth)


# ---------------------------------------------------------------------------
# adapted coordinates


@dataclass(frozen=True, eq=False)
class ZetaTable:
    """``Y_l = d_l + sum_l' zeta[l][l'] d_l'`` in adapted coordinates."""

    zeta: tuple[tuple[Polynomial, ...], ...]
    weights: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def step(self) -> int:
        return max(self.weights)

    @classmethod
    def from_fields(cls, fields: Sequence[PolyVectorField], weights: Sequence[int]) -> "ZetaTable":
        q = len(fields)
        return cls(
            tuple(tuple(fields[l].coeffs[k] - int(k == l) for k in range(q)) for l in range(q)),
            tuple(weights),
        )

    @cached_property
    def fields(self) -> tuple[PolyVectorField, ...]:
        q = self.dim
        return tuple(PolyVectorField(self.zeta[l][k] + int(k == l) for k in range(q)) for l in range(q))

    @cached_property
    def horizontal(self) -> tuple[PolyVectorField, ...]:
        return tuple(self.fields[l] for l in range(self.dim) if self.weights[l] == 1)

    def vanishes_at_origin(self) -> bool:
        return all(not z.constant_term() for row in self.zeta for z in row)

    def to_dict(self) -> dict:
        from .poly import render

        return {
            "weights": list(self.weights),
            "zeta": {
                f"{l + 1},{k + 1}": render(z)
                for l, row in enumerate(self.zeta) for k, z in enumerate(row) if z
            },
        }


@dataclass(frozen=True, eq=False)
class AdaptedCoordinates:
    change: CoordinateChange
    family: FieldFamily
    zeta: ZetaTable
    flag: FlagReport

    @property
    def gauge(self) -> Gauge:
        return build_gauge(self.zeta.weights)


def adapted_coordinates(F: FieldFamily, flag: FlagReport | None = None) -> AdaptedCoordinates:
    """Affine change sending the base point to 0 and the adapted frame to the standard frame there."""
    flag = flag or bracket_flag(F)
    if not flag.regular:
        raise AdaptationError("base point is not a regular Hörmander point")
    q = F.dim
    C = [list(row) for row in flag.evaluation]
    identity = all(C[i][j] == int(i == j) for i in range(q) for j in range(q)) and not any(F.base_point)
    change = CoordinateChange.identity(q) if identity else CoordinateChange.affine(C, F.base_point)
    fields = tuple(change.push_field(Y) for Y in flag.adapted_fields)
    zeta = ZetaTable.from_fields(fields, flag.weights)
    if not zeta.vanishes_at_origin():
        raise AdaptationError("adapted frame is not the standard frame at the origin")
    family = transform_family(F, change, flag.weights)
    return AdaptedCoordinates(change, family, zeta, flag)


def general_gauge(weights: Sequence[int]) -> Gauge:
    return build_gauge(weights)


# ---------------------------------------------------------------------------
# well-adaptedness


@dataclass(frozen=True)
class TaylorViolation:
    l: int
    lp: int
    alpha: tuple[int, ...]
    derivative: Fraction

    def to_dict(self) -> dict:
        return {
            "zeta": [self.l + 1, self.lp + 1],
            "alpha": list(self.alpha),
            "derivative": str(self.derivative),
        }


@dataclass(frozen=True)
class WellAdaptedReport:
    violations: tuple[TaylorViolation, ...]
    scans: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "well_adapted": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "scans": {k: r.to_dict() for k, r in self.scans.items()},
        }


def well_adapted_check(Z: ZetaTable, scan: bool = False, settings: ScanSettings = ScanSettings(),
                       n_max: int = 2) -> WellAdaptedReport:
    """Exact test: Taylor coefficients of ``zeta[l][l']`` at 0 of weighted degree
    at most ``w_l' - 2`` vanish when ``w_l = 1`` and ``w_l' >= 3``.

    With ``scan=True``, each such ``zeta`` is also scanned as a symbol of order
    ``w_l' - 1`` along the horizontal adapted fields.
    """
    w = Z.weights
    bad = []
    for l, lp in itertools.product(range(Z.dim), repeat=2):
        if w[l] != 1 or w[lp] < 3:
            continue
        for exps, c in sorted(Z.zeta[l][lp].terms.items()):
            if sum(a * e for a, e in zip(w, exps)) <= w[lp] - 2:
                bad.append(TaylorViolation(l, lp, exps, c * math.prod(math.factorial(e) for e in exps)))
    scans = {}
    if scan:
        gauge = build_gauge(w)
        for l, lp in itertools.product(range(Z.dim), repeat=2):
            if w[l] == 1 and w[lp] >= 3 and Z.zeta[l][lp]:
                scans[f"{l + 1},{lp + 1}"] = symbol_scan(Z.zeta[l][lp], w[lp] - 1, Z.horizontal, gauge, n_max, settings)
    return WellAdaptedReport(tuple(bad), scans)


@dataclass(frozen=True, eq=False)
class RepairResult:
    change: CoordinateChange
    coefficients: dict
    zeta: ZetaTable

    def to_dict(self) -> dict:
        return {
            "identity": self.change.is_identity(),
            "change": self.change.render(),
            "coefficients": {f"{l + 1},{lp + 1},{i + 1}": str(a) for (l, lp, i), a in sorted(self.coefficients.items())},
        }


def step3_repair(Z: ZetaTable) -> RepairResult:
    """Quadratic change ``y_l' = x_l' - 1/2 sum a[l, l', i] x_l x_i`` for weight-3 ``l'``.

    ``a[l, l', i]`` is the ``x_i`` coefficient of ``zeta[l][l']`` with ``l``,
    ``i`` horizontal. The new coordinate fields commute because ``a`` is
    symmetric in ``(l, i)``, which is checked exactly.
    """
    w = Z.weights
    if Z.step > 3:
        raise RepairError("the quadratic repair is only available up to step 3")
    q = Z.dim
    h = [l for l in range(q) if w[l] == 1]
    top = [l for l in range(q) if w[l] == 3]
    a = {}
    for l, lp, i in itertools.product(h, top, h):
        e = [0] * q
        e[i] = 1
        c = Z.zeta[l][lp].coefficient(e)
        if c:
            a[(l, lp, i)] = c
    asym = [
        (l + 1, lp + 1, i + 1) for l, lp, i in itertools.product(h, top, h)
        if l < i and a.get((l, lp, i), 0) != a.get((i, lp, l), 0)
    ]
    if asym:
        raise RepairError("first-order coefficients are not symmetric; the flag cannot be regular", asym)
    xs = Polynomial.variables(q)
    fwd, inv = list(xs), list(xs)
    for (l, lp, i), c in a.items():
        term = (xs[l] * xs[i]).scale(c / 2)
        fwd[lp] = fwd[lp] - term
        inv[lp] = inv[lp] + term
    change = CoordinateChange(tuple(fwd), tuple(inv))
    if any(change.roundtrip_residual()):
        raise RepairError("repair change is not invertible")
    fields = tuple(change.push_field(Y) for Y in Z.fields)
    return RepairResult(change, a, ZetaTable.from_fields(fields, w))


# ---------------------------------------------------------------------------
# named families


def counterexample() -> FieldFamily:
    """``Z1 = d1 + x1 d3``, ``Z2 = d2 + x4 d3 + x5 d4``, ``Z3 = d5`` in R^5."""
    q = 5
    x = Polynomial.variables(q)
    one, zero = Polynomial.const(q, 1), Polynomial.zero(q)
    Z1 = PolyVectorField([one, zero, x[0], zero, zero])
    Z2 = PolyVectorField([zero, one, x[3], x[4], zero])
    Z3 = PolyVectorField([zero, zero, zero, zero, one])
    return FieldFamily(q, (Z1, Z2, Z3), (0,) * q, (1, 1, 3, 2, 1), "counterexample")


def counterexample_curve(t) -> tuple:
    """Dilation-invariant curve ``x1 = t, x3 = t**3`` along which ``Z1 rho`` blows up."""
    return (t, 0, t**3, 0, 0)


def counterexample_limit() -> float:
    """Limit of ``rho * |Z1 rho|`` along the curve as ``t -> 0+``."""
    return 2 ** (-5 / 6) / 3


def step2_family() -> FieldFamily:
    """``Z1 = d1``, ``Z2 = d2 + x1 d3`` in R^3."""
    q = 3
    x = Polynomial.variables(q)
    one, zero = Polynomial.const(q, 1), Polynomial.zero(q)
    return FieldFamily(q, (PolyVectorField([one, zero, zero]), PolyVectorField([zero, one, x[0]])),
                       (0,) * q, (1, 1, 2), "step2")


def irregular_family() -> FieldFamily:
    """``d1`` and ``x1 d2`` in R^2: rank drops on ``x1 = 0``."""
    x = Polynomial.variables(2)
    one, zero = Polynomial.const(2, 1), Polynomial.zero(2)
    return FieldFamily(2, (PolyVectorField([one, zero]), PolyVectorField([zero, x[0]])), (0, 0), None, "irregular")


def group_family(A: StratifiedAlgebra) -> FieldFamily:
    """Horizontal left-invariant fields of a group, based at the identity."""
    frame = left_invariant_fields(A)
    return FieldFamily(A.dim, frame.horizontal, (0,) * A.dim, A.weights, A.name or "group")


def named_family(name: str) -> FieldFamily:
    from .algebra import preset

    if name == "counterexample":
        return counterexample()
    if name == "step2":
        return step2_family()
    if name == "irregular":
        return irregular_family()
    if name.startswith("group:"):
        return group_family(preset(name[len("group:"):]))
    raise ValueError(f"unknown family {name!r}")


# ---------------------------------------------------------------------------
# radial field


@dataclass(frozen=True, eq=False)
class GeneralRadial:
    zeta: ZetaTable
    sigma: tuple[Polynomial, ...]
    sigma_tilde: tuple[Polynomial, ...]

    @property
    def weights(self) -> tuple[int, ...]:
        return self.zeta.weights

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.weights)

    @cached_property
    def coordinate_form(self) -> PolyVectorField:
        xs = Polynomial.variables(self.zeta.dim)
        return PolyVectorField(xs[k].scale(a) + s for k, (a, s) in enumerate(zip(self.weights, self.sigma_tilde)))

    def framed_form(self) -> PolyVectorField:
        return combine_fields(self.sigma, self.zeta.fields)


def general_radial(Z: ZetaTable) -> GeneralRadial:
    """``sigma`` with ``sum sigma_l Y_l = sum (w_k x_k + sigma~_k) d_k``.

    ``sigma`` solves ``sigma (Id + zeta) = (w_k x_k)`` by fixed-point
    iteration truncated at weighted degree ``m + 1``; ``sigma~`` is the exact
    residual of the truncated solution.
    """
    q, w = Z.dim, Z.weights
    m = Z.step
    xs = Polynomial.variables(q)
    target = [xs[k].scale(w[k]) for k in range(q)]
    sigma = list(target)
    for _ in range(m + 2):
        new = [
            (target[k] - sum((sigma[l] * Z.zeta[l][k] for l in range(q) if Z.zeta[l][k]), Polynomial.zero(q)))
            .truncate(w, m + 1)
            for k in range(q)
        ]
        if new == sigma:
            break
        sigma = new
    tilde = [
        sum((sigma[l] * Z.zeta[l][k] for l in range(q) if Z.zeta[l][k]), Polynomial.zero(q)) + sigma[k] - target[k]
        for k in range(q)
    ]
    return GeneralRadial(Z, tuple(sigma), tuple(tilde))


@dataclass(frozen=True)
class RadialQuality:
    div_exact_zero: bool
    lambda_exact_one: bool
    scans: dict

    @property
    def verdicts(self) -> dict[str, str]:
        return {k: r.verdict for k, r in self.scans.items()}

    @property
    def ok(self) -> bool:
        return all(v == "bounded" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "div_minus_Q_identically_zero": self.div_exact_zero,
            "lambda_identically_one": self.lambda_exact_one,
            "verdicts": self.verdicts,
            "ok": self.ok,
            "scans": {k: r.to_dict() for k, r in self.scans.items()},
        }


def radial_parts(R: GeneralRadial, gauge: Gauge | None = None) -> tuple[Polynomial, GaugeExpr, GaugeExpr]:
    """``div R - Q``, ``lambda - 1`` and ``R lambda`` exactly."""
    gauge = gauge or build_gauge(R.weights)
    V = R.coordinate_form
    div = V.divergence() - R.homogeneous_dimension
    excess = _apply_poly(V, gauge.rho_w) - gauge.rho_w.scale(gauge.w)
    lam1 = GaugeExpr(gauge, {-gauge.w: excess.scale(Fraction(1, gauge.w))})
    return div, lam1, lam1.apply(V)


def radial_quality_checks(R: GeneralRadial, gauge: Gauge | None = None,
                          settings: ScanSettings = ScanSettings(), n_max: int = 1) -> RadialQuality:
    """Shell scans of ``div R - Q``, ``lambda - 1`` and ``R lambda`` at order 1,
    plus ``sigma_l`` at order ``w_l`` and ``sigma~_k`` at order ``w_k + 1``."""
    gauge = gauge or build_gauge(R.weights)
    div, lam1, rlam = radial_parts(R, gauge)
    H = R.zeta.horizontal
    scans: dict[str, SymbolReport] = {
        "div": symbol_scan(div, 1, H, gauge, 0, settings),
        "lambda": symbol_scan(lam1, 1, H, gauge, 0, settings),
        "R_lambda": symbol_scan(rlam, 1, H, gauge, 0, settings),
    }
    for l, s in enumerate(R.sigma):
        scans[f"sigma_{l + 1}"] = symbol_scan(s, R.weights[l], H, gauge, n_max, settings)
    for k, s in enumerate(R.sigma_tilde):
        scans[f"sigma_tilde_{k + 1}"] = symbol_scan(s, R.weights[k] + 1, H, gauge, n_max, settings)
    return RadialQuality(div.is_zero(), lam1.is_zero(), scans)


def gauge_symbol_scan(family: FieldFamily, weights: Sequence[int], alpha: float = 1, n_max: int = 3,
                      settings: ScanSettings = ScanSettings(mode="gauge")) -> SymbolReport:
    """Scan ``rho`` along the family's horizontal fields."""
    gauge = build_gauge(weights)
    return symbol_scan(gauge.power(1), alpha, family.fields, gauge, n_max, settings)


def curve_product(family: FieldFamily, weights: Sequence[int], field_index: int, ts: Sequence) -> list[float]:
    """``rho * |X rho|`` at the curve points ``counterexample_curve(t)``."""
    gauge = build_gauge(weights)
    e = grad_gauge_symbolic(gauge, family.fields, (field_index,))
    return [gauge.evaluate(p) * abs(e.evaluate(p)) for p in (counterexample_curve(float(t)) for t in ts)]


# ---------------------------------------------------------------------------
# JSON


def _poly_in(obj, q: int) -> Polynomial:
    return polynomial_from_terms(obj, q)


def family_from_dict(data: Mapping, check: bool = True) -> FieldFamily:
    import jsonschema

    from .algebra import load_schema

    if check:
        jsonschema.validate(data, load_schema("family"))
    q = int(data["dim"])
    fields = []
    for f in data["fields"]:
        if isinstance(f, Mapping):
            comps = [Polynomial.zero(q)] * q
            for key, poly in f.items():
                i = int(key) - 1
                if not 0 <= i < q:
                    raise ValueError(f"coordinate index {key} out of range")
                comps[i] = _poly_in(poly, q)
        else:
            if len(f) != q:
                raise ValueError("a field needs one polynomial per coordinate")
            comps = [_poly_in(p, q) for p in f]
        fields.append(PolyVectorField(comps))
    base = data.get("base_point") or [0] * q
    weights = data.get("weights")
    return FieldFamily(q, tuple(fields), tuple(to_fraction(str(a)) for a in base),
                       tuple(weights) if weights else None, data.get("name", ""))


def family_to_dict(F: FieldFamily) -> dict:
    out = {
        "dim": F.dim,
        "fields": [[polynomial_to_terms(c) for c in X.coeffs] for X in F.fields],
        "base_point": [str(a) for a in F.base_point],
    }
    if F.weights is not None:
        out["weights"] = list(F.weights)
    if F.name:
        out["name"] = F.name
    return out


def load_family(source: str | Path) -> FieldFamily:
    p = Path(source)
    if p.suffix == ".json" or p.exists():
        return family_from_dict(json.loads(p.read_text()))
    return named_family(str(source))


def dump_family(F: FieldFamily, path: str | Path) -> None:
    Path(path).write_text(json.dumps(family_to_dict(F), indent=2, sort_keys=True) + "\n")
