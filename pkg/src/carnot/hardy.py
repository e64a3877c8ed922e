"""Numerical checks of the Hardy inequality and its integration-by-parts core.

Test functions carry exact symbolic horizontal derivatives:

* :class:`ExpGauss` is ``P(x) * exp(-lam * rho**w)``. Derivatives stay of the
  form ``polynomial * exp(-lam * rho**w)`` because ``rho**w`` is polynomial.
* :class:`Bump` is ``P(x) * b((rho - r0) / (r1 - r0))`` with the smooth
  profile ``b(u) = exp(-1 / (u (1 - u)))`` on ``(0, 1)``. It vanishes for
  ``rho <= r0`` and ``rho >= r1``. Derivatives are sums
  ``sum_j G_j * b^(j)(u)`` with gauge expressions ``G_j``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial as P1
from scipy.integrate import quad

from .algebra import abelian
from .gauge import Gauge, build_gauge
from .group import LeftInvariantFrame, RadialField, left_invariant_fields, radial_field
from .linalg import to_fraction
from .poly import (
    CompiledGaugeExpr,
    CompiledPolynomial,
    GaugeExpr,
    Polynomial,
    PolyVectorField,
    _apply_poly,
    dilation_substitution,
    parse_polynomial,
)
from .quadrature import QuadratureSpec, integrate

Evaluator = Callable[[np.ndarray], np.ndarray]


class HardyPreconditionError(ValueError):
    """Requested check lies outside the range where it is defined."""


def _key(gamma, fields) -> tuple:
    return (tuple(gamma), tuple(fields))


# ---------------------------------------------------------------------------
# test functions


class ExpGauss:
    """``P(x) * exp(-lam * rho**w)``."""

    tail = 120.0

    def __init__(self, P: Polynomial, gauge: Gauge, lam=1):
        self.P = P
        self.gauge = gauge
        self.lam = to_fraction(lam)
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"ExpGauss(({self.P}) * exp(-{self.lam} rho^{self.gauge.w}))"

    def coefficient(self, gamma: Sequence[int], fields: Sequence[PolyVectorField]) -> Polynomial:
        key = _key(gamma, fields)
        if key not in self._cache:
            c = self.P
            for i in reversed(gamma):
                Y = fields[i]
                c = _apply_poly(Y, c) - (c * _apply_poly(Y, self.gauge.rho_w)).scale(self.lam)
            self._cache[key] = c
        return self._cache[key]

    def derivative(self, gamma: Sequence[int], fields: Sequence[PolyVectorField]) -> Evaluator:
        cp = CompiledPolynomial(self.coefficient(gamma, fields))
        rw = CompiledPolynomial(self.gauge.rho_w)
        lam = float(self.lam)
        return lambda X: cp(X) * np.exp(-lam * rw(X))

    def value(self, X: np.ndarray) -> np.ndarray:
        return self.derivative((), ())(X)

    def support(self) -> tuple[float, float]:
        return 0.0, (self.tail / float(self.lam)) ** (1.0 / self.gauge.w)

    def dilate(self, r) -> "ExpGauss":
        """``f o delta_{1/r}``."""
        r = to_fraction(r)
        P = dilation_substitution(self.P, self.gauge.weights, 1 / r)
        return ExpGauss(P, self.gauge, self.lam / r**self.gauge.w)


def _bump_numerators(j_max: int) -> list[P1]:
    """``b^(j)(u) = N_j(u) / D(u)**(2j) * exp(-1/D)`` with ``D = u (1 - u)``."""
    D = P1([0, 1, -1])
    dD = D.deriv()
    N = [P1([1])]
    for j in range(j_max):
        Nj = N[-1]
        N.append(Nj.deriv() * D * D - 2 * j * Nj * D * dD + Nj * dD)
    return N


def bump_profile(u: np.ndarray, j: int = 0) -> np.ndarray:
    """``j``-th derivative of ``exp(-1/(u(1-u)))``, zero outside ``(0, 1)``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    if inside.any():
        ui = u[inside]
        D = ui * (1 - ui)
        N = _bump_numerators(j)[j]
        with np.errstate(under="ignore"):
            out[inside] = N(ui) * np.exp(-1.0 / D - 2 * j * np.log(D))
    return out


class Bump:
    """``P(x) * b((rho - r0) / (r1 - r0))``, supported in the gauge annulus ``[r0, r1]``."""

    def __init__(self, P: Polynomial, gauge: Gauge, r0, r1):
        self.P = P
        self.gauge = gauge
        self.r0, self.r1 = to_fraction(r0), to_fraction(r1)
        if not 0 < self.r0 < self.r1:
            raise ValueError("bump needs 0 < r0 < r1")
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"Bump(({self.P}) * b(rho in [{self.r0}, {self.r1}]))"

    def terms(self, gamma: Sequence[int], fields: Sequence[PolyVectorField]) -> dict[int, GaugeExpr]:
        key = _key(gamma, fields)
        if key in self._cache:
            return self._cache[key]
        if not gamma:
            out = {0: GaugeExpr.from_polynomial(self.gauge, self.P)}
        else:
            inner = self.terms(tuple(gamma[1:]), fields)
            Y = fields[gamma[0]]
            y_rho = self.gauge.power(1).apply(Y) * (1 / (self.r1 - self.r0))
            out = {}
            for j, G in inner.items():
                for jj, term in ((j, G.apply(Y)), (j + 1, G * y_rho)):
                    out[jj] = out[jj] + term if jj in out else term
            out = {j: G for j, G in out.items() if not G.is_zero()}
        self._cache[key] = out
        return out

    def derivative(self, gamma: Sequence[int], fields: Sequence[PolyVectorField]) -> Evaluator:
        parts = [(j, CompiledGaugeExpr(G)) for j, G in sorted(self.terms(tuple(gamma), fields).items())]
        r0, width = float(self.r0), float(self.r1 - self.r0)
        gauge = self.gauge

        def ev(X: np.ndarray) -> np.ndarray:
            X = np.asarray(X, dtype=float)
            rho = gauge.evaluate_array(X)
            u = (rho - r0) / width
            out = np.zeros(X.shape[1:])
            inside = (u > 0) & (u < 1)
            if not inside.any():
                return out
            Xi, ri, ui = X[:, inside], rho[inside], u[inside]
            acc = np.zeros(ui.shape)
            for j, G in parts:
                acc += G(Xi, ri) * bump_profile(ui, j)
            out[inside] = acc
            return out

        return ev

    def value(self, X: np.ndarray) -> np.ndarray:
        return self.derivative((), ())(X)

    def support(self) -> tuple[float, float]:
        return float(self.r0), float(self.r1)

    def dilate(self, r) -> "Bump":
        r = to_fraction(r)
        P = dilation_substitution(self.P, self.gauge.weights, 1 / r)
        return Bump(P, self.gauge, self.r0 * r, self.r1 * r)


def smooth_step(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``S(t) = psi(t) / (psi(t) + psi(1-t))`` with ``psi = exp(-1/t)``, and ``S'``."""
    t = np.asarray(t, dtype=float)
    S = np.where(t >= 1, 1.0, 0.0)
    dS = np.zeros_like(t)
    mid = (t > 0) & (t < 1)
    if mid.any():
        tm = t[mid]
        with np.errstate(over="ignore"):
            Sm = 1.0 / (1.0 + np.exp(1.0 / tm - 1.0 / (1.0 - tm)))
        S = S.copy()
        S[mid] = Sm
        dS[mid] = (1.0 / tm**2 + 1.0 / (1.0 - tm) ** 2) * Sm * (1.0 - Sm)
    return S, dS


class RadialProfile:
    """Euclidean radial function ``|x|**-a * eta(log |x|)`` on R^n.

    ``eta`` rises on ``[-3L, -2L]``, equals 1 on ``[-2L, -L]`` and falls to 0
    on ``[-L, 0]``; ``a = (n - 2) / 2`` makes it a near-optimizer for the
    Euclidean Hardy constant.
    """

    def __init__(self, n: int, L: float, a: float | None = None):
        self.n = n
        self.L = float(L)
        self.a = (n - 2) / 2 if a is None else float(a)
        self.gauge = build_gauge((1,) * n)

    def eta(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        L = self.L
        s1, d1 = smooth_step((u + 3 * L) / L)
        s2, d2 = smooth_step(-u / L)
        return s1 * s2, (d1 * s2 - s1 * d2) / L

    def derivative(self, gamma: Sequence[int], fields: Sequence[PolyVectorField]) -> Evaluator:
        if len(gamma) > 1:
            raise NotImplementedError("radial profiles provide first derivatives only")
        a = self.a
        if not gamma:
            def ev(X):
                r = np.sqrt((np.asarray(X) ** 2).sum(axis=0))
                e, _ = self.eta(np.log(r))
                return r**-a * e
            return ev
        Y = fields[gamma[0]]
        coeffs = [CompiledPolynomial(c) for c in Y.coeffs]

        def ev(X):
            X = np.asarray(X, dtype=float)
            r = np.sqrt((X**2).sum(axis=0))
            e, de = self.eta(np.log(r))
            fprime = r ** (-a - 1) * (de - a * e)
            direction = sum(c(X) * X[k] for k, c in enumerate(coeffs)) / r
            return fprime * direction

        return ev

    def value(self, X):
        return self.derivative((), ())(X)

    def support(self) -> tuple[float, float]:
        return math.exp(-3 * self.L), 1.0

    def ratio_1d(self) -> float:
        """``int eta^2 / (int eta'^2 + a^2 int eta^2)`` by adaptive 1-D quadrature."""
        L = self.L
        pts = [-3 * L, -2 * L, -L, 0.0]
        e2 = sum(quad(lambda u: float(self.eta(np.array([u]))[0][0] ** 2), a, b, limit=200)[0]
                 for a, b in zip(pts, pts[1:]))
        d2 = sum(quad(lambda u: float(self.eta(np.array([u]))[1][0] ** 2), a, b, limit=200)[0]
                 for a, b in zip(pts, pts[1:]))
        return e2 / (d2 + self.a**2 * e2)


def near_optimizer(n: int, L: float) -> RadialProfile:
    return RadialProfile(n, L)


_FUNC = re.compile(
    r"^\s*(?:(?P<poly>.*?)\s*\*\s*)?(?:(?P<exp>exp-gauge)(?:\((?P<lam>[^)]*)\))?"
    r"|bump\(\s*(?P<r0>[^,\s]+)\s*,\s*(?P<r1>[^)\s]+)\s*\))\s*$"
)


def parse_test_function(text: str, gauge: Gauge):
    """``"<polynomial> * exp-gauge"`` or ``"<polynomial> * bump(r0, r1)"``."""
    m = _FUNC.match(text)
    if not m:
        raise ValueError(f"cannot parse test function {text!r}")
    poly = m.group("poly")
    P = parse_polynomial(poly, gauge.dim) if poly else Polynomial.const(gauge.dim, 1)
    if m.group("exp"):
        lam = Fraction(m.group("lam")) if m.group("lam") else Fraction(1)
        return ExpGauss(P, gauge, lam)
    return Bump(P, gauge, Fraction(m.group("r0")), Fraction(m.group("r1")))


# ---------------------------------------------------------------------------
# integrals


def _support(f, spec: QuadratureSpec) -> tuple[float, float]:
    return spec.radial_range or f.support()


def weighted_l2(f, s: float, spec: QuadratureSpec, support=None) -> tuple[float, float]:
    """``int |f|^2 / rho^(2s)``."""
    gauge = f.gauge
    ev = f.derivative((), ())

    def fn(X):
        rho = gauge.evaluate_array(X)
        v = ev(X)
        return v * v / rho ** (2 * s) if s else v * v

    res = integrate(fn, spec, gauge, support or _support(f, spec))
    return res.scalar()


def derivative_blocks(f, s: int, fields: Sequence[PolyVectorField], spec: QuadratureSpec,
                      support=None) -> tuple[list[float], list[float]]:
    """``[sum_{|g| = k} int |Y^g f|^2 for k = 0..s]`` and their error estimates."""
    gammas = [g for k in range(s + 1) for g in itertools.product(range(len(fields)), repeat=k)]
    evs = [f.derivative(g, fields) for g in gammas]

    def fn(X):
        return np.stack([ev(X) ** 2 for ev in evs])

    res = integrate(fn, spec, f.gauge, support or _support(f, spec))
    blocks, errs = [0.0] * (s + 1), [0.0] * (s + 1)
    for g, v, e in zip(gammas, res.value, res.error):
        blocks[len(g)] += float(v)
        errs[len(g)] += float(e)
    return blocks, errs


def sobolev_sq_norm(f, s: int, fields: Sequence[PolyVectorField], spec: QuadratureSpec) -> float:
    """Full Sobolev norm squared over all non-commutative multi-indices ``|g| <= s``."""
    if s < 0 or int(s) != s:
        raise HardyPreconditionError("Sobolev order must be a non-negative integer")
    blocks, _ = derivative_blocks(f, int(s), fields, spec)
    return math.fsum(blocks)


@dataclass(frozen=True)
class HardyReport:
    s: int
    lhs: float
    rhs_full: float
    rhs_homogeneous: float
    ratio_full: float
    ratio_homogeneous: float
    blocks: tuple[float, ...]
    lhs_error: float
    rhs_error: float

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return a / b


def check_hardy_range(s, Q: int) -> int:
    if int(s) != s or s < 0:
        raise HardyPreconditionError(f"s must be a non-negative integer, got {s}")
    if not s < Q / 2:
        raise HardyPreconditionError(f"s = {s} is outside the range s < Q/2 = {Q / 2}")
    return int(s)


def hardy_report(f, s: int, frame: LeftInvariantFrame, spec: QuadratureSpec) -> HardyReport:
    s = check_hardy_range(s, frame.algebra.homogeneous_dimension)
    lhs, lhs_err = weighted_l2(f, s, spec)
    blocks, errs = derivative_blocks(f, s, frame.horizontal, spec)
    full = math.fsum(blocks)
    return HardyReport(
        s, lhs, full, blocks[s], _ratio(lhs, full), _ratio(lhs, blocks[s]),
        tuple(blocks), lhs_err, math.fsum(errs),
    )


@dataclass(frozen=True)
class IBPReport:
    s: int
    lhs: float
    rhs: float
    residual: float
    lhs_error: float
    rhs_error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ibp_residual(phi, s: int, frame: LeftInvariantFrame, spec: QuadratureSpec,
                 radial: RadialField | None = None) -> IBPReport:
    """Relative residual of ``(Q/2 - s) int phi^2/rho^2s = -sum_l int sigma_l phi Y_l phi / rho^2s``."""
    if not isinstance(phi, Bump):
        raise HardyPreconditionError("the integration-by-parts identity needs an annular test function")
    if int(s) != s or s < 1:
        raise HardyPreconditionError("s must be an integer >= 1")
    A = frame.algebra
    radial = radial or radial_field(A)
    Q = A.homogeneous_dimension
    gauge = phi.gauge
    fields = frame.fields
    ev0 = phi.derivative((), fields)
    evs = [phi.derivative((l,), fields) for l in range(A.dim)]
    sig = [CompiledPolynomial(p) for p in radial.sigma]

    def fn(X):
        rho = gauge.evaluate_array(X)
        w = rho ** (-2 * s)
        v = ev0(X)
        lhs = (Q / 2 - s) * v * v * w
        rhs = -sum(sg(X) * v * ev(X) for sg, ev in zip(sig, evs)) * w
        return np.stack([lhs, rhs])

    res = integrate(fn, spec, gauge, _support(phi, spec))
    lhs, rhs = (float(v) for v in res.value)
    return IBPReport(int(s), lhs, rhs, abs(lhs - rhs) / abs(lhs), float(res.error[0]), float(res.error[1]))


@dataclass(frozen=True)
class ScalingReport:
    r: float
    s: int
    Q: int
    lhs_ratio: float
    lhs_expected: float
    block_ratios: tuple[float, ...]
    block_expected: tuple[float, ...]
    haar_ratio: float
    haar_expected: float

    def max_relative_error(self) -> float:
        errs = [abs(self.lhs_ratio / self.lhs_expected - 1), abs(self.haar_ratio / self.haar_expected - 1)]
        errs += [abs(a / b - 1) for a, b in zip(self.block_ratios, self.block_expected) if b]
        return max(errs)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def homogeneity_check(f, s: int, r, frame: LeftInvariantFrame, spec: QuadratureSpec) -> ScalingReport:
    """Compare ``f`` with ``f o delta_{1/r}`` on a common radial range.

    Expected: the weighted integral scales as ``r**(Q - 2s)``, the ``|a|``-block
    of the Sobolev norm as ``r**(Q - 2|a|)``, and ``int phi(delta_r x) dx`` as
    ``r**-Q``.
    """
    r = to_fraction(r)
    A = frame.algebra
    Q = A.homogeneous_dimension
    rf = float(r)
    g = f.dilate(r)
    h = f.dilate(1 / r)
    t0, t1 = f.support()
    common = spec.radial_range or (min(t0, t0 * rf, t0 / rf), max(t1, t1 * rf, t1 / rf))
    if spec.radial_points is None and spec.method == "gauge-polar":
        # keep the node density of the undilated support on the wider common range
        stretch = (common[1] - common[0]) / (t1 - t0)
        spec = replace(spec, radial_points=math.ceil(1.5 * stretch * spec.points))
    lhs_f, _ = weighted_l2(f, s, spec, common)
    lhs_g, _ = weighted_l2(g, s, spec, common)
    bf, _ = derivative_blocks(f, s, frame.horizontal, spec, common)
    bg, _ = derivative_blocks(g, s, frame.horizontal, spec, common)
    # int phi(delta_r x) dx with phi = f^2
    haar_f, _ = weighted_l2(f, 0, spec, common)
    haar_h, _ = weighted_l2(h, 0, spec, common)
    return ScalingReport(
        rf, s, Q,
        lhs_g / lhs_f, rf ** (Q - 2 * s),
        tuple(b / a for a, b in zip(bf, bg)), tuple(rf ** (Q - 2 * k) for k in range(s + 1)),
        haar_h / haar_f, rf ** (-Q),
    )


def dyadic_shell_profile(f, s: float, shells: int, spec: QuadratureSpec) -> list[float]:
    """``int_{2^-(k+1) < rho < 2^-k} |f|^2 / rho^(2s)`` for ``k = 0..shells-1``."""
    out = []
    for k in range(shells):
        sub = replace(spec, radial_range=(2.0 ** -(k + 1), 2.0**-k))
        out.append(weighted_l2(f, s, sub)[0])
    return out


# ---------------------------------------------------------------------------
# Euclidean anchor


@dataclass(frozen=True)
class EuclidReport:
    n: int
    bound: float
    ratios: tuple[float, ...]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def passes(self, rel: float = 1e-6) -> bool:
        return self.max_ratio <= self.bound * (1 + rel)

    def to_dict(self) -> dict:
        return {"n": self.n, "bound": self.bound, "ratios": list(self.ratios), "max_ratio": self.max_ratio}


def euclid_ratio(f, n: int, spec: QuadratureSpec) -> float:
    """``int |f|^2/|x|^2 / int |grad f|^2`` on R^n."""
    A = abelian(n)
    frame = left_invariant_fields(A)
    lhs, _ = weighted_l2(f, 1, spec)
    blocks, _ = derivative_blocks(f, 1, frame.horizontal, spec)
    return lhs / blocks[1]


def euclid_constant_check(functions: Sequence, n: int, spec: QuadratureSpec) -> EuclidReport:
    if n < 3:
        raise HardyPreconditionError("the Euclidean Hardy inequality needs n >= 3")
    ratios = tuple(euclid_ratio(f, n, spec) for f in functions)
    return EuclidReport(n, 4.0 / (n - 2) ** 2, ratios)


def finite_difference_along(f_eval: Evaluator, V: PolyVectorField, X: np.ndarray, h: float) -> np.ndarray:
    """Central difference of ``f`` along the direction ``V(x)``."""
    D = np.stack([CompiledPolynomial(c)(X) for c in V.coeffs])
    return (f_eval(X + h * D) - f_eval(X - h * D)) / (2 * h)
