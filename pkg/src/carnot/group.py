"""Group law, left-invariant frame and radial field in exponential coordinates.

Everything here is exact: polynomials over the rationals in the coordinates
``x_1 .. x_q`` (0-based variables). Identities are returned as residual
polynomials that must be literally zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from typing import Callable, Iterator, Sequence

from .algebra import StratifiedAlgebra, ad_power, bracket, kappa
from .linalg import to_fraction
from .poly import (
    GaugeExpr,
    Polynomial,
    PolyVectorField,
    apply_field,
    combine_fields,
    dilation_substitution,
    divergence,
    field_bracket,
)


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli numbers with ``B_1 = -1/2``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return Fraction(1)
    # sum_{k<=n} C(n+1, k) B_k = 0
    total = sum(Fraction(_binom(n + 1, k)) * bernoulli(k) for k in range(n))
    return -total / (n + 1)


def _binom(n: int, k: int) -> int:
    return factorial(n) // (factorial(k) * factorial(n - k))


# ---------------------------------------------------------------------------
# word enumeration shared by the frame, the radial field and the identity


def graded_words(A: StratifiedAlgebra, length: int, total_weight: int | None = None,
                 max_weight: int | None = None, suffix: tuple[int, ...] = ()
                 ) -> Iterator[tuple[tuple[int, ...], dict]]:
    """Words whose right-nested bracket (after appending ``suffix``) is nonzero.

    Either the exact total weight or an upper bound may be given; the bound
    applies to the word without the suffix.
    """
    w = A.weights
    q = A.dim
    cap = max_weight if max_weight is not None else (total_weight if total_weight is not None else A.step)

    def rec(prefix: tuple[int, ...], acc: int):
        remaining = length - len(prefix)
        if remaining == 0:
            if total_weight is None or acc == total_weight:
                vec = A.nested_bracket(prefix + suffix)
                if vec:
                    yield prefix, vec
            return
        for l in range(q):
            nw = acc + w[l]
            # each remaining letter adds at least weight 1
            if nw + (remaining - 1) > cap:
                continue
            yield from rec(prefix + (l,), nw)

    yield from rec((), 0)


def _monomial(q: int, word: Sequence[int], coef) -> Polynomial:
    e = [0] * q
    for l in word:
        e[l] += 1
    return Polynomial(q, {tuple(e): coef})


# ---------------------------------------------------------------------------
# BCH


def _dynkin_words(depth: int) -> dict[tuple[int, ...], Fraction]:
    """Dynkin coefficients per right-nested word in letters 0 (= X) and 1 (= Y)."""
    coeffs: dict[tuple[int, ...], Fraction] = {}

    def rec(n: int, pairs: list[tuple[int, int]], total: int):
        if pairs:
            word = tuple(itertools.chain.from_iterable([0] * r + [1] * s for r, s in pairs))
            if len(word) == 1 or word[-1] != word[-2]:
                denom = total
                for r, s in pairs:
                    denom *= factorial(r) * factorial(s)
                c = Fraction((-1) ** (len(pairs) - 1), len(pairs) * denom)
                coeffs[word] = coeffs.get(word, 0) + c
        for r in range(depth - total + 1):
            for s in range(depth - total - r + 1):
                if r + s == 0:
                    continue
                rec(n + 1, pairs + [(r, s)], total + r + s)

    rec(0, [], 0)
    return {k: v for k, v in coeffs.items() if v}


def dynkin_series(x, y, br: Callable, depth: int, add: Callable, scale: Callable, zero):
    """``log(exp x exp y)`` truncated at bracket length ``depth``."""
    cache: dict[tuple[int, ...], object] = {}

    def nested(word):
        if word in cache:
            return cache[word]
        if len(word) == 1:
            val = x if word[0] == 0 else y
        else:
            val = br(x if word[0] == 0 else y, nested(word[1:]))
        cache[word] = val
        return val

    total = zero
    for word, c in sorted(_dynkin_words(depth).items()):
        total = add(total, scale(nested(word), c))
    return total


def bch(A: StratifiedAlgebra, u: Sequence, v: Sequence) -> list:
    """Coordinates of ``mu(u, v)`` (exact for rational input)."""
    exact = all(isinstance(a, (int, Fraction)) for a in itertools.chain(u, v))
    u = [to_fraction(a) for a in u] if exact else [float(a) for a in u]
    v = [to_fraction(a) for a in v] if exact else [float(a) for a in v]
    zero = [Fraction(0) if exact else 0.0] * A.dim
    return dynkin_series(
        u, v, lambda a, b: bracket(A, a, b), A.step,
        lambda a, b: [p + r for p, r in zip(a, b)],
        lambda a, c: [p * (c if exact else float(c)) for p in a],
        zero,
    )


def _poly_bracket(A: StratifiedAlgebra, a: Sequence[Polynomial], b: Sequence[Polynomial]) -> list[Polynomial]:
    n = a[0].nvars
    out = [Polynomial.zero(n) for _ in range(A.dim)]
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if not bj or i == j:
                continue
            sc = A.structure(i, j)
            if not sc:
                continue
            prod = ai * bj
            for k, c in sc.items():
                out[k] = out[k] + prod.scale(c)
    return out


@dataclass(frozen=True, eq=False)
class GroupLaw:
    """``mu[l]`` is a polynomial in ``(u_1..u_q, v_1..v_q)``."""

    algebra: StratifiedAlgebra
    mu: tuple[Polynomial, ...]

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def evaluate(self, u: Sequence, v: Sequence) -> list:
        pt = list(u) + list(v)
        return [p.evaluate(pt) for p in self.mu]

    def compose(self, a: Sequence, b: Sequence) -> list[Polynomial]:
        """``mu(a, b)`` for polynomial (or scalar) arguments."""
        vals = list(a) + list(b)
        return [p.substitute(vals) for p in self.mu]

    def left_translation(self, g: Sequence) -> list[Polynomial]:
        """Polynomials in ``x`` giving ``mu(g, x)``."""
        q = self.dim
        xs = Polynomial.variables(q)
        return self.compose([Polynomial.const(q, to_fraction(a)) for a in g], xs)


def bch_symbolic(A: StratifiedAlgebra) -> GroupLaw:
    q = A.dim
    vs = Polynomial.variables(2 * q)
    u, v = vs[:q], vs[q:]
    mu = dynkin_series(
        u, v, lambda a, b: _poly_bracket(A, a, b), A.step,
        lambda a, b: [p + r for p, r in zip(a, b)],
        lambda a, c: [p.scale(c) for p in a],
        [Polynomial.zero(2 * q)] * q,
    )
    return GroupLaw(A, tuple(mu))


def associativity_residual(law: GroupLaw) -> list[Polynomial]:
    """``mu(mu(u, v), w) - mu(u, mu(v, w))`` in ``3q`` variables."""
    q = law.dim
    xs = Polynomial.variables(3 * q)
    u, v, w = xs[:q], xs[q : 2 * q], xs[2 * q :]
    left = law.compose(law.compose(u, v), w)
    right = law.compose(u, law.compose(v, w))
    return [a - b for a, b in zip(left, right)]


def dilate(A: StratifiedAlgebra, r, x: Sequence) -> list:
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    return [r**w * a for w, a in zip(A.weights, x)]


def automorphism_residual(law: GroupLaw) -> list[Polynomial]:
    """``mu(delta_r u, delta_r v) - delta_r mu(u, v)`` with ``r`` as an extra variable."""
    A = law.algebra
    q = A.dim
    n = 2 * q + 1
    xs = Polynomial.variables(n)
    r = xs[-1]
    w = A.weights
    du = [r ** w[i] * xs[i] for i in range(q)]
    dv = [r ** w[i] * xs[q + i] for i in range(q)]
    lhs = law.compose(du, dv)
    mu = [p.embed(n) for p in law.mu]
    return [a - r ** w[l] * b for l, (a, b) in enumerate(zip(lhs, mu))]


# ---------------------------------------------------------------------------
# left-invariant frame


@dataclass(frozen=True, eq=False)
class LeftInvariantFrame:
    """``fields[l] = d_l + sum_l' zeta[l][l'] d_l'``."""

    algebra: StratifiedAlgebra
    zeta: tuple[tuple[Polynomial, ...], ...]

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @cached_property
    def fields(self) -> tuple[PolyVectorField, ...]:
        q = self.dim
        return tuple(
            PolyVectorField(self.zeta[l][k] + int(k == l) for k in range(q)) for l in range(q)
        )

    @cached_property
    def horizontal(self) -> tuple[PolyVectorField, ...]:
        return self.fields[: self.algebra.layer_dims[0]]


def left_invariant_fields(A: StratifiedAlgebra) -> LeftInvariantFrame:
    """Frame coefficients from the Bernoulli/kappa series."""
    q, w = A.dim, A.weights
    zeta = [[Polynomial.zero(q) for _ in range(q)] for _ in range(q)]
    for n in range(1, A.step):
        c = (-1) ** n * bernoulli(n) / factorial(n)
        if not c:
            continue
        for l in range(q):
            cap = A.step - w[l]
            for word, vec in graded_words(A, n, max_weight=cap, suffix=(l,)):
                for lp, k in vec.items():
                    zeta[l][lp] = zeta[l][lp] + _monomial(q, word, c * k)
    return LeftInvariantFrame(A, tuple(tuple(row) for row in zeta))


def frame_from_group_law(law: GroupLaw) -> LeftInvariantFrame:
    """Jacobian of ``mu(x, v)`` in ``v`` at ``v = 0``, minus the identity."""
    q = law.dim
    xs = Polynomial.variables(q)
    zero = [Polynomial.zero(q)] * q
    zeta = []
    for l in range(q):
        row = []
        for lp in range(q):
            d = law.mu[lp].diff(q + l)
            val = d.substitute(xs + zero)
            row.append(val - int(l == lp))
        zeta.append(tuple(row))
    return LeftInvariantFrame(law.algebra, tuple(zeta))


def frame_bracket_residuals(frame: LeftInvariantFrame) -> dict[tuple[int, int], PolyVectorField]:
    """``[Y_i, Y_j] - sum_k c_ij^k Y_k`` for every ``i < j``."""
    A = frame.algebra
    F = frame.fields
    q = A.dim
    out = {}
    for i in range(q):
        for j in range(i + 1, q):
            lhs = field_bracket(F[i], F[j])
            coeffs = [Polynomial.const(q, A.structure_constant(i, j, k)) for k in range(q)]
            out[(i, j)] = lhs - combine_fields(coeffs, F)
    return out


def left_invariance_residual(law: GroupLaw, frame: LeftInvariantFrame, l: int, f: Polynomial,
                             g: Sequence) -> Polynomial:
    """``(Y_l f)(mu(g, x)) - Y_l(f o mu(g, .))(x)``."""
    Lg = law.left_translation(g)
    Y = frame.fields[l]
    lhs = apply_field(Y, f).substitute(Lg)
    rhs = apply_field(Y, f.substitute(Lg))
    return lhs - rhs


def dexp(A: StratifiedAlgebra, v: Sequence, w: Sequence) -> list:
    """Coordinates of ``d exp|_v (w)`` in the left-invariant frame."""
    exact = all(isinstance(a, (int, Fraction)) for a in itertools.chain(v, w))
    conv = to_fraction if exact else float
    v, w = [conv(a) for a in v], [conv(a) for a in w]
    total = [conv(0)] * len(w)
    for n in range(A.step):
        c = conv(Fraction((-1) ** n, factorial(n + 1)))
        term = ad_power(A, v, w, n)
        total = [t + c * a for t, a in zip(total, term)]
    return total


# ---------------------------------------------------------------------------
# radial field


def coordinate_radial_field(A: StratifiedAlgebra) -> PolyVectorField:
    """``sum_l w_l x_l d_l``."""
    q = A.dim
    xs = Polynomial.variables(q)
    return PolyVectorField(xs[l].scale(A.weights[l]) for l in range(q))


@dataclass(frozen=True, eq=False)
class RadialField:
    algebra: StratifiedAlgebra
    sigma: tuple[Polynomial, ...]
    coordinate_form: PolyVectorField

    def reconstruct(self, frame: LeftInvariantFrame) -> PolyVectorField:
        return combine_fields(self.sigma, frame.fields)


def radial_sigma(A: StratifiedAlgebra) -> tuple[Polynomial, ...]:
    q, w = A.dim, A.weights
    xs = Polynomial.variables(q)
    sigma = [xs[l].scale(w[l]) for l in range(q)]
    for n in range(1, A.step):
        c = Fraction((-1) ** n, factorial(n + 1))
        for word, vec in graded_words(A, n + 1, max_weight=A.step):
            weight_last = w[word[-1]]
            for l, k in vec.items():
                sigma[l] = sigma[l] + _monomial(q, word, c * weight_last * k)
    return tuple(sigma)


def radial_field(A: StratifiedAlgebra) -> RadialField:
    return RadialField(A, radial_sigma(A), coordinate_radial_field(A))


def radial_sigma_low_step(A: StratifiedAlgebra, corrected: bool = False) -> tuple[Polynomial, ...]:
    """Closed forms for step at most 4, written with first-layer corrections only.

    The literal step-4 form puts ``-1/2`` on every ``[V_1, V_j]`` correction.
    Expanding the general series shows the pair ``(l1, l2)`` really carries
    ``-(w_l2 - 1)/2``, which differs once ``l2`` lies in the third layer;
    ``corrected=True`` uses that coefficient.
    """
    m = A.step
    if m > 4:
        raise ValueError("closed-form radial field is only available for step <= 4")
    q, w = A.dim, A.weights
    n = A.cumulative_dims
    xs = Polynomial.variables(q)
    sigma = [xs[l].scale(w[l]) for l in range(q)]
    if m >= 3:
        upper = n[2] if m == 3 else n[3]
        for a in range(n[1]):
            for b in range(n[1], upper):
                half = Fraction(w[b] - 1, 2) if corrected else Fraction(1, 2)
                for k, c in A.structure(a, b).items():
                    sigma[k] = sigma[k] - (xs[a] * xs[b]).scale(c * half)
    if m == 4:
        for a in range(n[1]):
            for b in range(n[1]):
                for c_ in range(n[1], n[2]):
                    for k, c in A.nested_bracket((a, b, c_)).items():
                        sigma[k] = sigma[k] + (xs[a] * xs[b] * xs[c_]).scale(c / 6)
    return tuple(sigma)


def remarkable_identity_residual(A: StratifiedAlgebra, lp: int, frame: LeftInvariantFrame | None = None) -> Polynomial:
    """Left side minus right side of the commutator identity for column ``lp``."""
    frame = frame or left_invariant_fields(A)
    q, w = A.dim, A.weights
    zeta = frame.zeta
    xs = Polynomial.variables(q)
    lhs = Polynomial.zero(q)
    for n in range(1, A.step):
        c = Fraction((-1) ** n, factorial(n + 1))
        for word, vec in graded_words(A, n + 1, max_weight=A.step):
            inner = Polynomial.const(q, vec.get(lp, 0))
            for l, k in vec.items():
                if zeta[l][lp]:
                    inner = inner + zeta[l][lp].scale(k)
            if inner:
                lhs = lhs + _monomial(q, word, c * w[word[-1]]) * inner
    rhs = Polynomial.zero(q)
    for l in range(q):
        if zeta[l][lp]:
            rhs = rhs - (xs[l] * zeta[l][lp]).scale(w[l])
    return lhs - rhs


def euler_gauge_residuals(A: StratifiedAlgebra, gauge, frame: LeftInvariantFrame | None = None,
                          radial: RadialField | None = None) -> tuple[Polynomial, Polynomial]:
    """``R(rho^w) - w rho^w`` in coordinate form and in the sigma-frame form."""
    frame = frame or left_invariant_fields(A)
    radial = radial or radial_field(A)
    rw = gauge.rho_w
    target = rw.scale(gauge.w)
    coord = apply_field(radial.coordinate_form, rw) - target
    framed = apply_field(radial.reconstruct(frame), rw) - target
    return coord, framed


def sigma_homogeneity_residuals(A: StratifiedAlgebra, sigma: Sequence[Polynomial]) -> list[Polynomial]:
    """``sigma_l(delta_r x) - r**w_l sigma_l(x)`` with ``r`` as an extra variable."""
    q, w = A.dim, A.weights
    n = q + 1
    xs = Polynomial.variables(n)
    r = xs[-1]
    dil = [r ** w[i] * xs[i] for i in range(q)]
    return [s.substitute(dil) - r ** w[l] * s.embed(n) for l, s in enumerate(sigma)]


def sublaplacian_apply(frame: LeftInvariantFrame, f):
    """``sum_{l <= n_1} Y_l(Y_l f)`` for a Polynomial or GaugeExpr."""
    total = None
    for Y in frame.horizontal:
        term = apply_field(Y, apply_field(Y, f))
        total = term if total is None else total + term
    return total


def horizontal_derivative(frame_fields: Sequence[PolyVectorField], gamma: Sequence[int], f):
    """``Y_{g_1} ( Y_{g_2} ( ... Y_{g_k} f))`` (innermost field applied first)."""
    for i in reversed(gamma):
        f = apply_field(frame_fields[i], f)
    return f


def identity_residuals(A: StratifiedAlgebra, gauge=None) -> dict[str, list]:
    """Every exact identity as a list of residuals (Polynomial or PolyVectorField) that must vanish."""
    from .gauge import build_gauge

    gauge = gauge or build_gauge(A.weights)
    law = bch_symbolic(A)
    frame = left_invariant_fields(A)
    oracle = frame_from_group_law(law)
    radial = radial_field(A)
    Q = A.homogeneous_dimension
    coord, framed = euler_gauge_residuals(A, gauge, frame, radial)
    out = {
        "associativity": associativity_residual(law),
        "dilation_automorphism": automorphism_residual(law),
        "zeta_oracle": [a - b for ra, rb in zip(frame.zeta, oracle.zeta) for a, b in zip(ra, rb)],
        "frame_brackets": list(frame_bracket_residuals(frame).values()),
        "div_left_invariant": [divergence(Y) for Y in frame.fields],
        "div_radial": [divergence(radial.coordinate_form) - Q],
        "radial_reconstruction": [radial.reconstruct(frame) - radial.coordinate_form],
        "remarkable_identity": [remarkable_identity_residual(A, lp, frame) for lp in range(A.dim)],
        "euler_gauge": [coord, framed],
        "sigma_homogeneity": sigma_homogeneity_residuals(A, radial.sigma),
    }
    if A.step <= 4:
        low = radial_sigma_low_step(A, corrected=A.step == 4)
        out["radial_low_step"] = [a - b for a, b in zip(low, radial.sigma)]
    return out


def identity_suite(A: StratifiedAlgebra, gauge=None) -> dict[str, bool]:
    """Run every exact identity and report which residuals are zero."""
    return {k: all(r.is_zero() for r in v) for k, v in identity_residuals(A, gauge).items()}
