"""Exact multivariate polynomials, polynomial vector fields and gauge expressions.

A :class:`Polynomial` is a sparse map ``exponent tuple -> Fraction``. Variables
are 0-based internally and rendered as ``x1 .. xq``.

A :class:`GaugeExpr` is a finite sum ``sum_i P_i * rho**a_i`` where ``rho`` is
the gauge attached to it (any object with integer ``w`` and polynomial
``rho_w``). Applying a polynomial vector field keeps the form closed because
``V(rho**a) = (a / w) * rho**(a - w) * V(rho**w)``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import to_fraction

Exponent = tuple[int, ...]


def _coerce_scalar(c) -> Fraction:
    if isinstance(c, (float, np.floating)):
        raise TypeError("polynomial coefficients must be exact (int or Fraction)")
    return to_fraction(c)


class Polynomial:
    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, object] | None = None):
        self.nvars = nvars
        clean: dict[Exponent, Fraction] = {}
        if terms:
            for exps, c in terms.items():
                c = _coerce_scalar(c)
                if c:
                    exps = tuple(exps)
                    if len(exps) != nvars:
                        raise ValueError(f"exponent {exps} does not have {nvars} entries")
                    clean[exps] = clean.get(exps, 0) + c
            clean = {k: v for k, v in clean.items() if v}
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, c) -> "Polynomial":
        c = _coerce_scalar(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls._raw(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def variables(cls, nvars: int) -> list["Polynomial"]:
        return [cls.var(nvars, i) for i in range(nvars)]

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Polynomial":
        return cls(len(exps), {tuple(exps): c})

    # basic protocol ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(0,) * self.nvars: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {str(self)!r})"

    def __str__(self) -> str:
        return render(self)

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return Polynomial.const(self.nvars, other)

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            nv = out.get(k, 0) + v
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce_scalar(c)
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(self.nvars, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if other.nvars != self.nvars:
            raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                nv = out.get(e, 0) + c1 * c2
                if nv:
                    out[e] = nv
                else:
                    out.pop(e, None)
        return Polynomial._raw(self.nvars, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return self.scale(1 / _coerce_scalar(other))

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.const(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # calculus ---------------------------------------------------------------

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1 :]
                out[ne] = c * k
        return Polynomial._raw(self.nvars, out)

    # structure --------------------------------------------------------------

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def weighted_degree(self, weights: Sequence[int]) -> tuple[float, float]:
        """(min, max) weighted degree; the zero polynomial gives (inf, -inf)."""
        return weighted_degree(self, weights)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.nvars)

    def truncate(self, weights: Sequence[int], max_degree: int) -> "Polynomial":
        """Drop monomials of weighted degree above ``max_degree``."""
        return Polynomial._raw(
            self.nvars,
            {e: c for e, c in self.terms.items() if sum(a * w for a, w in zip(e, weights)) <= max_degree},
        )

    def embed(self, nvars: int, offset: int = 0) -> "Polynomial":
        """View as a polynomial in ``nvars`` variables, shifting indices by ``offset``."""
        pre, post = (0,) * offset, (0,) * (nvars - offset - self.nvars)
        return Polynomial._raw(nvars, {pre + e + post: c for e, c in self.terms.items()})

    # substitution and evaluation -------------------------------------------

    def substitute(self, values: Sequence) -> "Polynomial":
        """Compose with polynomials (or exact scalars) given for each variable."""
        if len(values) != self.nvars:
            raise ValueError(f"need {self.nvars} values, got {len(values)}")
        polys = [v for v in values if isinstance(v, Polynomial)]
        if not polys:
            return self.evaluate(values)
        n = polys[0].nvars
        vals = [v if isinstance(v, Polynomial) else Polynomial.const(n, v) for v in values]
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            key = (i, k)
            if key not in cache:
                cache[key] = vals[i] ** k
            return cache[key]

        result = Polynomial.zero(n)
        for e, c in self.terms.items():
            term = Polynomial.const(n, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def evaluate(self, point: Sequence):
        """Evaluate at a point; exact for rational inputs, float otherwise."""
        if len(point) != self.nvars:
            raise ValueError(f"need {self.nvars} coordinates, got {len(point)}")
        total = 0
        for e, c in self.terms.items():
            term = c
            for x, k in zip(point, e):
                if k:
                    term = term * x**k
            total = total + term
        if isinstance(total, int):
            return Fraction(total)
        return total

    def __call__(self, *point):
        return self.evaluate(point)

    def compile(self) -> "CompiledPolynomial":
        return CompiledPolynomial(self)

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation; ``X`` has shape (nvars, N)."""
        return CompiledPolynomial(self)(X)


class CompiledPolynomial:
    """Float evaluator for a polynomial over arrays of points."""

    def __init__(self, p: Polynomial):
        self.nvars = p.nvars
        items = sorted(p.terms.items())
        self.exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), p.nvars)
        self.coefs = np.array([float(c) for _, c in items])
        self.maxdeg = self.exps.max(axis=0) if len(items) else np.zeros(p.nvars, dtype=np.int64)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        shape = X.shape[1:]
        out = np.zeros(shape)
        if not len(self.coefs):
            return out
        powers = []
        for i in range(self.nvars):
            tab = [np.ones(shape)]
            for _ in range(int(self.maxdeg[i])):
                tab.append(tab[-1] * X[i])
            powers.append(tab)
        for e, c in zip(self.exps, self.coefs):
            term = np.full(shape, c)
            for i, k in enumerate(e):
                if k:
                    term = term * powers[i][k]
            out += term
        return out


def weighted_degree(p: Polynomial, weights: Sequence[int]) -> tuple[float, float]:
    if len(weights) != p.nvars:
        raise ValueError("weights length must equal the variable count")
    if not p.terms:
        return (math.inf, -math.inf)
    degs = [sum(a * w for a, w in zip(e, weights)) for e in p.terms]
    return (min(degs), max(degs))


def dilation_substitution(p: Polynomial, weights: Sequence[int], r) -> Polynomial:
    """``p(delta_r x)`` with ``x_l -> r**w_l * x_l`` for exact ``r``."""
    r = to_fraction(r)
    out = {}
    for e, c in p.terms.items():
        out[e] = c * r ** sum(a * w for a, w in zip(e, weights))
    return Polynomial(p.nvars, out)


# ---------------------------------------------------------------------------
# text rendering and parsing


def _render_monomial(e: Exponent, names: Sequence[str]) -> str:
    parts = []
    for i, k in enumerate(e):
        if k == 1:
            parts.append(names[i])
        elif k > 1:
            parts.append(f"{names[i]}^{k}")
    return "*".join(parts)


def _monomial_key(e: Exponent):
    return (sum(e), tuple(-a for a in e))


def render(p: Polynomial, names: Sequence[str] | None = None) -> str:
    """Canonical text: monomials by total degree, then lexicographically."""
    if not p.terms:
        return "0"
    names = names or [f"x{i + 1}" for i in range(p.nvars)]
    out = []
    for e in sorted(p.terms, key=_monomial_key):
        c = p.terms[e]
        mono = _render_monomial(e, names)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        out.append((sign, body))
    first_sign, first = out[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|x(\d+)|([-+*^()/]))")


def parse_polynomial(text: str, nvars: int) -> Polynomial:
    """Parse ``3/2*x1^2*x3 - x2 + (x1 + 1)^2`` style text (variables are 1-based)."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:pos + 10]!r}")
        num, var, op = m.groups()
        if num is not None:
            tokens.append(("num", Fraction(num)))
        elif var is not None:
            i = int(var) - 1
            if not 0 <= i < nvars:
                raise ValueError(f"variable x{var} out of range for {nvars} variables")
            tokens.append(("var", i))
        else:
            tokens.append(("op", op))
        pos = m.end()
    tokens.append(("end", None))
    idx = 0

    def peek():
        return tokens[idx]

    def take():
        nonlocal idx
        idx += 1
        return tokens[idx - 1]

    def expr() -> Polynomial:
        sign = 1
        if peek() == ("op", "-"):
            take()
            sign = -1
        elif peek() == ("op", "+"):
            take()
        acc = term() * sign
        while peek() in (("op", "+"), ("op", "-")):
            op = take()[1]
            t = term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term() -> Polynomial:
        acc = factor()
        while peek() in (("op", "*"), ("op", "/")):
            op = take()[1]
            if op == "*":
                acc = acc * factor()
            else:
                kind, val = take()
                if kind != "num":
                    raise ValueError("division only by rational constants")
                acc = acc / val
        return acc

    def factor() -> Polynomial:
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num" or val.denominator != 1:
                raise ValueError("exponent must be a non-negative integer")
            base = base ** int(val)
        return base

    def atom() -> Polynomial:
        kind, val = take()
        if kind == "num":
            return Polynomial.const(nvars, val)
        if kind == "var":
            return Polynomial.var(nvars, val)
        if (kind, val) == ("op", "("):
            inner = expr()
            if take() != ("op", ")"):
                raise ValueError("unbalanced parenthesis")
            return inner
        if (kind, val) == ("op", "-"):
            return -factor()
        raise ValueError(f"unexpected token {val!r}")

    result = expr()
    if peek()[0] != "end":
        raise ValueError(f"trailing input in polynomial {text!r}")
    return result


def polynomial_to_terms(p: Polynomial) -> list:
    """JSON-friendly ``[[coeff, [exps...]], ...]`` list in canonical order."""
    return [[str(p.terms[e]), list(e)] for e in sorted(p.terms, key=_monomial_key)]


def polynomial_from_terms(terms, nvars: int) -> Polynomial:
    if isinstance(terms, str):
        return parse_polynomial(terms, nvars)
    return Polynomial(nvars, {tuple(e): to_fraction(c) for c, e in terms})


# ---------------------------------------------------------------------------
# vector fields


class PolyVectorField:
    """Vector field ``sum_k coeffs[k] * d/dx_k`` with polynomial coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Polynomial]):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValueError("empty vector field")
        n = coeffs[0].nvars
        if len(coeffs) != n or any(c.nvars != n for c in coeffs):
            raise ValueError("a vector field needs one coefficient per coordinate")
        self.coeffs = coeffs

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @classmethod
    def coordinate(cls, q: int, i: int) -> "PolyVectorField":
        return cls(Polynomial.const(q, int(k == i)) for k in range(q))

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyVectorField) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return "PolyVectorField(" + ", ".join(str(c) for c in self.coeffs) + ")"

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> "PolyVectorField":
        return PolyVectorField(-a for a in self.coeffs)

    def scale(self, c) -> "PolyVectorField":
        """Multiply by a scalar or a polynomial function."""
        return PolyVectorField(a * c for a in self.coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __call__(self, f):
        return apply_field(self, f)

    def evaluate(self, point: Sequence) -> list:
        return [c.evaluate(point) for c in self.coeffs]

    def divergence(self) -> Polynomial:
        return divergence(self)

    def render(self) -> str:
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                parts.append(f"({c})*d{k + 1}")
        return " + ".join(parts) if parts else "0"


def field_bracket(V: PolyVectorField, W: PolyVectorField) -> PolyVectorField:
    """Lie bracket with ``[V, W] f = V(W f) - W(V f)``."""
    return PolyVectorField(
        _apply_poly(V, w) - _apply_poly(W, v) for v, w in zip(V.coeffs, W.coeffs)
    )


def divergence(V: PolyVectorField) -> Polynomial:
    total = Polynomial.zero(V.dim)
    for k, c in enumerate(V.coeffs):
        total = total + c.diff(k)
    return total


def combine_fields(coeffs: Sequence[Polynomial], fields: Sequence[PolyVectorField]) -> PolyVectorField:
    """``sum_l coeffs[l] * fields[l]`` with polynomial coefficients."""
    q = fields[0].dim
    comps = [Polynomial.zero(q) for _ in range(q)]
    for c, F in zip(coeffs, fields):
        if not c:
            continue
        for k in range(q):
            if F.coeffs[k]:
                comps[k] = comps[k] + c * F.coeffs[k]
    return PolyVectorField(comps)


def _apply_poly(V: PolyVectorField, f: Polynomial) -> Polynomial:
    if f.nvars != V.dim:
        raise ValueError("field and polynomial live on different coordinates")
    total = Polynomial.zero(f.nvars)
    for k, c in enumerate(V.coeffs):
        if c:
            d = f.diff(k)
            if d:
                total = total + c * d
    return total


def apply_field(V: PolyVectorField, f):
    """Apply ``V`` to a Polynomial or GaugeExpr."""
    if isinstance(f, Polynomial):
        return _apply_poly(V, f)
    if isinstance(f, GaugeExpr):
        return f.apply(V)
    raise TypeError(f"cannot apply a vector field to {type(f).__name__}")


# ---------------------------------------------------------------------------
# gauge expressions


class GaugeMismatch(ValueError):
    pass


class GaugeExpr:
    """Finite sum ``sum_a P_a * rho**a`` for the attached gauge."""

    __slots__ = ("gauge", "terms")

    def __init__(self, gauge, terms: Mapping[int, Polynomial] | None = None):
        self.gauge = gauge
        clean: dict[int, Polynomial] = {}
        for a, p in (terms or {}).items():
            if not isinstance(p, Polynomial):
                p = Polynomial.const(gauge.rho_w.nvars, p)
            if p.nvars != gauge.rho_w.nvars:
                raise GaugeMismatch("polynomial and gauge have different variable counts")
            acc = clean.get(int(a))
            clean[int(a)] = p if acc is None else acc + p
        self.terms = {a: p for a, p in sorted(clean.items()) if p}

    @property
    def nvars(self) -> int:
        return self.gauge.rho_w.nvars

    @classmethod
    def power(cls, gauge, a: int, coeff: Polynomial | None = None) -> "GaugeExpr":
        coeff = coeff if coeff is not None else Polynomial.const(gauge.rho_w.nvars, 1)
        return cls(gauge, {a: coeff})

    @classmethod
    def from_polynomial(cls, gauge, p: Polynomial) -> "GaugeExpr":
        return cls(gauge, {0: p})

    def _check(self, other: "GaugeExpr") -> None:
        if other.gauge is not self.gauge and other.gauge != self.gauge:
            raise GaugeMismatch("gauge expressions attached to different gauges")

    def _lift(self, other) -> "GaugeExpr":
        if isinstance(other, GaugeExpr):
            self._check(other)
            return other
        if isinstance(other, Polynomial):
            return GaugeExpr(self.gauge, {0: other})
        return GaugeExpr(self.gauge, {0: Polynomial.const(self.nvars, other)})

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for a, p in other.terms.items():
            terms[a] = terms[a] + p if a in terms else p
        return GaugeExpr(self.gauge, terms)

    __radd__ = __add__

    def __neg__(self):
        return GaugeExpr(self.gauge, {a: -p for a, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, GaugeExpr):
            if isinstance(other, Polynomial):
                return GaugeExpr(self.gauge, {a: p * other for a, p in self.terms.items()})
            return GaugeExpr(self.gauge, {a: p.scale(other) for a, p in self.terms.items()})
        self._check(other)
        terms: dict[int, Polynomial] = {}
        for a, p in self.terms.items():
            for b, r in other.terms.items():
                pr = p * r
                terms[a + b] = terms[a + b] + pr if a + b in terms else pr
        return GaugeExpr(self.gauge, terms)

    __rmul__ = __mul__

    def times_rho(self, a: int) -> "GaugeExpr":
        return GaugeExpr(self.gauge, {b + a: p for b, p in self.terms.items()})

    def apply(self, V: PolyVectorField) -> "GaugeExpr":
        if V.dim != self.nvars:
            raise GaugeMismatch("vector field and gauge live on different coordinates")
        w = self.gauge.w
        v_rho_w = None
        terms: dict[int, Polynomial] = {}

        def add(a: int, p: Polynomial) -> None:
            if p:
                terms[a] = terms[a] + p if a in terms else p

        for a, p in self.terms.items():
            add(a, _apply_poly(V, p))
            if a:
                if v_rho_w is None:
                    v_rho_w = _apply_poly(V, self.gauge.rho_w)
                add(a - w, (p * v_rho_w).scale(Fraction(a, w)))
        return GaugeExpr(self.gauge, terms)

    def substitute_dilation(self, r) -> "GaugeExpr":
        """``E(delta_r x)``, using ``rho(delta_r x) = r * rho(x)`` (exact ``r``)."""
        r = to_fraction(r)
        weights = self.gauge.weights
        return GaugeExpr(
            self.gauge,
            {a: dilation_substitution(p, weights, r).scale(r**a) for a, p in self.terms.items()},
        )

    def normalized(self) -> dict[int, Polynomial]:
        """Merge exponents congruent mod ``w`` using the polynomial ``rho**w``.

        Two expressions that agree as functions off the origin have equal
        normal forms whenever the residues ``rho**r`` (0 <= r < w) are
        independent over the polynomial ring, which holds for every gauge
        built here.
        """
        w = self.gauge.w
        groups: dict[int, dict[int, Polynomial]] = {}
        for a, p in self.terms.items():
            groups.setdefault(a % w, {})[a // w] = p
        out = {}
        for r, parts in groups.items():
            kmin = min(parts)
            acc = Polynomial.zero(self.nvars)
            for k, p in parts.items():
                acc = acc + p * self.gauge.rho_w ** (k - kmin)
            if acc:
                out[r + w * kmin] = acc
        return out

    def is_zero(self) -> bool:
        return not self.terms or not self.normalized()

    def __eq__(self, other) -> bool:
        if isinstance(other, (GaugeExpr, Polynomial, int, Fraction)):
            return (self - self._lift(other)).is_zero()
        return NotImplemented

    __hash__ = None  # mutable-semantics equality; not hashable

    def __repr__(self) -> str:
        parts = [f"({p})*rho^{a}" for a, p in self.terms.items()]
        return "GaugeExpr(" + (" + ".join(parts) if parts else "0") + ")"

    def evaluate(self, point: Sequence[float]) -> float:
        pt = [float(x) for x in point]
        rho = float(self.gauge.rho_w.evaluate(pt)) ** (1.0 / self.gauge.w)
        return sum(float(p.evaluate(pt)) * rho**a for a, p in self.terms.items())

    def compile(self) -> "CompiledGaugeExpr":
        return CompiledGaugeExpr(self)

    def evaluate_array(self, X: np.ndarray, rho: np.ndarray | None = None) -> np.ndarray:
        return CompiledGaugeExpr(self)(X, rho)


class CompiledGaugeExpr:
    def __init__(self, e: GaugeExpr):
        self.gauge = e.gauge
        self.parts = [(a, CompiledPolynomial(p)) for a, p in e.terms.items()]
        self.rho_w = CompiledPolynomial(e.gauge.rho_w)

    def __call__(self, X: np.ndarray, rho: np.ndarray | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if rho is None:
            rho = self.rho_w(X) ** (1.0 / self.gauge.w)
        out = np.zeros(X.shape[1:])
        for a, p in self.parts:
            out += p(X) * (rho**a if a else 1.0)
        return out
