"""Homogeneous gauge, its symbolic derivatives, and shell-sampled symbol scans."""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .poly import CompiledGaugeExpr, CompiledPolynomial, GaugeExpr, Polynomial, PolyVectorField, apply_field


@dataclass(frozen=True, eq=False)
class Gauge:
    """``rho = (rho_w)**(1/w)`` for a polynomial ``rho_w`` homogeneous of degree ``w``."""

    weights: tuple[int, ...]
    w: int
    rho_w: Polynomial
    label: str = "sum"

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(self.w // a for a in self.weights)

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.weights)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Gauge)
            and self.weights == other.weights
            and self.w == other.w
            and self.rho_w == other.rho_w
        )

    def __hash__(self) -> int:
        return hash((self.weights, self.w, self.rho_w))

    def power(self, a: int = 1) -> GaugeExpr:
        return GaugeExpr.power(self, a)

    def _compiled(self) -> CompiledPolynomial:
        cp = self.__dict__.get("_cp")
        if cp is None:
            cp = CompiledPolynomial(self.rho_w)
            object.__setattr__(self, "_cp", cp)
        return cp

    def evaluate(self, x: Sequence[float]) -> float:
        return float(self.rho_w.evaluate([float(a) for a in x])) ** (1.0 / self.w)

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(self._compiled()(X), 0.0) ** (1.0 / self.w)

    def dilate_array(self, X: np.ndarray, r) -> np.ndarray:
        """``delta_r`` applied to columns of ``X`` (``r`` scalar or per-column array)."""
        X = np.asarray(X, dtype=float)
        r = np.asarray(r, dtype=float)
        return np.stack([X[i] * r ** self.weights[i] for i in range(self.dim)])

    def to_unit_shell(self, X: np.ndarray) -> np.ndarray:
        """Move nonzero columns onto ``{rho = 1}`` along dilation orbits."""
        rho = self.evaluate_array(X)
        return self.dilate_array(X, 1.0 / rho)


def build_gauge(weights: Sequence[int]) -> Gauge:
    """Sum-of-powers gauge with ``w = 2 lcm(1..m)``."""
    weights = tuple(int(a) for a in weights)
    if not weights or min(weights) < 1:
        raise ValueError("weights must be positive integers")
    m = max(weights)
    w = 2 * lcm(*range(1, m + 1))
    q = len(weights)
    terms = {}
    for l, a in enumerate(weights):
        e = [0] * q
        e[l] = w // a
        terms[tuple(e)] = 1
    return Gauge(weights, w, Polynomial(q, terms))


general_gauge = build_gauge


def layered_gauge(weights: Sequence[int]) -> Gauge:
    """Two-level gauge ``(sum_j (|x_(j)|^2)^(L/j))^(1/(2L))`` with ``L = lcm(1..m)``."""
    weights = tuple(int(a) for a in weights)
    q = len(weights)
    m = max(weights)
    L = lcm(*range(1, m + 1))
    xs = Polynomial.variables(q)
    total = Polynomial.zero(q)
    for j in range(1, m + 1):
        sq = Polynomial.zero(q)
        for l, a in enumerate(weights):
            if a == j:
                sq = sq + xs[l] * xs[l]
        if sq:
            total = total + sq ** (L // j)
    return Gauge(weights, 2 * L, total, label="layered")


def grad_gauge_symbolic(gauge: Gauge, fields: Sequence[PolyVectorField], gamma: Sequence[int]) -> GaugeExpr:
    """``Y_{g_1} ... Y_{g_k} rho`` as an exact GaugeExpr (innermost field applied first)."""
    if len(gamma) < 1:
        raise ValueError("multi-index must have length >= 1")
    expr = gauge.power(1)
    for i in reversed(gamma):
        expr = expr.apply(fields[i])
    return expr


def gauge_homogeneity_residual(gauge: Gauge) -> Polynomial:
    """``rho_w(delta_r x) - r**w rho_w(x)`` with ``r`` as an extra variable."""
    q = gauge.dim
    xs = Polynomial.variables(q + 1)
    r = xs[-1]
    dil = [r ** gauge.weights[i] * xs[i] for i in range(q)]
    return gauge.rho_w.substitute(dil) - r**gauge.w * gauge.rho_w.embed(q + 1)


# ---------------------------------------------------------------------------
# shell sampling


def unit_shell_sample(gauge: Gauge, n: int = 256, seed: int | None = None) -> np.ndarray:
    """Quasi-uniform points on ``{rho = 1}``.

    A Sobol sample of ``[-1, 1]^q`` pushed to the unit shell along dilation
    orbits. Without a seed the unscrambled sequence is used, so the sample is
    fixed; with a seed it is scrambled reproducibly.
    """
    q = gauge.dim
    m = max(1, math.ceil(math.log2(max(n, 2))))
    sampler = qmc.Sobol(d=q, scramble=seed is not None, seed=seed)
    X = (2.0 * sampler.random_base2(m + 1) - 1.0).T
    keep = np.flatnonzero(gauge.evaluate_array(X) > 1e-12)[:n]
    return gauge.to_unit_shell(X[:, keep])


def curve_shell_points(gauge: Gauge, curve: Callable[[float], Sequence[float]], ts: Sequence[float]) -> np.ndarray:
    """Points of a parametrised curve pushed to the unit shell."""
    X = np.array([curve(t) for t in ts], dtype=float).T
    return gauge.to_unit_shell(X)


# ---------------------------------------------------------------------------
# symbol scans


@dataclass(frozen=True)
class SymbolEntry:
    gamma: tuple[int, ...]
    sups: tuple[float, ...]
    ratio: float
    slope: float
    monotone: bool
    verdict: str

    def to_dict(self) -> dict:
        return {
            "gamma": [i + 1 for i in self.gamma],
            "sups": [_jsonable(s) for s in self.sups],
            "ratio": _jsonable(self.ratio),
            "slope": _jsonable(self.slope),
            "monotone": self.monotone,
            "verdict": self.verdict,
        }


def _jsonable(x: float):
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class SymbolReport:
    alpha: float
    mode: str
    radii: tuple[float, ...]
    entries: tuple[SymbolEntry, ...]
    verdict: str
    worst: SymbolEntry | None
    skipped: int
    n_points: int

    @property
    def slope(self) -> float:
        return self.worst.slope if self.worst else 0.0

    def entry(self, gamma: Sequence[int]) -> SymbolEntry:
        gamma = tuple(gamma)
        for e in self.entries:
            if e.gamma == gamma:
                return e
        raise KeyError(gamma)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mode": self.mode,
            "verdict": self.verdict,
            "slope": _jsonable(self.slope),
            "worst_gamma": [i + 1 for i in self.worst.gamma] if self.worst else None,
            "radii": list(self.radii),
            "skipped": self.skipped,
            "points_per_shell": self.n_points,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["shell_radius", "gamma", "sup_value"])
        for e in self.entries:
            g = "-".join(str(i + 1) for i in e.gamma) or "0"
            for r, s in zip(self.radii, e.sups):
                writer.writerow([repr(r), g, f"{s:.12g}"])
        return buf.getvalue()


@dataclass(frozen=True)
class ScanSettings:
    shells: int = 10
    samples_per_shell: int = 256
    bounded_ratio: float = 10.0
    unbounded_slope: float = -0.5
    mode: str = "symbol"
    seed: int | None = None
    threads: int = 1


def _derivative_evaluators(f, fields: Sequence[PolyVectorField], gammas) -> list[Callable]:
    out = []
    for g in gammas:
        if isinstance(f, (Polynomial, GaugeExpr)):
            d = f
            for i in reversed(g):
                d = apply_field(fields[i], d)
            if isinstance(d, Polynomial):
                cp = CompiledPolynomial(d)
                out.append(lambda X, cp=cp: cp(X))
            else:
                ce = CompiledGaugeExpr(d)
                out.append(lambda X, ce=ce: ce(X))
        elif hasattr(f, "derivative"):
            out.append(f.derivative(g, fields))
        else:
            raise TypeError("symbol_scan needs a Polynomial, GaugeExpr, or an object with .derivative")
    return out


def multi_indices(n_fields: int, n_max: int, include_zero: bool = True) -> list[tuple[int, ...]]:
    out = [()] if include_zero else []
    for k in range(1, n_max + 1):
        out.extend(itertools.product(range(n_fields), repeat=k))
    return out


def symbol_scan(
    f,
    alpha: float,
    fields: Sequence[PolyVectorField],
    gauge: Gauge,
    n_max: int = 3,
    settings: ScanSettings = ScanSettings(),
    *,
    points: np.ndarray | None = None,
    gammas: Sequence[Sequence[int]] | None = None,
) -> SymbolReport:
    """Estimate whether ``f`` is a symbol of order ``alpha`` near the origin.

    For each multi-index ``gamma`` and each dyadic shell ``rho = 2**-k`` the
    sup of ``|Y^gamma f| * r**-e`` is recorded, where ``e = (alpha - |gamma|)_+``
    in ``"symbol"`` mode and ``e = alpha - |gamma|`` in ``"gauge"`` mode.
    """
    if settings.mode not in ("symbol", "gauge"):
        raise ValueError("mode must be 'symbol' or 'gauge'")
    Z = points if points is not None else unit_shell_sample(gauge, settings.samples_per_shell, settings.seed)
    gammas = [tuple(g) for g in gammas] if gammas is not None else multi_indices(len(fields), n_max)
    evals = _derivative_evaluators(f, fields, gammas)
    radii = tuple(2.0**-k for k in range(settings.shells + 1))

    def shell(k: int):
        r = radii[k]
        X = gauge.dilate_array(Z, r)
        sups, skipped = [], 0
        with np.errstate(all="ignore"):
            for g, ev in zip(gammas, evals):
                vals = np.abs(np.asarray(ev(X), dtype=float))
                ok = np.isfinite(vals)
                skipped += int((~ok).sum())
                e = alpha - len(g)
                if settings.mode == "symbol":
                    e = max(e, 0.0)
                s = float(vals[ok].max()) * r ** (-e) if ok.any() else math.nan
                sups.append(s)
        return sups, skipped

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            results = list(pool.map(shell, range(len(radii))))
    else:
        results = [shell(k) for k in range(len(radii))]
    skipped = sum(s for _, s in results)
    entries = []
    for j, g in enumerate(gammas):
        sups = tuple(res[0][j] for res in results)
        entries.append(_classify(g, radii, sups, settings))
    unbounded = [e for e in entries if e.verdict == "unbounded"]
    if unbounded:
        verdict, worst = "unbounded", unbounded[0]
    elif all(e.verdict == "bounded" for e in entries):
        verdict, worst = "bounded", max(entries, key=lambda e: e.ratio) if entries else None
    else:
        verdict = "inconclusive"
        worst = next(e for e in entries if e.verdict == "inconclusive")
    return SymbolReport(float(alpha), settings.mode, radii, tuple(entries), verdict, worst, skipped, Z.shape[1])


def _classify(gamma, radii, sups, settings: ScanSettings) -> SymbolEntry:
    s = np.array(sups, dtype=float)
    finite = np.isfinite(s)
    if not finite.all():
        return SymbolEntry(gamma, tuple(sups), math.inf, math.nan, False, "inconclusive")
    tiny = 1e-13 * max(1.0, float(s.max()))
    if s.max() <= 1e-300 or (s.max() - s.min()) <= tiny:
        return SymbolEntry(gamma, tuple(sups), 1.0, 0.0, True, "bounded")
    pos = s > 0
    ratio = float(s.max() / s.min()) if s.min() > 0 else math.inf
    # fit the inner half of the shells, where the leading power dominates
    pos[: len(s) // 2] = False
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log2(np.array(radii)[pos]), np.log2(s[pos]), 1)[0])
    else:
        slope = math.nan
    # radii decrease along the array, so growth toward the origin is non-decreasing s
    monotone = bool(np.all(np.diff(s) >= -1e-9 * np.abs(s[:-1])))
    if ratio <= settings.bounded_ratio:
        verdict = "bounded"
    elif monotone and slope <= settings.unbounded_slope:
        verdict = "unbounded"
    else:
        verdict = "inconclusive"
    return SymbolEntry(gamma, tuple(sups), ratio, slope, monotone, verdict)


def gauge_equivalence(g1: Gauge, g2: Gauge, shells: int = 10, n: int = 512) -> tuple[float, float]:
    """Bounds ``c1 <= g1 / g2 <= c2`` observed on dyadic shells of ``g2``."""
    Z = unit_shell_sample(g2, n)
    lo, hi = math.inf, 0.0
    for k in range(shells + 1):
        X = g2.dilate_array(Z, 2.0**-k)
        ratio = g1.evaluate_array(X) / g2.evaluate_array(X)
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
    return lo, hi


# ---------------------------------------------------------------------------
# Monte-Carlo ball volume


MC_CHUNK = 1 << 16


def ball_volume_mc(gauge: Gauge, r: float, n_samples: int, seed: int, threads: int = 1) -> tuple[float, float]:
    """Lebesgue volume of ``{rho < r}`` with its standard error.

    Samples the box ``|x_l| <= r**w_l``, which contains the ball. Chunks use
    spawned seed sequences of fixed size, so the result does not depend on the
    thread count.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    q = gauge.dim
    half = np.array([r**a for a in gauge.weights], dtype=float)
    box = float(np.prod(2 * half))
    sizes = [MC_CHUNK] * (n_samples // MC_CHUNK)
    if n_samples % MC_CHUNK:
        sizes.append(n_samples % MC_CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))

    def count(i: int) -> int:
        rng = np.random.default_rng(seqs[i])
        U = rng.uniform(-1.0, 1.0, size=(q, sizes[i])) * half[:, None]
        return int((gauge.evaluate_array(U) < r).sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(count, range(len(sizes))))
    else:
        hits = sum(count(i) for i in range(len(sizes)))
    p = hits / n_samples
    return box * p, box * math.sqrt(p * (1 - p) / n_samples)


@dataclass(frozen=True)
class VolumeScaling:
    radii: tuple[float, ...]
    volumes: tuple[float, ...]
    errors: tuple[float, ...]
    Q: int

    def ratios(self) -> list[dict]:
        out = []
        for i in range(len(self.radii) - 1):
            v0, v1 = self.volumes[i], self.volumes[i + 1]
            e0, e1 = self.errors[i], self.errors[i + 1]
            ratio = v1 / v0
            se = ratio * math.hypot(e0 / v0, e1 / v1)
            expected = (self.radii[i + 1] / self.radii[i]) ** self.Q
            out.append({
                "r0": self.radii[i],
                "r1": self.radii[i + 1],
                "ratio": ratio,
                "stderr": se,
                "expected": expected,
                "z": (ratio - expected) / se if se > 0 else math.inf,
            })
        return out

    def passes(self, n_sigma: float = 3.0) -> bool:
        return all(abs(x["z"]) <= n_sigma for x in self.ratios())

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "volumes": [_jsonable(v) for v in self.volumes],
            "stderr": [_jsonable(v) for v in self.errors],
            "ratios": [{k: _jsonable(v) for k, v in r.items()} for r in self.ratios()],
        }


def ball_volume_scaling(gauge: Gauge, radii: Sequence[float], n_samples: int, seed: int,
                        threads: int = 1) -> VolumeScaling:
    """Independent estimates per radius (child seeds of ``seed``)."""
    children = np.random.SeedSequence(seed).spawn(len(radii))
    vols, errs = [], []
    for r, child in zip(radii, children):
        v, e = ball_volume_mc(gauge, r, n_samples, int(child.generate_state(1)[0]), threads)
        vols.append(v)
        errs.append(e)
    return VolumeScaling(tuple(radii), tuple(vols), tuple(errs), gauge.homogeneous_dimension)
