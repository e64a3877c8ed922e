"""Quadrature on exponential coordinates (Lebesgue measure = Haar measure).

Three rules are available:

``gauge-polar``
    Writes ``x = delta_s z`` with ``z`` on the Euclidean unit sphere, so
    ``dx = s**(Q-1) * (sum_l w_l z_l**2) ds dsigma(z)``, then substitutes
    ``t = s * rho(z)`` so that the radial variable is the gauge itself. An
    integrand supported in a gauge annulus then lives on a box in ``(t, z)``
    and the ``rho**-2s`` weight becomes a power of ``t``. Gauss-Legendre in
    ``t`` (or ``log t``) and in each hyperspherical angle, trapezoid in the
    last angle.
``gauss-legendre``
    Tensor grid on a box. Nodes with ``rho < exclude_radius`` are dropped and
    a bias bound is reported.
``monte-carlo``
    Uniform samples in the box with a standard-error estimate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .gauge import Gauge

METHODS = ("gauge-polar", "gauss-legendre", "monte-carlo")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "gauge-polar"
    points: int = 48
    radial_points: int | None = None
    radial_range: tuple[float, float] | None = None
    radial_map: str = "linear"
    box: float | tuple[float, ...] | None = None
    samples: int = 10**6
    seed: int | None = None
    exclude_radius: float = 1e-3
    estimate_error: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown quadrature method {self.method!r}; choose from {METHODS}")
        if self.radial_map not in ("linear", "log"):
            raise ValueError("radial_map must be 'linear' or 'log'")
        if self.points < 2:
            raise ValueError("need at least 2 points per axis")
        if self.method == "monte-carlo" and self.seed is None:
            raise ValueError("monte-carlo quadrature needs a seed")

    def refined(self, factor: float = 1.5) -> "QuadratureSpec":
        rp = None if self.radial_points is None else int(round(self.radial_points * factor))
        return replace(self, points=int(round(self.points * factor)), radial_points=rp,
                       samples=int(self.samples * factor))

    def coarsened(self) -> "QuadratureSpec":
        p = max(4, int(round(self.points * 0.75)))
        rp = None if self.radial_points is None else max(4, int(round(self.radial_points * 0.75)))
        return replace(self, points=p, radial_points=rp, estimate_error=False)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "points": self.points,
            "radial_points": self.radial_points,
            "radial_range": list(self.radial_range) if self.radial_range else None,
            "radial_map": self.radial_map,
            "box": list(self.box) if isinstance(self.box, tuple) else self.box,
            "samples": self.samples,
            "seed": self.seed,
            "exclude_radius": self.exclude_radius,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "QuadratureSpec":
        import jsonschema

        from .algebra import load_schema

        jsonschema.validate(data, load_schema("quadrature"))
        kw = dict(data)
        if kw.get("radial_range") is not None:
            kw["radial_range"] = tuple(kw["radial_range"])
        if isinstance(kw.get("box"), list):
            kw["box"] = tuple(kw["box"])
        return cls(**kw)


def default_spec(q: int, **overrides) -> QuadratureSpec:
    """Desk-scale defaults: finer rules in low dimension."""
    if q <= 3:
        base = QuadratureSpec(points=48)
    elif q == 4:
        base = QuadratureSpec(points=32)
    else:
        base = QuadratureSpec(method="monte-carlo", samples=10**7, seed=0)
    return replace(base, **overrides)


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    error: np.ndarray
    nodes: int
    bias_bound: float = 0.0

    def scalar(self) -> tuple[float, float]:
        return float(self.value.reshape(-1)[0]), float(self.error.reshape(-1)[0])


# ---------------------------------------------------------------------------
# node construction


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def sphere_rule(q: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (q, N) and weights on the Euclidean unit sphere in R^q."""
    if q == 1:
        return np.array([[-1.0, 1.0]]), np.array([1.0, 1.0])
    angles = [gauss_legendre(n, 0.0, math.pi) for _ in range(q - 2)]
    phi = np.arange(2 * n) * math.pi / n
    wphi = np.full(2 * n, math.pi / n)
    grids = np.meshgrid(*[a[0] for a in angles], phi, indexing="ij")
    W = np.ones_like(grids[0])
    for i, (nodes, weights) in enumerate(angles):
        shape = [1] * (q - 1)
        shape[i] = n
        W = W * (weights * np.sin(nodes) ** (q - 2 - i)).reshape(shape)
    shape = [1] * (q - 1)
    shape[-1] = 2 * n
    W = W * wphi.reshape(shape)
    coords = []
    s = np.ones_like(grids[0])
    for i in range(q - 2):
        coords.append(s * np.cos(grids[i]))
        s = s * np.sin(grids[i])
    coords.append(s * np.cos(grids[-1]))
    coords.append(s * np.sin(grids[-1]))
    return np.array([c.ravel() for c in coords]), W.ravel()


def _radial_nodes(spec: QuadratureSpec, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
    n = spec.radial_points or spec.points
    if spec.radial_map == "log":
        if t0 <= 0:
            raise QuadratureError("log radial map needs a positive inner radius")
        u, wu = gauss_legendre(n, math.log(t0), math.log(t1))
        t = np.exp(u)
        return t, wu * t
    return gauss_legendre(n, t0, t1)


def _box(spec: QuadratureSpec, gauge: Gauge, t1: float) -> np.ndarray:
    if spec.box is None:
        return np.array([t1**a for a in gauge.weights], dtype=float)
    if isinstance(spec.box, (int, float)):
        return np.full(gauge.dim, float(spec.box))
    return np.array(spec.box, dtype=float)


def _reduce(chunks: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(chunks)  # (chunks, k)
    return np.array([math.fsum(stacked[:, j]) for j in range(stacked.shape[1])])


def _as_2d(vals) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    return vals[None, :] if vals.ndim == 1 else vals


def _run(fn: Callable, batches: list[tuple[np.ndarray, np.ndarray]], threads: int) -> np.ndarray:
    def one(batch):
        X, W = batch
        vals = _as_2d(fn(X))
        bad = ~np.isfinite(vals)
        if bad.any():
            j = int(np.argwhere(bad)[0][1])
            raise QuadratureError(f"non-finite integrand at x = {X[:, j].tolist()}")
        return vals @ W

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, batches))
    else:
        parts = [one(b) for b in batches]
    return _reduce(parts)


def _polar_batches(spec: QuadratureSpec, gauge: Gauge, t0: float, t1: float):
    z, wz = sphere_rule(gauge.dim, spec.points)
    rz = gauge.evaluate_array(z)
    jac = (np.array(gauge.weights, dtype=float)[:, None] * z * z).sum(axis=0)
    Q = gauge.homogeneous_dimension
    t, wt = _radial_nodes(spec, t0, t1)
    om = np.array(gauge.weights, dtype=float)[:, None]
    base = wz * jac / rz
    batches = []
    for ti, wi in zip(t, wt):
        s = ti / rz
        X = s[None, :] ** om * z
        batches.append((X, wi * base * s ** (Q - 1)))
    return batches


def _tensor_batches(spec: QuadratureSpec, gauge: Gauge, half: np.ndarray):
    q = gauge.dim
    rules = [gauss_legendre(spec.points, -h, h) for h in half]
    # batch along the first axis
    rest = np.meshgrid(*[r[0] for r in rules[1:]], indexing="ij") if q > 1 else []
    rest_w = np.ones(1)
    for r in rules[1:]:
        rest_w = np.multiply.outer(rest_w, r[1])
    rest_w = rest_w.ravel()
    rest_x = np.array([g.ravel() for g in rest]) if q > 1 else np.zeros((0, 1))
    batches = []
    for x0, w0 in zip(*rules[0]):
        X = np.vstack([np.full(rest_x.shape[1], x0), rest_x])
        W = w0 * rest_w
        if spec.exclude_radius > 0:
            keep = gauge.evaluate_array(X) >= spec.exclude_radius
            X, W = X[:, keep], W[keep]
        batches.append((X, W))
    return batches


def _mc_batches(spec: QuadratureSpec, gauge: Gauge, half: np.ndarray, chunk: int = 1 << 16):
    q = gauge.dim
    vol = float(np.prod(2 * half))
    sizes = [chunk] * (spec.samples // chunk)
    if spec.samples % chunk:
        sizes.append(spec.samples % chunk)
    seqs = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    batches = []
    for size, ss in zip(sizes, seqs):
        rng = np.random.default_rng(ss)
        X = rng.uniform(-1.0, 1.0, size=(q, size)) * half[:, None]
        batches.append((X, np.full(size, vol / spec.samples)))
    return batches


def integrate(fn: Callable[[np.ndarray], np.ndarray], spec: QuadratureSpec, gauge: Gauge,
              support: tuple[float, float]) -> QuadratureResult:
    """Integrate ``fn`` (vectorised over columns of a (q, N) array) over R^q.

    ``support`` is a gauge interval ``[t0, t1]`` outside of which the
    integrand is negligible; ``spec.radial_range`` overrides it. ``fn`` may
    return shape (N,) or (k, N) to integrate k functions on shared nodes.
    """
    t0, t1 = spec.radial_range or support
    if not 0 <= t0 < t1:
        raise QuadratureError(f"bad radial range ({t0}, {t1})")
    if spec.method == "gauge-polar":
        value = _run(fn, _polar_batches(spec, gauge, t0, t1), spec.threads)
        nodes = 2 * spec.points ** (gauge.dim - 1) * (spec.radial_points or spec.points)
        if spec.estimate_error:
            coarse = _run(fn, _polar_batches(spec.coarsened(), gauge, t0, t1), spec.threads)
            error = np.abs(value - coarse)
        else:
            error = np.full_like(value, np.nan)
        return QuadratureResult(value, error, nodes)
    half = _box(spec, gauge, t1)
    if spec.method == "gauss-legendre":
        batches = _tensor_batches(spec, gauge, half)
        value = _run(fn, batches, spec.threads)
        bias = _exclusion_bias(fn, spec, gauge)
        if spec.estimate_error:
            coarse = _run(fn, _tensor_batches(spec.coarsened(), gauge, half), spec.threads)
            error = np.abs(value - coarse) + bias
        else:
            error = np.full_like(value, np.nan)
        return QuadratureResult(value, error, spec.points ** gauge.dim, bias)
    batches = _mc_batches(spec, gauge, half)
    value = _run(fn, batches, spec.threads)
    sq = _run(lambda X: _as_2d(fn(X)) ** 2, batches, spec.threads)
    vol = float(np.prod(2 * half))
    n = spec.samples
    mean, mean_sq = value / vol, sq / vol
    var = np.maximum(mean_sq - mean**2, 0.0)
    error = vol * np.sqrt(var / n)
    return QuadratureResult(value, error, n)


def _exclusion_bias(fn, spec: QuadratureSpec, gauge: Gauge) -> float:
    """Estimated mass dropped inside ``rho < exclude_radius``.

    Fits ``|fn| ~ rho**p`` from the shells at ``eps/2`` and ``eps`` and
    integrates that profile over the box ``|x_l| < eps**w_l`` that contains
    the excluded set.
    """
    eps = spec.exclude_radius
    if eps <= 0:
        return 0.0
    z, _ = sphere_rule(gauge.dim, 8)
    rz = gauge.evaluate_array(z)
    sups = []
    for frac in (0.5, 1.0):
        X = gauge.dilate_array(z, frac * eps / rz)
        with np.errstate(all="ignore"):
            vals = np.abs(_as_2d(fn(X)))
        vals = vals[np.isfinite(vals)]
        sups.append(float(vals.max()) if vals.size else 0.0)
    if sups[1] == 0.0:
        return 0.0
    Q = gauge.homogeneous_dimension
    p = math.log2(sups[1] / sups[0]) if sups[0] > 0 else 0.0
    if Q + p <= 0:
        return math.inf
    return sups[1] * 2**gauge.dim * eps**Q * Q / (Q + p)
