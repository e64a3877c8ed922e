import json
import math

import numpy as np
import pytest

from carnot.gauge import build_gauge
from carnot.quadrature import QuadratureError, QuadratureSpec, default_spec, integrate

HEIS = build_gauge((1, 1, 2))


def exp_rho4(X):
    return np.exp(-HEIS.evaluate_array(X) ** 4)


def heis_exact():
    # separable: int exp(-x^4) dx = 2 Gamma(5/4), int exp(-x^2) dx = sqrt(pi)
    return (2 * math.gamma(1.25)) ** 2 * math.sqrt(math.pi)


@pytest.mark.parametrize("method", ["gauge-polar", "gauss-legendre"])
def test_heisenberg_exp_gauge_integral(method):
    spec = QuadratureSpec(method=method, points=48, exclude_radius=0.0)
    v, e = integrate(exp_rho4, spec, HEIS, (0.0, 3.0)).scalar()
    assert v == pytest.approx(heis_exact(), rel=1e-8)


def test_refinement_is_self_consistent():
    spec = default_spec(3)
    a, _ = integrate(exp_rho4, spec, HEIS, (0.0, 3.0)).scalar()
    b, _ = integrate(exp_rho4, spec.refined(), HEIS, (0.0, 3.0)).scalar()
    assert abs(a - b) / abs(b) < 1e-8


def test_haar_scaling():
    r = 2.0
    spec = default_spec(3, radial_range=(0.0, 3.0))
    base, _ = integrate(exp_rho4, spec, HEIS, (0.0, 3.0)).scalar()
    scaled, _ = integrate(lambda X: exp_rho4(HEIS.dilate_array(X, r)), spec, HEIS, (0.0, 3.0)).scalar()
    assert scaled / base == pytest.approx(r ** -4, rel=1e-6)


@pytest.mark.parametrize("method", ["gauge-polar", "gauss-legendre", "monte-carlo"])
def test_odd_integrand_vanishes(method):
    spec = QuadratureSpec(method=method, points=24, samples=200_000, seed=4)
    v, e = integrate(lambda X: X[0] * exp_rho4(X), spec, HEIS, (0.0, 3.0)).scalar()
    assert abs(v) <= max(5 * e, 1e-12)


def test_euclidean_gaussian():
    g = build_gauge((1, 1, 1))
    v, _ = integrate(lambda X: np.exp(-(X**2).sum(axis=0)), default_spec(3), g, (0.0, 7.0)).scalar()
    assert v == pytest.approx(math.pi ** 1.5, rel=1e-10)


def test_vector_valued_integrands_share_nodes():
    res = integrate(lambda X: np.stack([exp_rho4(X), 2 * exp_rho4(X)]), default_spec(3), HEIS, (0.0, 3.0))
    assert res.value.shape == (2,)
    assert res.value[1] == pytest.approx(2 * res.value[0], rel=1e-14)


def test_polar_ball_volume_matches_monte_carlo():
    from carnot.gauge import ball_volume_mc

    spec = default_spec(3, estimate_error=False)
    v, _ = integrate(lambda X: np.ones(X.shape[1]), spec, HEIS, (0.0, 1.0)).scalar()
    mc, se = ball_volume_mc(HEIS, 1.0, 400_000, seed=6)
    assert abs(v - mc) <= 4 * se


def test_monte_carlo_is_thread_independent():
    a = QuadratureSpec(method="monte-carlo", samples=300_000, seed=11, threads=1)
    b = QuadratureSpec(method="monte-carlo", samples=300_000, seed=11, threads=4)
    ra = integrate(exp_rho4, a, HEIS, (0.0, 3.0))
    rb = integrate(exp_rho4, b, HEIS, (0.0, 3.0))
    assert ra.scalar() == rb.scalar()
    assert abs(ra.scalar()[0] - heis_exact()) <= 4 * ra.scalar()[1]


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(method="simpson")
    with pytest.raises(ValueError):
        QuadratureSpec(method="monte-carlo")
    with pytest.raises(QuadratureError):
        integrate(exp_rho4, default_spec(3), HEIS, (2.0, 1.0))


def test_default_spec_by_dimension():
    assert default_spec(3).points == 48
    assert default_spec(4).points == 32
    assert default_spec(5).method == "monte-carlo"


def test_spec_json_roundtrip():
    spec = QuadratureSpec(method="gauss-legendre", points=20, box=(1.0, 2.0, 3.0), radial_range=(0.1, 2.0))
    again = QuadratureSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec


def test_spec_json_rejects_unknown_keys():
    with pytest.raises(Exception):
        QuadratureSpec.from_dict({"method": "gauge-polar", "colour": "red"})
