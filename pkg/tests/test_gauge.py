import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot.algebra import abelian, engel, heisenberg, preset
from carnot.gauge import (
    GaugeExpr,
    ScanSettings,
    ball_volume_mc,
    ball_volume_scaling,
    build_gauge,
    curve_shell_points,
    gauge_equivalence,
    gauge_homogeneity_residual,
    grad_gauge_symbolic,
    layered_gauge,
    symbol_scan,
    unit_shell_sample,
)
from carnot.group import left_invariant_fields
from carnot.hypo import counterexample
from carnot.poly import Polynomial, apply_field


def X(q):
    return Polynomial.variables(q)


def test_heisenberg_gauge():
    g = build_gauge((1, 1, 2))
    x1, x2, x3 = X(3)
    assert g.w == 4
    assert g.rho_w == x1**4 + x2**4 + x3**2


def test_abelian_gauge_is_euclidean():
    g = build_gauge((1, 1, 1))
    assert g.w == 2
    assert g.evaluate([3, 4, 12]) == pytest.approx(13.0)


def test_counterexample_exponents():
    g = build_gauge((1, 1, 3, 2, 1))
    assert g.w == 12
    assert g.exponents == (12, 12, 4, 6, 12)


@pytest.mark.parametrize("weights", [(1, 1, 2), (1, 1, 2, 3), (1, 1, 2, 2, 2, 3, 4), (1, 1, 3, 2, 1)])
def test_exponents_are_even(weights):
    g = build_gauge(weights)
    assert all(e % 2 == 0 and e > 0 for e in g.exponents)
    assert gauge_homogeneity_residual(g).is_zero()
    assert gauge_homogeneity_residual(layered_gauge(weights)).is_zero()


@given(
    # keep rho^12 inside the double range
    x=st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 2), st.floats(-2, -1e-3)), min_size=4, max_size=4),
    r=st.floats(0.05, 20),
)
def test_gauge_is_homogeneous_and_definite(x, r):
    g = build_gauge((1, 1, 2, 3))
    Xv = np.array(x)[:, None]
    rho = g.evaluate_array(Xv)[0]
    assert g.evaluate_array(g.dilate_array(Xv, r))[0] == pytest.approx(r * rho, rel=1e-9, abs=1e-12)
    assert (rho == 0) == all(a == 0 for a in x)


def test_unit_shell_sample_lies_on_shell():
    g = build_gauge((1, 1, 2, 3))
    Z = unit_shell_sample(g, 128)
    assert Z.shape == (4, 128)
    assert np.allclose(g.evaluate_array(Z), 1.0)


def test_heisenberg_first_derivative_of_rho(heis):
    g = build_gauge(heis.weights)
    F = left_invariant_fields(heis).fields
    x1, x2, x3 = X(3)
    expr = grad_gauge_symbolic(g, F, (0,))
    assert expr == GaugeExpr(g, {-3: x1**3 - (x2 * x3).scale(Fr(1, 4))})


@pytest.mark.parametrize("name", ["heisenberg", "engel", "free(2,3)"])
def test_gradient_times_w_rho_power_is_gradient_of_rho_w(name):
    A = preset(name)
    g = build_gauge(A.weights)
    F = left_invariant_fields(A).fields
    for i in range(A.dim):
        grad = grad_gauge_symbolic(g, F, (i,)).times_rho(g.w - 1)
        assert grad == GaugeExpr.from_polynomial(g, apply_field(F[i], g.rho_w).scale(Fr(1, g.w)))


@pytest.mark.parametrize("name", ["heisenberg", "engel"])
def test_horizontal_gradient_is_order_zero_homogeneous(name):
    A = preset(name)
    g = build_gauge(A.weights)
    F = left_invariant_fields(A).horizontal
    Z = unit_shell_sample(g, 32)
    for i in range(len(F)):
        e = grad_gauge_symbolic(g, F, (i,))
        base = e.evaluate_array(Z)
        for r in (0.5, 3.0):
            assert np.allclose(e.evaluate_array(g.dilate_array(Z, r)), base, atol=1e-12)


def test_abelian_gradient_has_unit_length():
    g = build_gauge((1, 1, 1))
    F = left_invariant_fields(abelian(3)).fields
    Z = unit_shell_sample(g, 64) * 0.7
    total = sum(grad_gauge_symbolic(g, F, (i,)).evaluate_array(Z) ** 2 for i in range(3))
    assert np.allclose(total, 1.0)


@pytest.mark.parametrize("l", [0, 1, 2])
def test_coordinates_are_symbols_of_their_weight(heis, l):
    g = build_gauge(heis.weights)
    F = left_invariant_fields(heis).horizontal
    rep = symbol_scan(X(3)[l], heis.weights[l], F, g, n_max=3)
    assert rep.verdict == "bounded"


@pytest.mark.parametrize("name", ["heisenberg", "engel"])
def test_rho_is_symbol_of_order_one(name):
    A = preset(name)
    g = build_gauge(A.weights)
    F = left_invariant_fields(A).horizontal
    rep = symbol_scan(g.power(1), 1, F, g, n_max=3, settings=ScanSettings(mode="gauge"))
    assert rep.verdict == "bounded"
    assert rep.skipped == 0


def counterexample_setup():
    fam = counterexample()
    g = build_gauge(fam.weights)
    pts = curve_shell_points(g, lambda t: (t, 0, t**3, 0, 0), 2.0 ** -np.arange(4, 12))
    return fam, g, pts


def test_counterexample_gauge_is_not_a_symbol():
    fam, g, pts = counterexample_setup()
    rep = symbol_scan(g.power(1), 1, fam.fields, g, n_max=1, points=pts, gammas=[(0,)],
                      settings=ScanSettings(mode="gauge"))
    assert rep.verdict == "unbounded"
    assert rep.slope == pytest.approx(-1.0, abs=0.1)


def test_scan_verdict_stable_under_doubled_samples(engel_alg):
    g = build_gauge(engel_alg.weights)
    F = left_invariant_fields(engel_alg).horizontal
    a = symbol_scan(g.power(1), 1, F, g, n_max=2, settings=ScanSettings(mode="gauge", samples_per_shell=128))
    b = symbol_scan(g.power(1), 1, F, g, n_max=2, settings=ScanSettings(mode="gauge", samples_per_shell=256))
    assert a.verdict == b.verdict == "bounded"
    fam, gc, _ = counterexample_setup()
    reps = [
        symbol_scan(gc.power(1), 1, fam.fields, gc, n_max=1, gammas=[(0,)],
                    settings=ScanSettings(mode="gauge", samples_per_shell=n, seed=3))
        for n in (256, 512)
    ]
    assert reps[0].verdict == reps[1].verdict
    assert abs(reps[0].slope - reps[1].slope) <= 0.1


def test_scan_is_deterministic_across_threads(engel_alg):
    g = build_gauge(engel_alg.weights)
    F = left_invariant_fields(engel_alg).horizontal
    a = symbol_scan(g.power(1), 1, F, g, n_max=2, settings=ScanSettings(mode="gauge", seed=5, threads=1))
    b = symbol_scan(g.power(1), 1, F, g, n_max=2, settings=ScanSettings(mode="gauge", seed=5, threads=4))
    assert a.to_dict() == b.to_dict()


def test_scan_counts_skipped_points(heis):
    g = build_gauge(heis.weights)
    F = left_invariant_fields(heis).horizontal
    pts = np.concatenate([unit_shell_sample(g, 8), np.zeros((3, 2))], axis=1)
    rep = symbol_scan(g.power(1), 1, F, g, n_max=1, points=pts, settings=ScanSettings(mode="gauge"))
    assert rep.skipped > 0
    assert rep.verdict == "bounded"


def test_scan_report_serialisation(heis):
    g = build_gauge(heis.weights)
    F = left_invariant_fields(heis).horizontal
    rep = symbol_scan(g.power(1), 1, F, g, n_max=1, settings=ScanSettings(mode="gauge"))
    d = rep.to_dict()
    assert d["verdict"] == "bounded"
    assert rep.to_csv().splitlines()[0].startswith("shell_radius")


@pytest.mark.parametrize("weights", [(1, 1, 2), (1, 1, 2, 3), (1, 1, 2, 3, 3)])
def test_gauges_are_uniformly_equivalent(weights):
    c1, c2 = gauge_equivalence(build_gauge(weights), layered_gauge(weights))
    assert 0 < c1 <= c2 and c2 / c1 < 10


def test_unit_disk_area():
    v, e = ball_volume_mc(build_gauge((1, 1)), 1.0, 400_000, seed=1)
    assert abs(v - math.pi) <= 4 * e


def test_ball_volume_scaling_heisenberg_and_engel():
    assert ball_volume_scaling(build_gauge((1, 1, 2)), [0.5, 1.0], 400_000, seed=2).passes(3.0)
    assert ball_volume_scaling(build_gauge((1, 1, 2, 3)), [0.25, 0.5, 1.0], 400_000, seed=3).passes(3.0)


def test_ball_volume_is_thread_independent():
    g = build_gauge((1, 1, 2))
    assert ball_volume_mc(g, 0.7, 300_000, seed=9, threads=1) == ball_volume_mc(g, 0.7, 300_000, seed=9, threads=4)


def test_ball_volume_rejects_bad_radius():
    with pytest.raises(ValueError):
        ball_volume_mc(build_gauge((1, 1)), 0.0, 10, seed=0)
