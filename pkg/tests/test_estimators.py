import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from sbmkit.bernstein import pure_bm, stable
from sbmkit.estimators import (GeneratorTable, ball_density, bhp_statistic, boundary_profile, disc_green,
                               dynkin_residual, epanechnikov, exit_functional, expected_exit_time,
                               g_reference, green_function, harnack_statistic, levy_system_estimate,
                               loglog_slope, martin_ratio, pair_ratio_sup, default_boundary_grid)
from sbmkit.geometry import make_ball
from sbmkit.jump_kernel import build_kernel, generator_apply
from sbmkit.payoffs import Payoff, parse_payoff
from sbmkit.sampler import Grading, SchemeConfig
from sbmkit.testfunctions import constant, gaussian_bump

BALL3 = make_ball(np.zeros(3), 1.0)
DISC = make_ball(np.zeros(2), 1.0)
BM3 = build_kernel(pure_bm(), 3)
BM2 = build_kernel(pure_bm(), 2)
ST3 = build_kernel(stable(1.0), 3)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_epanechnikov_integrates_to_one(d):
    h = 0.3
    if d == 1:
        val = integrate.quad(lambda z: epanechnikov(np.array([[z]]), h, 1)[0], -h, h)[0]
    else:
        # radial integral |S^{d-1}| int_0^h r^{d-1} K(r) dr
        from sbmkit.jump_kernel import surface_area
        val = surface_area(d) * integrate.quad(
            lambda r: r ** (d - 1) * epanechnikov((r * np.eye(d)[0])[None], h, d)[0], 0, h)[0]
    assert val == pytest.approx(1.0, rel=1e-10)


@given(st.floats(-0.9, 0.9), st.floats(-0.4, 0.4), st.floats(-0.9, 0.9), st.floats(-0.4, 0.4))
def test_disc_green_symmetric_and_positive(a, b, c, e):
    x, y = np.array([a, b]), np.array([c, e])
    if np.linalg.norm(x - y) < 1e-3:
        return
    g1, g2 = disc_green(x, y), disc_green(y, x)
    assert g1 == pytest.approx(g2) and g1 > 0


def test_disc_green_reference_values():
    assert disc_green([0, 0], [0.5, 0]) == pytest.approx(math.log(4) / (4 * math.pi))
    assert disc_green([0, 0], [0.5, 0], 1 / (2 * math.pi)) == pytest.approx(0.22064, abs=1e-5)


def test_g_reference():
    B = make_ball(np.zeros(3), 1.0)
    assert g_reference(B, [0, 0, 0], [0.5, 0, 0]) == pytest.approx(2.0 * min(1.0, 0.5 / 0.25))
    assert g_reference(DISC, [0, 0], [0.5, 0]) == pytest.approx(math.log1p(0.5 / 0.25))
    with pytest.raises(ValueError):
        g_reference(B, [0, 0, 0], [0, 0, 0])


def test_pair_ratio_sup():
    st_ = pair_ratio_sup([1.0, 2.0, 4.0], [0.01, 0.01, 0.01])
    assert st_.value == pytest.approx(4.0) and st_.n_pairs == 6 and not st_.excluded_pairs
    # with a loose threshold 0.01 +- 0.01 counts as a denominator
    st_ = pair_ratio_sup([1.0, 0.01], [0.01, 0.01], k=0.5)
    assert st_.value == pytest.approx(100.0) and not st_.excluded_pairs
    # at the default threshold it does not, so only 0.01/1.0 survives
    st_ = pair_ratio_sup([1.0, 0.01], [0.01, 0.01])
    assert st_.value == pytest.approx(0.01) and st_.excluded_pairs == [(0, 1)]
    assert pair_ratio_sup([0.0, 0.0], [0.1, 0.1]).inconclusive


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_loglog_slope_exact_on_power_law(p, c):
    t = np.geomspace(0.01, 1, 6)
    slope, se, used = loglog_slope(t, c * t**p, 1e-3 * c * t**p)
    assert slope == pytest.approx(p, abs=1e-9) and used.all()


def test_expected_exit_time_estimator():
    r = expected_exit_time(BALL3, np.zeros(3), BM3, SchemeConfig(dt=5e-4, seed=11), 20_000)
    assert abs(r.value - 1 / 6) < 4 * r.std_error + 2e-3
    assert r.reliable and r.to_dict()["scheme"]["dt"] == 5e-4


def test_exit_functional_constant_payoff_is_one():
    r = exit_functional(BALL3, np.zeros(3), parse_payoff("const:value=1", 3), ST3, SchemeConfig(), 500)
    assert r.value == 1.0 and r.std_error == 0.0


def test_exit_functional_symmetry_half():
    # by symmetry P_0(X_tau in upper half) = 1/2
    r = exit_functional(BALL3, np.zeros(3), parse_payoff("halfspace:axis=-1,level=0", 3), ST3,
                        SchemeConfig(dt=2e-3, seed=2), 20_000)
    assert abs(r.value - 0.5) < 4 * r.std_error


def test_disc_green_monte_carlo():
    r = green_function(DISC, [0, 0], [0.5, 0], BM2, SchemeConfig(dt=1e-3, seed=1), 40_000)
    exact = disc_green([0, 0], [0.5, 0])
    assert abs(r.value - exact) / exact < 0.1
    assert "value_half_bandwidth" in r.extra


def test_green_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        green_function(DISC, [0, 0], [0.1, 0], BM2, SchemeConfig(), 10, bandwidth=0.05)


def test_martin_same_point_is_one():
    p = martin_ratio(DISC, [0, 0], [0, 0], [0, -1.0], [0.2, 0.1], BM2, SchemeConfig(dt=2e-3), 200)
    assert all(r.value == 1.0 for r in p.ratios)
    with pytest.raises(ValueError):
        martin_ratio(DISC, [0, 0], [0.1, 0], [0, -1.0], [0.1, 0.2], BM2, SchemeConfig(), 10)


def test_ball_density_matches_volume_integral():
    c, rho = np.array([0.6, 0.0, 0.0]), 0.15
    J = ball_density(ST3, c, rho)
    y = np.array([[0.0, 0.1, 0.0]])
    rng = np.random.default_rng(0)
    z = c + rho * (2 * rng.random((2_000_000, 3)) - 1)
    z = z[np.linalg.norm(z - c, axis=1) < rho]
    mc = 4 / 3 * math.pi * rho**3 * np.mean(ST3.j(np.linalg.norm(z - y, axis=1)))
    assert J(y)[0] == pytest.approx(mc, rel=2e-3)
    T = ball_density(ST3, c, rho, s_range=(0.3, 0.9))
    assert T(y)[0] == pytest.approx(J(y)[0], rel=1e-8)
    with pytest.raises(ValueError):
        J(c[None])


def test_levy_system_matches_direct_exits():
    # P_0(X_tau in V) two ways, V = B(c, rho) outside the unit ball
    c, rho = np.array([1.5, 0, 0]), 0.4
    payoff = Payoff("ball", center=tuple(c), radius=rho)
    sch = SchemeConfig(dt=1e-3, seed=3)
    a = exit_functional(BALL3, np.zeros(3), payoff, ST3, sch, 40_000)
    b = levy_system_estimate(BALL3, np.zeros(3), ball_density(ST3, c, rho), ST3, sch, 40_000)
    assert abs(a.value - b.value) < 4 * math.hypot(a.std_error, b.std_error)


def test_harnack_statistic_bounded():
    payoff = Payoff("ball", center=(1.0, 0, 0), radius=0.25)
    grid = [np.zeros(3), np.array([0.2, 0, 0]), np.array([-0.2, 0, 0])]
    st_, vals = harnack_statistic(np.zeros(3), 0.5, payoff, ST3, SchemeConfig(dt=5e-4, seed=1), grid, 4000,
                                  density=ball_density(ST3, (1.0, 0, 0), 0.25))
    assert 1.0 <= st_.value < 10
    with pytest.raises(ValueError):
        harnack_statistic(np.zeros(3), 0.5, parse_payoff("const:value=1", 3), ST3, SchemeConfig(), grid, 10)
    with pytest.raises(ValueError):
        harnack_statistic(np.zeros(3), 2.0, payoff, ST3, SchemeConfig(), grid, 10)


def test_bhp_rejects_non_vanishing_payoff():
    Q = np.array([0, 0, -1.0])
    grid = default_boundary_grid(BALL3, Q, 0.5)
    with pytest.raises(ValueError):
        bhp_statistic(BALL3, Q, 0.5, parse_payoff("const:value=1", 3), grid, ST3, SchemeConfig(), 10)


def test_default_boundary_grid_in_half_ball():
    Q = np.array([0, 0, -1.0])
    g = default_boundary_grid(BALL3, Q, 0.5)
    assert len(g) >= 6
    assert np.all(np.linalg.norm(g - Q, axis=1) < 0.25) and np.all(BALL3.signed_distance(g) > 0)


def test_generator_table_matches_direct():
    f = gaussian_bump((0.2, 0, 0), 0.5)
    T = GeneratorTable(ST3, f, 2.0)
    x = np.array([[0.1, 0.3, -0.2], [0.5, 0.0, 0.4]])
    direct = [generator_apply(ST3, f, p) for p in x]
    assert np.allclose(T(x), direct, rtol=1e-4)


def test_dynkin_constant_is_exactly_zero():
    r = dynkin_residual(BALL3, np.zeros(3), constant(3), ST3, SchemeConfig(dt=1e-3), 500)
    assert r.value == 0.0


def test_dynkin_gaussian_within_errors():
    f = gaussian_bump((0.2, 0, 0), 0.5)
    r = dynkin_residual(BALL3, np.zeros(3), f, ST3, SchemeConfig(dt=1e-3, seed=8), 20_000,
                        dt_fn=Grading(8, 1e-3, 1e-3))
    assert abs(r.value) < 4 * r.std_error


def test_boundary_profile_linear_for_bm():
    res = boundary_profile(pure_bm(), 1.0, [0.1, 0.2, 0.4], SchemeConfig(dt=1e-4, seed=1), 10_000,
                           dt_fn=Grading(8, 1e-4, 1e-4))
    for r, x in zip(res, [0.1, 0.2, 0.4]):
        assert abs(r.value - x) < 4 * r.std_error + 0.01
    with pytest.raises(ValueError):
        boundary_profile(pure_bm(), 1.0, [1.5], SchemeConfig(), 10)
