import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.bernstein import gamma_subordinator, parse_bernstein, pure_bm, stable
from sbmkit.jump_kernel import (build_kernel, generator_apply, j_eval, log_j_de, log_j_gk, sphere_rule,
                                surface_area, verify_kernel_conditions)
from sbmkit.testfunctions import constant, gaussian_bump, quadratic


def stable_j(alpha, d, r):
    """Riesz constant for the rotationally symmetric alpha-stable process with exponent |xi|^alpha."""
    c = alpha * 2 ** (alpha - 1) * math.gamma((d + alpha) / 2) / (math.pi ** (d / 2) * math.gamma(1 - alpha / 2))
    return c * r ** (-d - alpha)


@pytest.mark.parametrize("alpha,d", [(0.5, 2), (1.0, 3), (1.5, 1), (1.0, 2)])
def test_table_matches_riesz_constant(alpha, d):
    k = build_kernel(stable(alpha), d)
    r = np.geomspace(1e-3, 50, 40)
    assert np.allclose(k.j(r), stable_j(alpha, d, r), rtol=1e-6)


@given(st.floats(min_value=1e-3, max_value=30.0))
def test_dual_routes_agree(r):
    f = gamma_subordinator()
    a = float(log_j_de(f, 3, r)[0])
    b = log_j_gk(f, 3, r)
    assert abs(math.expm1(a - b)) < 1e-6
    assert j_eval(f, 3, r) == pytest.approx(math.exp(a))


@given(st.floats(min_value=1e-4, max_value=100.0), st.floats(min_value=1.01, max_value=4.0))
def test_kernel_decreasing(r, k):
    kern = build_kernel(parse_bernstein("sum:[stable:alpha=0.5;gamma]"), 3)
    assert kern.j(k * r) < kern.j(r)


def test_stable_small_r_slope():
    for alpha, d in [(0.5, 2), (1.0, 3)]:
        k = build_kernel(stable(alpha), d)
        r = np.array([1e-4, 1e-3])
        slope = np.diff(np.log(k.j(r)))[0] / math.log(10)
        assert slope == pytest.approx(-(d + alpha), abs=0.02)


@given(st.floats(min_value=0.01, max_value=1.0))
def test_stable_tail_and_small_moment(eps):
    k = build_kernel(stable(1.0), 3)
    assert k.tail_mass(eps) == pytest.approx(4 / (math.pi * eps), rel=1e-5)
    assert k.small_moment(eps) == pytest.approx(4 * eps / math.pi, rel=1e-5)


def test_radial_sampler_distribution():
    # for alpha = 1, d = 3: P(R > s | R > eps) = eps / s
    k = build_kernel(stable(1.0), 3)
    eps = 0.05
    u = (np.arange(200_000) + 0.5) / 200_000
    r = k.radial_sampler(eps).sample(u)
    assert r.min() >= eps * (1 - 1e-9)
    for s in (0.1, 0.5, 2.0):
        assert np.mean(r > s) == pytest.approx(eps / s, rel=2e-3)


def test_truncated_kernel_has_bounded_support():
    k = build_kernel(stable(1.0), 3, truncation_radius=1.0)
    assert k.truncated and k.support_radius == 1.0
    assert k.j(1.5) == 0.0 and k.j(0.5) > 0
    r = k.radial_sampler(0.05).sample(np.linspace(0, 1, 10001))
    assert r.max() <= 1.0


def test_zero_kernel():
    k = build_kernel(pure_bm(), 3)
    assert k.is_zero
    assert np.all(k.j(np.array([0.1, 1.0])) == 0)
    with pytest.raises(ValueError):
        k.radial_sampler(0.1)


def test_kernel_conditions_for_stable():
    k = build_kernel(stable(1.0), 3)
    c = verify_kernel_conditions(k, 1.0)
    # j(r)/j(2r) = 2^{d+alpha}
    assert c.c1 == pytest.approx(2 ** 4, rel=1e-4)
    assert not c.violated


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sphere_rule_weights_and_symmetry(d):
    pts, w = sphere_rule(d)
    assert w.sum() == pytest.approx(surface_area(d))
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert np.allclose((w[:, None] * pts).sum(axis=0), 0.0, atol=1e-12)


def test_generator_of_constant_is_zero():
    k = build_kernel(stable(1.0), 3)
    assert generator_apply(k, constant(3), np.array([0.1, 0.2, 0.3])) == pytest.approx(0.0, abs=1e-10)


def test_generator_pure_bm_is_laplacian():
    k = build_kernel(pure_bm(), 3)
    assert generator_apply(k, quadratic((0.0, 0.0, 0.0)), np.zeros(3)) == pytest.approx(6.0)


def test_generator_gaussian_matches_fourier():
    # for f = exp(-|x|^2), (Delta + A) f (0) = -int (|xi|^2 + |xi|) fhat(xi) dxi / (2 pi)^3 with stable(1)
    k = build_kernel(stable(1.0), 3)
    f = gaussian_bump((0.0, 0.0, 0.0), 1.0)
    # fhat(xi) = pi^{3/2} exp(-|xi|^2/4): int |xi|^p fhat = 4 pi pi^{3/2} int r^{2+p} e^{-r^2/4} dr
    def moment(p):
        return 4 * math.pi * math.pi**1.5 * 2 ** (3 + p) * math.gamma((3 + p) / 2) / 2
    exact = -(moment(2) + moment(1)) / (2 * math.pi) ** 3
    assert generator_apply(k, f, np.zeros(3)) == pytest.approx(exact, rel=1e-5)


def test_csv_export(tmp_path):
    k = build_kernel(stable(1.0), 3)
    p = tmp_path / "j.csv"
    k.to_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0].startswith("r,") and len(rows) > 100
