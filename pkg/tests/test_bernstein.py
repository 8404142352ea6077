import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.bernstein import (BernsteinFunction, DivergentIntegralError, PowerDensity, GrowthConditionViolation, check_growth_condition,
                              check_monotone_convex, gamma_subordinator, levy_tail_mass, parse_bernstein,
                              phi_eval, psi_quad, pure_bm, stable, sum_of, truncated)

lams = st.floats(min_value=1e-2, max_value=1e2)
alphas = st.floats(min_value=0.1, max_value=1.9)


@given(lams)
def test_gamma_psi_matches_log1p(lam):
    assert psi_quad(gamma_subordinator(), lam) == pytest.approx(math.log1p(lam), rel=1e-8)


@given(alphas, lams)
def test_stable_psi_matches_power(alpha, lam):
    f = stable(alpha)
    assert psi_quad(f, lam) == pytest.approx(lam ** (alpha / 2), rel=1e-7)


@given(st.floats(min_value=0.2, max_value=1.8), st.floats(min_value=0.5, max_value=3.0), lams)
def test_stable_scale_parameter(alpha, a, lam):
    assert stable(alpha, a).psi(lam, "closed") == pytest.approx(a**alpha * lam ** (alpha / 2))


def test_phi_includes_unit_drift():
    f = stable(1.0)
    assert phi_eval(f, 4.0) == pytest.approx(4.0 + 2.0, rel=1e-8)
    assert phi_eval(pure_bm(), 3.0) == 3.0


@given(st.sampled_from(["stable:alpha=0.5", "stable:alpha=1", "gamma", "sum:[stable:alpha=0.5;gamma]"]),
       lams, st.floats(min_value=1.01, max_value=3.0))
def test_phi_increasing_and_concave(spec, lam, k):
    f = parse_bernstein(spec)
    a, b, c = phi_eval(f, lam), phi_eval(f, k * lam), phi_eval(f, k * k * lam)
    assert a < b < c
    # concavity along a geometric triple: slopes decrease
    assert (c - b) / (k * k * lam - k * lam) <= (b - a) / (k * lam - lam) * (1 + 1e-9)
    # psi(lam)/lam decreasing (Bernstein functions are sublinear)
    assert f.psi(k * lam) / (k * lam) <= f.psi(lam) / lam * (1 + 1e-9)


def test_sum_adds_exponents():
    f = sum_of([stable(0.5), gamma_subordinator()])
    for lam in (0.1, 1.0, 10.0):
        assert psi_quad(f, lam) == pytest.approx(lam**0.25 + math.log1p(lam), rel=1e-8)


@given(alphas)
def test_stable_growth_constant(alpha):
    # mu(r) = c r^{-1-alpha/2}, so mu(r)/mu(2r) = 2^{1+alpha/2} at every scale
    c = check_growth_condition(stable(alpha), 1.0)
    assert c == pytest.approx(2 ** (1 + alpha / 2), rel=1e-9)


def test_growth_violation_for_truncated_density():
    with pytest.raises(GrowthConditionViolation):
        check_growth_condition(truncated(stable(1.0), 0.5), 1.0)


def test_monotone_convex_density():
    assert check_monotone_convex(stable(1.0))
    assert check_monotone_convex(gamma_subordinator())


@given(alphas)
def test_tail_mass_closed_form(alpha):
    # mu(t) = beta / Gamma(1 - beta) t^{-1-beta}: int min(1, t) mu = c/(1-beta) + c/beta
    beta = alpha / 2
    c = beta / math.gamma(1 - beta)
    assert levy_tail_mass(stable(alpha)) == pytest.approx(c / (1 - beta) + c / beta, rel=1e-7)


@pytest.mark.parametrize("p", [2.5, 0.5])
def test_tail_mass_rejects_divergent(p):
    with pytest.raises(DivergentIntegralError):
        levy_tail_mass(BernsteinFunction(levy_density=PowerDensity(p)))


@pytest.mark.parametrize("spec", ["stable:alpha=2.5", "stable:alpha=1,b=3", "weird", "sum:stable", "gamma:x=1"])
def test_parse_rejects(spec):
    with pytest.raises(ValueError):
        parse_bernstein(spec)


def test_lambda_must_be_positive():
    with pytest.raises(ValueError):
        psi_quad(stable(1.0), 0.0)
    with pytest.raises(ValueError):
        phi_eval(stable(1.0), -1.0)


def test_mu_is_completely_monotone_sample():
    t = np.geomspace(1e-4, 1e3, 200)
    m = stable(0.7).mu(t)
    assert np.all(np.diff(m) < 0)
