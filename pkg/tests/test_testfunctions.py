import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.testfunctions import (bounded_quadratic, compact_bump, constant, gaussian_bump, parse_test_function,
                                  quadratic)

coord = st.floats(min_value=-0.8, max_value=0.8)
points = st.tuples(coord, coord, coord).map(np.array)


def fd_laplacian(f, x, h=1e-4):
    return sum((f(x + h * e) + f(x - h * e) - 2 * f(x)) / h**2 for e in np.eye(x.size))


@pytest.mark.parametrize("f", [quadratic((0.1, 0, 0)), bounded_quadratic((0, 0.2, 0), 0.7),
                               gaussian_bump((0.2, 0, 0), 0.5), compact_bump((0, 0, 0.3), 0.9), constant(3)])
@given(x=points)
def test_laplacian_matches_finite_differences(f, x):
    if f.kind == "compact_bump" and abs(np.linalg.norm(x - f.center) - f.scale) < 0.05:
        return
    assert f.laplacian(x) == pytest.approx(fd_laplacian(f, x), rel=1e-4, abs=1e-3)


def test_bump_is_compactly_supported_and_smooth_at_edge():
    f = compact_bump((0.0, 0.0), 0.5)
    x = np.array([[0.5, 0.0], [0.6, 0.1], [0.4999, 0.0]])
    v = f(x)
    assert v[0] == 0 and v[1] == 0 and 0 <= v[2] < 1e-10
    assert np.all(f.laplacian(x[:2]) == 0)
    assert f(np.zeros(2)) == pytest.approx(1.0)


def test_limits_at_infinity():
    assert bounded_quadratic((0, 0, 0)).limit_at_infinity == 1.0
    assert gaussian_bump((0, 0, 0)).limit_at_infinity == 0.0
    assert quadratic((0, 0, 0)).limit_at_infinity == np.inf
    assert not quadratic((0, 0, 0)).bounded


def test_parse():
    f = parse_test_function("gaussian:center=0.2;0;0,scale=0.5", 3)
    assert f.kind == "gaussian" and f.center == (0.2, 0.0, 0.0) and f.scale == 0.5
    assert parse_test_function("bump:radius=0.4", 3).scale == 0.4
    for bad in ["gaussian:center=1;2", "wave", "gaussian:width=2"]:
        with pytest.raises(ValueError):
            parse_test_function(bad, 3)
