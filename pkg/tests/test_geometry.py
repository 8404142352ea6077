import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.geometry import (HalfSpace, Intersection, make_ball, make_graph_box, make_slit_box, parse_domain,
                             round_intersection, sample_boundary_points)

coord = st.floats(min_value=-2.0, max_value=2.0)
points3 = st.tuples(coord, coord, coord).map(np.array)


@given(points3)
def test_ball_signed_distance_and_projection(x):
    B = make_ball([0.1, 0.0, -0.2], 0.8)
    sd = B.signed_distance(x)
    assert sd == pytest.approx(0.8 - np.linalg.norm(x - B.center))
    if np.linalg.norm(x - B.center) > 1e-6:
        p = B.project(x)
        assert abs(B.signed_distance(p)) < 1e-12
        assert np.linalg.norm(p - x) == pytest.approx(abs(sd), abs=1e-12)


@given(points3)
def test_halfspace(x):
    H = HalfSpace([0, 0, 1.0], 0.25)
    assert H.signed_distance(x) == pytest.approx(x[2] - 0.25)
    assert not H.bounded


@given(points3)
def test_slitbox_distance_is_one_lipschitz_probe(x):
    D = make_slit_box(side=2.0, slab_thickness=0.25, slit_reach=1.0, smoothing=0.05, dim=3)
    sd = float(D.signed_distance(x))
    if sd > 1e-3:
        # the ball of radius sd is inside D
        rng = np.random.default_rng(0)
        v = rng.standard_normal((64, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        assert np.all(D.signed_distance(x + 0.999 * sd * v) > 0)
    g = D.gradient(x[None])[0]
    assert np.linalg.norm(g) <= 1 + 1e-6


def test_slitbox_membership():
    D = make_slit_box(side=2.0, slab_thickness=0.25, slit_reach=1.0, smoothing=0.0, dim=3)
    assert D.contains(np.array([0.0, 0.0, 0.1]))
    assert D.contains(np.array([0.0, 0.0, -0.3]))
    assert not D.contains(np.array([0.0, 0.0, -0.1]))     # inside the slab
    assert D.contains(np.array([1.5, 0.0, -0.1]))         # past the slit reach
    assert not D.contains(np.array([0.0, 0.0, 2.5]))


@pytest.mark.parametrize("kw", [dict(smoothing=0.2), dict(slab_thickness=3.0), dict(slit_reach=5.0)])
def test_slitbox_rejects(kw):
    base = dict(side=2.0, slab_thickness=0.25, slit_reach=1.0, smoothing=0.0, dim=3)
    base.update(kw)
    with pytest.raises(ValueError):
        make_slit_box(**base)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_round_intersection_sharp_limit(a, b):
    v = round_intersection(np.array(a), np.array(b), 0.0)
    if a > 0 and b > 0:
        assert v == min(a, b)
    else:
        assert v <= 0
        assert v == pytest.approx(-np.hypot(max(-a, 0), max(-b, 0)))


def test_intersection():
    D = Intersection([make_ball([0, 0], 1.0), HalfSpace([0, 1.0], 0.0)])
    assert D.bounded
    assert D.signed_distance(np.array([0, 0.5])) == pytest.approx(0.5)
    assert D.signed_distance(np.array([0, -0.5])) == pytest.approx(-0.5)
    lo, hi = D.bounding_box
    assert np.allclose(lo, -1) and np.allclose(hi, 1)


@given(st.floats(min_value=-0.2, max_value=0.2), st.floats(min_value=-0.2, max_value=0.2))
def test_graph_box_on_ball(a, b):
    B = make_ball([0, 0, 0], 1.0)
    Q = np.array([0, 0, -1.0])
    G = make_graph_box(B, Q, 0.5, 0.5)
    yt = np.array([a, b])
    # graph point lies on the sphere
    y = Q + yt @ G.frame[:-1] + G.graph(yt) * G.normal
    assert abs(B.signed_distance(y)) < 1e-12
    assert G.graph(np.zeros(2)) == pytest.approx(0.0)
    # Newton graph agrees with the closed form
    assert G._graph_newton(yt) == pytest.approx(G.graph(yt), abs=1e-9)


def test_graph_box_rejects():
    B = make_ball([0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        make_graph_box(B, np.array([0, 0, -0.9]), 0.5, 0.5)
    with pytest.raises(ValueError):
        make_graph_box(B, np.array([0, 0, -1.0]), 2.0, 0.5)
    with pytest.raises(ValueError):
        make_graph_box(make_slit_box(2.0, 0.25, 1.0, 0.0, 3), np.array([0, 0, 0.0]), 0.1, 0.1)


def test_parse_domain():
    assert parse_domain("ball:r=0.5,center=1;0", 2).radius == 0.5
    assert parse_domain("halfspace:offset=0.1", 3).offset == 0.1
    assert parse_domain("slitbox:side=2,thickness=0.25,reach=1,smooth=0.05", 3).smoothing == 0.05
    for bad in ["ball:r=1,center=1;0", "ball:q=1", "torus"]:
        with pytest.raises(ValueError):
            parse_domain(bad, 3)


def test_sample_boundary_points():
    B = make_ball([0, 0, 0], 1.0)
    pts = sample_boundary_points(B, 50, np.random.default_rng(1))
    assert pts.shape == (50, 3)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
