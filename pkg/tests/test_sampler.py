import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.bernstein import pure_bm, stable
from sbmkit.geometry import make_ball, make_halfspace
from sbmkit.jump_kernel import build_kernel
from sbmkit.rng import chunk_generator, stream_tag
from sbmkit.sampler import (ExitBatch, Grading, SchemeConfig, StartNearBoundaryWarning, jump_params,
                            simulate_exit, simulate_exit_batch)

BALL = make_ball(np.zeros(3), 1.0)
BM = build_kernel(pure_bm(), 3)
ST = build_kernel(stable(1.0), 3)


def test_scheme_validation():
    with pytest.raises(ValueError):
        SchemeConfig(dt=0)
    with pytest.raises(ValueError):
        SchemeConfig(eps=1.5)
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.1, time_cap=1.0)


@given(st.integers(0, 2**32), st.integers(0, 2**40), st.integers(0, 1000))
def test_chunk_streams_are_reproducible(seed, stream, chunk):
    a = chunk_generator(seed, stream, chunk).random(4)
    b = chunk_generator(seed, stream, chunk).random(4)
    c = chunk_generator(seed, stream, chunk + 1).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_stream_tag_stable():
    assert stream_tag("a", 1) == stream_tag("a", 1) != stream_tag("a", 2)


@pytest.mark.parametrize("kernel", [BM, ST])
def test_worker_count_does_not_change_results(kernel):
    sch = SchemeConfig(dt=2e-3, seed=3, stream=7)
    runs = [simulate_exit_batch(BALL, np.zeros(3), kernel, sch, 3000, workers=w, chunk_size=512) for w in (1, 4)]
    for f in ("exit_time", "exit_position", "exited_by_jump", "n_jumps"):
        assert np.array_equal(getattr(runs[0], f), getattr(runs[1], f))


def test_exit_positions_lie_outside():
    sch = SchemeConfig(dt=2e-3, seed=1)
    b = simulate_exit_batch(BALL, np.zeros(3), ST, sch, 4000)
    assert not b.truncated.any()
    sd = BALL.signed_distance(b.exit_position)
    # diffusive exits are projected onto the boundary; jump exits land outside
    assert np.all(sd[~b.exited_by_jump] == pytest.approx(0.0, abs=1e-9))
    assert np.all(sd[b.exited_by_jump] <= 0)
    assert np.all(BALL.signed_distance(b.pre_exit_position) > 0)
    assert 0 < b.exited_by_jump.mean() < 1


def test_pure_bm_never_jumps():
    b = simulate_exit_batch(BALL, np.zeros(3), BM, SchemeConfig(dt=2e-3), 1000)
    assert b.n_jumps.sum() == 0 and not b.exited_by_jump.any()


def test_exit_time_of_unit_ball():
    b = simulate_exit_batch(BALL, np.zeros(3), BM, SchemeConfig(dt=5e-4, seed=2), 40_000)
    se = b.exit_time.std() / math.sqrt(b.n)
    assert abs(b.exit_time.mean() - 1 / 6) < 4 * se + 2e-3


def test_jump_count_matches_rate():
    # E N = Lambda_eps E tau (compensation formula for the Poisson jump count)
    sch = SchemeConfig(dt=1e-3, eps=0.1, seed=4)
    b = simulate_exit_batch(BALL, np.zeros(3), ST, sch, 20_000)
    lam = ST.tail_mass(0.1)
    ratio = b.n_jumps.mean() / (lam * b.exit_time.mean())
    assert ratio == pytest.approx(1.0, abs=0.03)


def test_jump_params_fold():
    jp = jump_params(ST, SchemeConfig(eps=0.05))
    assert jp.rate == pytest.approx(4 / (math.pi * 0.05), rel=1e-6)
    assert jp.fold == pytest.approx(4 * 0.05 / math.pi / 6, rel=1e-6)
    assert jump_params(ST, SchemeConfig(eps=0.05, fold_small_jumps=False)).fold == 0


def test_time_cap_truncates():
    sch = SchemeConfig(dt=1e-3, time_cap=0.1)
    b = simulate_exit_batch(make_ball(np.zeros(3), 5.0), np.zeros(3), BM, sch, 200)
    assert b.truncated.all()
    assert b.truncated_fraction == 1.0


def test_unbounded_domain_truncated_at_box():
    H = make_halfspace([0, 0, 1.0], 0.0, box_half_width=1.0)
    b = simulate_exit_batch(H, [0, 0, 0.5], BM, SchemeConfig(dt=1e-3), 500)
    esc = b.truncated
    assert np.all(~H.in_bounding_box(b.exit_position[esc]) | (b.exit_time[esc] >= 19.99))
    assert np.all(b.exit_position[~esc][:, 2] == pytest.approx(0.0, abs=1e-12))


def test_near_boundary_warning():
    with pytest.warns(StartNearBoundaryWarning):
        simulate_exit_batch(BALL, [0, 0, 0.99], BM, SchemeConfig(dt=1e-3), 10)


def test_graded_step_silences_warning_and_is_deterministic(recwarn):
    g = Grading(8.0, 1e-4, 1e-3)
    sch = SchemeConfig(dt=1e-3, seed=5)
    a = simulate_exit_batch(BALL, [0, 0, 0.99], ST, sch, 500, dt_fn=g, chunk_size=100)
    b = simulate_exit_batch(BALL, [0, 0, 0.99], ST, sch, 500, dt_fn=g, workers=3, chunk_size=100)
    assert not [w for w in recwarn if issubclass(w.category, StartNearBoundaryWarning)]
    assert np.array_equal(a.exit_time, b.exit_time)


def test_grading_dt():
    dt = Grading(8.0, 1e-3, 1e-3).bind(BALL)
    x = np.array([[0, 0, 0], [0, 0, 0.99], [0, 0, 0.99999]])
    v = dt(x)
    assert v[0] == 1e-3
    assert v[1] == pytest.approx(0.5 * (0.01 / 8) ** 2)
    assert v[2] == pytest.approx(0.5 * (1e-3 / 8) ** 2)


def test_occupation_of_constant_is_exit_time():
    b = simulate_exit_batch(BALL, np.zeros(3), ST, SchemeConfig(dt=1e-3), 300,
                            occupation=lambda P: np.ones((P.shape[0], 1)), n_occ=1)
    assert np.allclose(b.occupation[:, 0], b.exit_time)


def test_single_path_and_records(tmp_path):
    rec = simulate_exit(BALL, np.zeros(3), ST, SchemeConfig(dt=1e-3, seed=9), record_occupation=True)
    assert rec.exit_time > 0 and not rec.truncated
    assert len(rec.occupation_samples) >= 1
    b = simulate_exit_batch(BALL, np.zeros(3), ST, SchemeConfig(dt=1e-3), 10)
    assert len(b.records()) == 10
    b.dump(tmp_path / "b.npz")
    z = np.load(tmp_path / "b.npz")
    assert np.array_equal(z["exit_time"], b.exit_time)
    both = ExitBatch.concatenate([b, b], 3)
    assert both.n == 20


def test_rejects_exterior_start():
    with pytest.raises(ValueError):
        simulate_exit(BALL, [2.0, 0, 0], BM, SchemeConfig())
