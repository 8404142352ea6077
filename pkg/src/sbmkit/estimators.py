"""Monte Carlo estimators of exit distributions, exit times, Green functions and
the ratio statistics behind boundary Harnack / Carleson checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import Ball, Domain, make_ball
from .jump_kernel import JumpKernel, build_kernel, generator_apply, surface_area
from .rng import stream_tag
from .sampler import ExitBatch, SchemeConfig, simulate_exit_batch

TRUNC_FLAG = 1e-3
TRUNC_WARN = 1e-2
SIGNIFICANCE = 3.0


@dataclass
class EstimatorResult:
    value: float
    std_error: float
    n_paths: int
    truncated_fraction: float = 0.0
    provenance: dict = field(default_factory=dict)
    warning: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return self.truncated_fraction > TRUNC_FLAG

    @property
    def reliable(self) -> bool:
        return self.warning is None

    def significant(self, k: float = SIGNIFICANCE) -> bool:
        return self.value > k * self.std_error

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n": self.n_paths,
                "truncated_fraction": self.truncated_fraction, "warning": self.warning,
                **self.provenance, **({"extra": self.extra} if self.extra else {})}


def _provenance(scheme: SchemeConfig, **more) -> dict:
    return {"seed": scheme.seed, "scheme": scheme.summary(), **more}


def summarize(samples: np.ndarray, batch: ExitBatch, scheme: SchemeConfig, **extra) -> EstimatorResult:
    n = samples.size
    if n == 0:
        return EstimatorResult(float("nan"), float("nan"), 0, 0.0, _provenance(scheme), "no paths")
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    tf = batch.truncated_fraction
    warn = f"truncated fraction {tf:.4f} exceeds {TRUNC_WARN}" if tf > TRUNC_WARN else None
    return EstimatorResult(mean, se, n, tf, _provenance(scheme), warn, dict(extra))


def _run(domain, x, kernel, scheme, n, workers, chunk_size, **kw) -> ExitBatch:
    return simulate_exit_batch(domain, x, kernel, scheme, n, workers=workers, chunk_size=chunk_size, **kw)


def _tagged(scheme: SchemeConfig, *labels) -> SchemeConfig:
    return replace(scheme, stream=stream_tag(scheme.stream, *labels))


def _check_interior(domain: Domain, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if float(domain.signed_distance(x)) <= 0:
        raise ValueError("point must lie strictly inside the domain")
    return x


# ---------------------------------------------------------------------------
# exit distribution and exit time


def payoff_samples(batch: ExitBatch, payoff: Callable) -> np.ndarray:
    """payoff(X_tau) per path; truncated paths have not reached the cemetery and score 0."""
    v = np.asarray(payoff(batch.exit_position), dtype=float)
    return np.where(batch.truncated, 0.0, v)


def exit_functional(domain: Domain, x, payoff: Callable, kernel: JumpKernel, scheme: SchemeConfig,
                    n: int, workers: int = 1, chunk_size: int = 4096,
                    batch: Optional[ExitBatch] = None, dt_fn=None) -> EstimatorResult:
    """E_x[payoff(X_tau_D)]: the harmonic-function evaluator."""
    if batch is None:
        _check_interior(domain, x)
        batch = _run(domain, x, kernel, scheme, n, workers, chunk_size, dt_fn=dt_fn)
    return summarize(payoff_samples(batch, payoff), batch, scheme)


def expected_exit_time(domain: Domain, x, kernel: JumpKernel, scheme: SchemeConfig, n: int,
                       workers: int = 1, chunk_size: int = 4096,
                       batch: Optional[ExitBatch] = None, dt_fn=None) -> EstimatorResult:
    if not domain.bounded:
        raise ValueError("expected exit time needs a bounded domain")
    if batch is None:
        _check_interior(domain, x)
        batch = _run(domain, x, kernel, scheme, n, workers, chunk_size, dt_fn=dt_fn)
    return summarize(batch.exit_time, batch, scheme)


# ---------------------------------------------------------------------------
# Green function


def epanechnikov(z: np.ndarray, h: float, d: int) -> np.ndarray:
    """Normalised kernel d(d+2)/(2|S^{d-1}| h^d) (1 - |z|^2/h^2)_+."""
    c = d * (d + 2) / (2.0 * surface_area(d) * h**d)
    q = np.sum(z * z, axis=-1) / (h * h)
    return c * np.maximum(1.0 - q, 0.0)


def green_functions(domain: Domain, x, ys, kernel: JumpKernel, scheme: SchemeConfig, n: int,
                    bandwidths=None, workers: int = 1, chunk_size: int = 4096, dt_fn=None) -> list:
    """G_D(x, y_k) for several targets from one simulation started at x.

    Each target is estimated with bandwidth h_k and with h_k/2; the h/2 value
    is reported in ``extra`` as the bandwidth-sensitivity probe.
    """
    if not domain.bounded:
        raise ValueError("Green function estimation needs a bounded domain")
    x = _check_interior(domain, x)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    dist = np.linalg.norm(ys - x, axis=1)
    if np.any(dist == 0):
        raise ValueError("x and y must differ")
    if np.any(domain.signed_distance(ys) <= 0):
        raise ValueError("targets must lie inside the domain")
    h = dist / 6.0 if bandwidths is None else np.broadcast_to(np.asarray(bandwidths, dtype=float), dist.shape)
    if np.any(dist < 3 * h):
        raise ValueError("|x - y| must be at least 3 bandwidths")
    d = domain.dim
    K = ys.shape[0]

    def occ(P):
        out = np.empty((P.shape[0], 2 * K))
        for k in range(K):
            z = P - ys[k]
            out[:, k] = epanechnikov(z, h[k], d)
            out[:, K + k] = epanechnikov(z, h[k] / 2, d)
        return out

    batch = _run(domain, x, kernel, scheme, n, workers, chunk_size, occupation=occ, n_occ=2 * K, dt_fn=dt_fn)
    res = []
    for k in range(K):
        half = summarize(batch.occupation[:, K + k], batch, scheme)
        r = summarize(batch.occupation[:, k], batch, scheme, bandwidth=float(h[k]),
                      value_half_bandwidth=half.value, std_error_half_bandwidth=half.std_error)
        res.append(r)
    return res


def green_function(domain: Domain, x, y, kernel: JumpKernel, scheme: SchemeConfig, n: int,
                   bandwidth: Optional[float] = None, workers: int = 1,
                   chunk_size: int = 4096, dt_fn=None) -> EstimatorResult:
    return green_functions(domain, x, [y], kernel, scheme, n,
                           None if bandwidth is None else [bandwidth], workers, chunk_size, dt_fn)[0]


def g_reference(domain: Domain, x, y) -> float:
    """Closed-form comparison function g_D(x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = domain.dim
    if d < 2:
        raise ValueError("g_reference needs d >= 2")
    r = float(np.linalg.norm(x - y))
    if r == 0:
        raise ValueError("x and y must differ")
    dx = float(domain.signed_distance(x))
    dy = float(domain.signed_distance(y))
    if dx <= 0 or dy <= 0:
        raise ValueError("points must be interior")
    q = dx * dy / r**2
    if d == 2:
        return math.log1p(q)
    return r ** (2 - d) * min(1.0, q)


def disc_green(x, y, constant: float = 1.0 / (4 * math.pi), L: float = 1.0) -> float:
    """Green function of B(0, L) in the plane: constant * log(1 + (L^2-|x|^2)(L^2-|y|^2)/(L^2|x-y|^2)).

    constant = 1/(4 pi) for generator Delta (variance 2t per coordinate);
    1/(2 pi) is the value for generator Delta/2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = (L * L - x @ x) * (L * L - y @ y)
    return constant * math.log1p(num / (L * L * float((x - y) @ (x - y))))


# ---------------------------------------------------------------------------
# ratio statistics


@dataclass
class RatioStatistic:
    value: float
    excluded_pairs: list
    n_pairs: int
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "excluded_pairs": [list(p) for p in self.excluded_pairs],
                "n_pairs": self.n_pairs, "inconclusive": self.inconclusive}


def pair_ratio_sup(values, ses, weights=None, k: float = SIGNIFICANCE) -> RatioStatistic:
    """sup over ordered pairs i != j of (w_i v_i)/(w_j v_j), skipping pairs whose
    denominator is not k-sigma positive."""
    v = np.asarray(values, dtype=float)
    s = np.asarray(ses, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    sig = v > k * s
    best = -np.inf
    excluded = []
    used = 0
    for i in range(v.size):
        for j in range(v.size):
            if i == j:
                continue
            if not sig[j]:
                excluded.append((i, j))
                continue
            used += 1
            best = max(best, (w[i] * v[i]) / (w[j] * v[j]))
    if used == 0:
        return RatioStatistic(float("nan"), excluded, 0, True)
    return RatioStatistic(float(best), excluded, used, False)


def loglog_slope(t, values, ses=None, k: float = SIGNIFICANCE):
    """Weighted least-squares slope of log value against log t over significant points.

    Returns (slope, slope_se, used_mask)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    s = np.zeros_like(v) if ses is None else np.asarray(ses, dtype=float)
    use = v > k * s
    if use.sum() < 2:
        return float("nan"), float("nan"), use
    X = np.log(t[use])
    Y = np.log(v[use])
    rel = np.where(s[use] > 0, s[use] / v[use], 0.0)
    w = 1.0 / rel**2 if np.all(rel > 0) else np.ones_like(X)
    W = w.sum()
    xm = (w * X).sum() / W
    ym = (w * Y).sum() / W
    sxx = (w * (X - xm) ** 2).sum()
    slope = (w * (X - xm) * (Y - ym)).sum() / sxx
    se = math.sqrt(1.0 / sxx) if np.all(rel > 0) else float("nan")
    return float(slope), float(se), use


def _check_vanishing(domain: Domain, Q, r: float, payoff, rng_seed: int = 0, n_probe: int = 4000):
    """Reject payoffs that do not vanish on D^c within B(Q, r)."""
    rng = np.random.default_rng(rng_seed)
    d = domain.dim
    v = rng.standard_normal((n_probe, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pts = np.asarray(Q) + v * (r * rng.random(n_probe) ** (1.0 / d))[:, None]
    outside = pts[domain.signed_distance(pts) <= 0]
    if outside.size and np.any(np.asarray(payoff(outside)) != 0):
        raise ValueError("payoff must vanish on the complement of D inside B(Q, r)")


def _eval_points(domain, points, payoff, kernel, scheme, n, workers, chunk_size, label, dt_fn=None):
    out = []
    for i, p in enumerate(np.atleast_2d(points)):
        sch = _tagged(scheme, label, i)
        out.append(exit_functional(domain, p, payoff, kernel, sch, n, workers, chunk_size, dt_fn=dt_fn))
    return out


@dataclass
class BHPRecord:
    sup_ratio: RatioStatistic
    decay_slope: float
    decay_slope_se: float
    grid_values: list
    ray_t: np.ndarray
    ray_values: list
    two_function_ratio: Optional[RatioStatistic] = None
    second_values: Optional[list] = None

    def to_dict(self) -> dict:
        out = {"sup_ratio": self.sup_ratio.to_dict(), "decay_slope": self.decay_slope,
               "decay_slope_se": self.decay_slope_se,
               "grid_values": [r.to_dict() for r in self.grid_values],
               "ray_t": list(map(float, self.ray_t)), "ray_values": [r.to_dict() for r in self.ray_values]}
        if self.two_function_ratio is not None:
            out["two_function_ratio"] = self.two_function_ratio.to_dict()
            out["second_values"] = [r.to_dict() for r in self.second_values]
        return out


def normal_ray(domain: Domain, Q, ts) -> np.ndarray:
    n = domain.inward_normal(np.asarray(Q, dtype=float))
    return np.asarray(Q, dtype=float)[None, :] + np.asarray(ts, dtype=float)[:, None] * n[None, :]


def bhp_statistic(domain: Domain, Q, r: float, payoff, grid, kernel: JumpKernel, scheme: SchemeConfig,
                  n: int, ray_points: int = 7, workers: int = 1, chunk_size: int = 4096,
                  dt_fn=None, second_payoff=None) -> BHPRecord:
    """sup of (f(x)/delta(x)) / (f(y)/delta(y)) over grid pairs plus the decay slope of f
    along the inward normal at Q, with f(x) = E_x payoff(X_tau_D).

    With ``second_payoff`` g, the same exits also give sup of (f/g)(x) / (f/g)(y)."""
    _check_vanishing(domain, Q, r, payoff)
    if second_payoff is not None:
        _check_vanishing(domain, Q, r, second_payoff)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if np.any(np.linalg.norm(grid - Q, axis=1) >= r / 2):
        raise ValueError("grid points must lie in B(Q, r/2)")
    vals, gvals = [], []
    for i, p in enumerate(grid):
        sch = _tagged(scheme, "bhp-grid", i)
        b = _run(domain, p, kernel, sch, n, workers, chunk_size, dt_fn=dt_fn)
        vals.append(exit_functional(domain, p, payoff, kernel, sch, n, batch=b))
        if second_payoff is not None:
            gvals.append(exit_functional(domain, p, second_payoff, kernel, sch, n, batch=b))
    delta = domain.signed_distance(grid)
    stat = pair_ratio_sup([v.value for v in vals], [v.std_error for v in vals], 1.0 / delta)
    two = None
    if second_payoff is not None:
        q, qse = [], []
        for a, b in zip(vals, gvals):
            if b.value > 0 and a.value > 0:
                q.append(a.value / b.value)
                qse.append(q[-1] * math.hypot(a.std_error / a.value, b.std_error / b.value))
            else:
                q.append(0.0)
                qse.append(float("inf"))
        two = pair_ratio_sup(q, qse)
    ts = np.geomspace(r / 64, r / 4, ray_points)
    ray = normal_ray(domain, Q, ts)
    rvals = _eval_points(domain, ray, payoff, kernel, scheme, n, workers, chunk_size, "bhp-ray", dt_fn)
    slope, sse, _ = loglog_slope(ts, [v.value for v in rvals], [v.std_error for v in rvals])
    return BHPRecord(stat, slope, sse, vals, ts, rvals, two, gvals if second_payoff is not None else None)


def harnack_statistic(center, r: float, payoff, kernel: JumpKernel, scheme: SchemeConfig, grid, n: int,
                      workers: int = 1, chunk_size: int = 4096, dt_fn=None, density=None):
    """max over grid pairs of f(x)/f(y), f(x) = E_x payoff(X_tau_B(center, r)).

    If ``payoff`` is the indicator of a set V at positive distance from the ball and
    ``density`` is J_V, f is estimated by the occupation integral of J_V instead of
    by counting exits into V (same quantity, far smaller variance for small V)."""
    center = np.asarray(center, dtype=float)
    if r > 1:
        raise ValueError("Harnack statistic is stated for r <= 1")
    ball = make_ball(center, r)
    _check_vanishing_ball(ball, payoff)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if np.any(np.linalg.norm(grid - center, axis=1) >= r / 2):
        raise ValueError("grid must lie in B(center, r/2)")
    if density is None:
        vals = _eval_points(ball, grid, payoff, kernel, scheme, n, workers, chunk_size, "harnack", dt_fn)
    else:
        vals = [levy_system_estimate(ball, p, density, kernel, _tagged(scheme, "harnack", i), n, workers,
                                     chunk_size, dt_fn) for i, p in enumerate(grid)]
    v = np.array([x.value for x in vals])
    if np.all(v == v[0]) and np.all([x.std_error == 0 for x in vals]):
        return RatioStatistic(1.0 if v[0] > 0 else float("nan"), [], v.size * (v.size - 1), v[0] <= 0), vals
    return pair_ratio_sup(v, [x.std_error for x in vals]), vals


def _check_vanishing_ball(ball: Ball, payoff, n_probe: int = 2000):
    rng = np.random.default_rng(1)
    v = rng.standard_normal((n_probe, ball.dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pts = ball.center + ball.radius * v * (1 + 1e-12)
    # f must be harmonic in the ball: payoff supported outside the closed ball is enough
    inner = ball.center + ball.radius * v * rng.random((n_probe, 1))
    if np.any(np.asarray(payoff(inner)) != 0):
        raise ValueError("payoff must vanish inside the ball")
    del pts


def default_boundary_grid(domain: Domain, Q, r: float, heights=(1 / 16, 1 / 8, 1 / 4, 3 / 8),
                          laterals=(0.0, 0.2, -0.2)) -> np.ndarray:
    """Points in D ∩ B(Q, r/2) at heights h*r above Q along the normal, shifted laterally by l*r."""
    from .geometry import make_graph_box
    gb = make_graph_box(domain, Q, min(r, domain.characteristics[0]), min(r, domain.characteristics[0]))
    t1 = gb.frame[0]
    pts = []
    for h in heights:
        for l in laterals:
            p = np.asarray(Q, dtype=float) + h * r * gb.normal + l * r * t1
            if domain.signed_distance(p) > 0 and np.linalg.norm(p - Q) < r / 2:
                pts.append(p)
    return np.array(pts)


def carleson_statistic(domain: Domain, Q, r: float, payoff, kernel: JumpKernel, scheme: SchemeConfig,
                       n: int, grid=None, workers: int = 1, chunk_size: int = 4096, dt_fn=None):
    """sup over grid in D ∩ B(Q, r/2) of f(x)/f(x0), x0 = Q + (r/2) n(Q)."""
    _check_vanishing(domain, Q, r, payoff)
    Q = np.asarray(Q, dtype=float)
    x0 = normal_ray(domain, Q, [r / 2])[0]
    grid = default_boundary_grid(domain, Q, r) if grid is None else np.atleast_2d(grid)
    f0 = exit_functional(domain, x0, payoff, kernel, _tagged(scheme, "carleson-ref"), n, workers, chunk_size,
                         dt_fn=dt_fn)
    vals = _eval_points(domain, grid, payoff, kernel, scheme, n, workers, chunk_size, "carleson", dt_fn)
    v = np.array([x.value for x in vals])
    if f0.value == 0 and f0.std_error == 0 and np.all(v == 0):
        return RatioStatistic(0.0, [], 0, False), f0, vals
    if not f0.significant():
        return RatioStatistic(float("nan"), [(i, -1) for i in range(v.size)], 0, True), f0, vals
    return RatioStatistic(float(np.max(v) / f0.value), [], v.size, False), f0, vals


# ---------------------------------------------------------------------------
# Martin kernel


@dataclass
class MartinProbe:
    ratios: list
    targets: np.ndarray
    fluctuation: float
    pooled_se: float
    stabilized: bool
    inconclusive: list

    def to_dict(self) -> dict:
        return {"ratios": [r.to_dict() for r in self.ratios], "targets": self.targets.tolist(),
                "fluctuation": self.fluctuation, "pooled_se": self.pooled_se,
                "stabilized": self.stabilized, "inconclusive": self.inconclusive}


def martin_ratio(domain: Domain, x, x0, z, ts: Sequence[float], kernel: JumpKernel, scheme: SchemeConfig,
                 n: int, workers: int = 1, chunk_size: int = 4096, dt_fn=None) -> MartinProbe:
    """M(x, y_k) = G(x, y_k)/G(x0, y_k) along y_k = z + t_k n(z), t_k decreasing."""
    ts = np.asarray(ts, dtype=float)
    if np.any(np.diff(ts) >= 0):
        raise ValueError("t_k must be decreasing")
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    ys = normal_ray(domain, z, ts)
    dist = np.minimum(np.linalg.norm(ys - x, axis=1), np.linalg.norm(ys - x0, axis=1))
    h = np.minimum(ts / 2, dist / 6)
    same = np.array_equal(x, x0)
    gx = green_functions(domain, x, ys, kernel, _tagged(scheme, "martin", tuple(x)), n, h, workers, chunk_size,
                         dt_fn)
    g0 = gx if same else green_functions(domain, x0, ys, kernel, _tagged(scheme, "martin", tuple(x0)), n, h,
                                         workers, chunk_size, dt_fn)
    ratios, bad = [], []
    for k, (a, b) in enumerate(zip(gx, g0)):
        if same:
            m, se = 1.0, 0.0
        elif b.value > 0:
            m = a.value / b.value
            se = abs(m) * math.sqrt((a.std_error / max(a.value, 1e-300)) ** 2 + (b.std_error / b.value) ** 2)
        else:
            m, se = float("nan"), float("inf")
        ok = same or (a.significant() and b.significant())
        if not ok:
            bad.append(k)
        ratios.append(EstimatorResult(m, se, n, max(a.truncated_fraction, b.truncated_fraction),
                                      a.provenance, a.warning or b.warning, {"t": float(ts[k])}))
    last = ratios[-3:]
    fl = max((abs(p.value - q.value) for p, q in zip(last[:-1], last[1:])), default=0.0)
    pooled = max((math.hypot(p.std_error, q.std_error) for p, q in zip(last[:-1], last[1:])), default=0.0)
    return MartinProbe(ratios, ys, float(fl), float(pooled), bool(fl <= SIGNIFICANCE * pooled), bad)


# ---------------------------------------------------------------------------
# Dynkin identity


class GeneratorTable:
    """(Delta + A) f tabulated along |x - c| for a radial f centred at c."""

    def __init__(self, kernel: JumpKernel, f, s_max: float, n_nodes: int = 257, check: bool = True,
                 rtol: float = 1e-5):
        self.kernel = kernel
        self.f = f
        d = kernel.dim
        c = np.asarray(f.center, dtype=float)
        e = np.zeros(d)
        e[0] = 1.0
        self.analytic = kernel.is_zero
        if self.analytic:
            return
        edges = [0.0, s_max]
        sr = f.support_radius() if hasattr(f, "support_radius") else np.inf
        if sr < s_max:
            edges = [0.0, sr, s_max]
        m = n_nodes // (len(edges) - 1) + 1
        cheb = 0.5 * (1 - np.cos(np.linspace(0, math.pi, m)))
        s = np.unique(np.concatenate([a + (b - a) * cheb for a, b in zip(edges[:-1], edges[1:])]))
        vals = np.array([generator_apply(kernel, f, c + si * e, rtol=rtol) for si in s])
        self._spline = CubicSpline(s, vals)
        self.s_max = s_max
        if check:
            mids = 0.5 * (s[1:] + s[:-1])[:: max(1, n_nodes // 16)]
            direct = np.array([generator_apply(kernel, f, c + si * e, rtol=rtol) for si in mids])
            err = np.max(np.abs(self._spline(mids) - direct)) / max(np.max(np.abs(vals)), 1e-300)
            if err > 1e-5:
                raise RuntimeError(f"generator table interpolation error {err:.2e}")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.analytic:
            return np.asarray(self.f.laplacian(X), dtype=float)
        s = np.linalg.norm(X - self.f.center, axis=-1)
        if np.any(s > self.s_max * (1 + 1e-9)):
            raise ValueError("point outside generator table range")
        return self._spline(s)


def dynkin_residual(domain: Domain, x, f, kernel: JumpKernel, scheme: SchemeConfig, n: int,
                    workers: int = 1, chunk_size: int = 4096, table: Optional[GeneratorTable] = None,
                    dt_fn=None) -> EstimatorResult:
    """E_x f(X_tau) - f(x) - E_x int_0^tau (Delta + A) f(X_t) dt, per path then averaged.

    Paths stopped at the time cap still satisfy the identity at the capped time.
    """
    if not domain.bounded:
        raise ValueError("Dynkin residual needs a bounded domain")
    x = _check_interior(domain, x)
    if table is None:
        lo, hi = domain.bounding_box
        corners = np.array(np.meshgrid(*zip(lo, hi))).reshape(domain.dim, -1).T
        s_max = float(np.max(np.linalg.norm(corners - f.center, axis=1))) * 1.001
        table = GeneratorTable(kernel, f, s_max)
    batch = _run(domain, x, kernel, scheme, n, workers, chunk_size,
                 occupation=lambda P: table(P)[:, None], n_occ=1, dt_fn=dt_fn)
    fx = float(f(x))
    samples = np.asarray(f(batch.exit_position), dtype=float) - fx - batch.occupation[:, 0]
    r = summarize(samples, batch, scheme)
    r.warning = None if r.truncated_fraction <= TRUNC_WARN else r.warning
    return r


# ---------------------------------------------------------------------------
# one-dimensional profile


def boundary_profile(f, b: float, grid, scheme: SchemeConfig, n: int, workers: int = 1,
                     chunk_size: int = 4096, kernel: Optional[JumpKernel] = None, dt_fn=None) -> list:
    """h(x) = P_x(Z exits (0, b) into [b, inf)) for the one-dimensional process of f."""
    k = kernel if kernel is not None else build_kernel(f, 1)
    if k.dim != 1:
        raise ValueError("boundary profile uses the one-dimensional kernel")
    interval = make_ball([b / 2], b / 2)
    grid = np.asarray(grid, dtype=float)
    if np.any((grid <= 0) | (grid >= b)):
        raise ValueError("grid must lie in (0, b)")
    payoff = lambda P: (P[:, 0] >= b).astype(float)
    out = []
    for i, x in enumerate(grid):
        r = exit_functional(interval, [x], payoff, k, _tagged(scheme, "profile", i), n, workers, chunk_size,
                            dt_fn=dt_fn)
        r.extra["x"] = float(x)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Levy-system (Poisson formula) estimator


def levy_system_estimate(domain: Domain, x, density: Callable, kernel: JumpKernel, scheme: SchemeConfig,
                         n: int, workers: int = 1, chunk_size: int = 4096, dt_fn=None) -> EstimatorResult:
    """P_x(X_tau in V) = E_x int_0^tau J_V(X_t) dt for V outside the closure of D,
    with J_V(y) = int_V j(|y - z|) dz supplied as ``density``."""
    x = _check_interior(domain, x)
    batch = _run(domain, x, kernel, scheme, n, workers, chunk_size,
                 occupation=lambda P: np.asarray(density(P), dtype=float)[:, None], n_occ=1, dt_fn=dt_fn)
    return summarize(batch.occupation[:, 0], batch, scheme)


def ball_density(kernel: JumpKernel, center, radius: float, n_t: int = 64, s_range=None,
                 n_table: int = 257) -> Callable:
    """J_V for V = B(center, radius), valid at points outside the closed ball (d >= 2).

    J_V(y) = int_{s-rho}^{s+rho} |S^{d-1}| t^{d-1} j(t) frac(t) dt, s = |y - center|,
    frac(t) the fraction of the sphere S(y, t) inside V. With ``s_range`` the
    quadrature is tabulated once on that range of s and splined in log s.
    """
    from scipy.special import betainc

    d = kernel.dim
    if d < 2:
        raise ValueError("ball_density needs d >= 2")
    c = np.asarray(center, dtype=float)
    rho = float(radius)
    S = surface_area(d)
    xg, wg = np.polynomial.legendre.leggauss(n_t)
    R = kernel.support_radius

    def J(y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        s = np.linalg.norm(y - c, axis=1)
        if np.any(s <= rho):
            raise ValueError("ball_density evaluated inside the target ball")
        lo, hi = s - rho, np.minimum(s + rho, R)
        out = np.zeros(s.shape)
        m = hi > lo
        if not m.any():
            return out
        sm, l, h = s[m], lo[m], hi[m]
        t = l[:, None] + 0.5 * (h - l)[:, None] * (xg[None, :] + 1)
        a = np.clip((sm[:, None] ** 2 + t**2 - rho**2) / (2 * sm[:, None] * t), -1.0, 1.0)
        cap = 0.5 * betainc((d - 1) / 2.0, 0.5, 1.0 - a * a)
        frac = np.where(a >= 0, cap, 1.0 - cap)
        jt = kernel.j(np.minimum(t, np.nextafter(R, 0)))
        out[m] = 0.5 * (h - l) * np.sum(wg[None, :] * S * t ** (d - 1) * jt * frac, axis=1)
        return out

    if s_range is None:
        return J
    s_lo, s_hi = map(float, s_range)
    if not rho < s_lo < s_hi:
        raise ValueError("s_range must lie outside the target ball")
    nodes = np.geomspace(s_lo, s_hi, n_table)
    e = np.zeros((n_table, d))
    e[:, 0] = nodes
    vals = J(c + e)
    if np.any(vals <= 0):
        return J
    spline = CubicSpline(np.log(nodes), np.log(vals))

    def J_table(y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        sy = np.linalg.norm(y - c, axis=1)
        inside = (sy >= s_lo) & (sy <= s_hi)
        out = np.empty(sy.shape)
        out[inside] = np.exp(spline(np.log(sy[inside])))
        if not inside.all():
            out[~inside] = J(y[~inside])
        return out

    return J_table
