"""Domains with signed-distance oracles.

Sign convention: positive inside. Inside a domain the value is the
distance to the complement; outside it is minus the distance to the
boundary (exact for balls, half-spaces and boxes, a tight bound for the
composite constructions).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FD_STEP = 1e-7


class Domain:
    dim: int
    name: str = "domain"
    bounded: bool = True
    characteristics: Optional[tuple] = None  # (R, Lambda)
    bounding_box: tuple = ()

    def signed_distance(self, x) -> np.ndarray:
        raise NotImplementedError

    __call__ = signed_distance

    def contains(self, x) -> np.ndarray:
        return self.signed_distance(x) > 0

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.empty(x.shape)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = FD_STEP
            g[..., i] = (self.signed_distance(x + e) - self.signed_distance(x - e)) / (2 * FD_STEP)
        return g

    def project(self, x, iterations: int = 3) -> np.ndarray:
        """Closest boundary point via x - sd(x) grad sd(x)."""
        y = np.array(x, dtype=float)
        for _ in range(iterations):
            s = self.signed_distance(y)
            if np.all(np.abs(s) < 1e-15):
                break
            y = y - s[..., None] * self.gradient(y)
        return y

    def inward_normal(self, q) -> np.ndarray:
        g = self.gradient(np.asarray(q, dtype=float))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def in_bounding_box(self, x) -> np.ndarray:
        lo, hi = self.bounding_box
        x = np.asarray(x, dtype=float)
        return np.all((x >= lo) & (x <= hi), axis=-1)


class Ball(Domain):
    def __init__(self, center: Sequence[float], radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dim = self.center.size
        self.name = f"ball(r={radius:g})"
        self.characteristics = (min(self.radius, 1.0), 1.0)
        self.bounding_box = (self.center - radius, self.center + radius)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return self.radius - np.sqrt(np.sum((x - self.center) ** 2, axis=-1))

    def gradient(self, x):
        v = self.center - np.asarray(x, dtype=float)
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return v / np.where(n > 0, n, 1.0)

    def project(self, x, iterations: int = 1):
        v = np.asarray(x, dtype=float) - self.center
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return self.center + self.radius * v / np.where(n > 0, n, 1.0)

    def local_graph(self, q, frame, ytilde):
        s2 = np.sum(ytilde**2, axis=-1)
        return self.radius - np.sqrt(np.maximum(self.radius**2 - s2, 0.0))


class HalfSpace(Domain):
    """{x : <x, normal> > offset}; unbounded, simulated inside a bounding box."""

    def __init__(self, normal: Sequence[float], offset: float = 0.0, box_half_width: float = 10.0):
        n = np.asarray(normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("normal must be a unit vector")
        self.normal = n
        self.offset = float(offset)
        self.dim = n.size
        self.name = "halfspace"
        self.bounded = False
        self.characteristics = (1.0, 1.0)
        self.bounding_box = (np.full(self.dim, -box_half_width), np.full(self.dim, box_half_width))

    def signed_distance(self, x):
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.normal, x.shape).copy()

    def project(self, x, iterations: int = 1):
        x = np.asarray(x, dtype=float)
        return x - self.signed_distance(x)[..., None] * self.normal

    def local_graph(self, q, frame, ytilde):
        return np.zeros(np.shape(ytilde)[:-1])


def _box_sd_neg(x, center, half, rounding):
    """Standard rounded-box SDF, negative inside."""
    q = np.abs(x - center) - (half - rounding)
    outside = np.sqrt(np.sum(np.maximum(q, 0.0) ** 2, axis=-1))
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside - rounding


def round_intersection(a, b, rho):
    """Signed distance of an intersection with the joining corner filleted at radius rho."""
    if rho <= 0:
        # sharp corner: exact inside, Euclidean corner distance outside
        outside = -np.sqrt(np.maximum(-a, 0.0) ** 2 + np.maximum(-b, 0.0) ** 2)
        return np.where((a > 0) & (b > 0), np.minimum(a, b), outside)
    u = np.maximum(rho - a, 0.0)
    v = np.maximum(rho - b, 0.0)
    return np.maximum(rho, np.minimum(a, b)) - np.sqrt(u * u + v * v)


class SlitBox(Domain):
    """(-side, side)^d minus the slab (-side, reach]^{d-1} x [-thickness, 0].

    The slab is modelled as a bar extending past the box wall, which gives
    the same open set and turns every corner into either a convex box
    corner or a convex bar edge; ``smoothing`` rounds both kinds.
    """

    def __init__(self, dim: int, side: float = 100.0, thickness: float = 0.5, reach: float = 49.0,
                 smoothing: float = 0.0):
        if not 0 < thickness < side:
            raise ValueError("need 0 < slab_thickness < side")
        if not 0 < reach < side:
            raise ValueError("need 0 < slit_reach < side")
        if smoothing < 0:
            raise ValueError("smoothing must be nonnegative")
        if smoothing > thickness / 2:
            raise ValueError("smoothing larger than slab_thickness/2 degenerates the slab")
        if dim < 2:
            raise ValueError("slit box needs dim >= 2")
        self.dim = dim
        self.side, self.thickness, self.reach, self.smoothing = side, thickness, reach, smoothing
        self.name = f"slitbox(side={side:g},thickness={thickness:g},reach={reach:g},smooth={smoothing:g})"
        self.characteristics = (min(smoothing, 1.0), 1.0) if smoothing > 0 else None
        self.bounding_box = (np.full(dim, -side), np.full(dim, side))
        far = 4.0 * side
        lo = np.full(dim, -far)
        hi = np.full(dim, reach)
        lo[-1], hi[-1] = -thickness, 0.0
        self._bar_center = 0.5 * (lo + hi)
        self._bar_half = 0.5 * (hi - lo)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        rho = self.smoothing
        a = -_box_sd_neg(x, 0.0, np.full(self.dim, self.side), rho)
        b = _box_sd_neg(x, self._bar_center, self._bar_half, rho)
        return round_intersection(a, b, rho)

    def local_graph(self, q, frame, ytilde):
        return np.zeros(np.shape(ytilde)[:-1])


class Intersection(Domain):
    """Intersection of domains, signed distance min(sd_i) (exact inside)."""

    def __init__(self, parts: Sequence[Domain], name: Optional[str] = None):
        self.parts = list(parts)
        self.dim = self.parts[0].dim
        self.name = name or "(" + " & ".join(p.name for p in self.parts) + ")"
        self.bounded = any(p.bounded for p in self.parts)
        bounded = [p for p in self.parts if p.bounded] or self.parts
        lo = np.max([p.bounding_box[0] for p in bounded], axis=0)
        hi = np.min([p.bounding_box[1] for p in bounded], axis=0)
        self.bounding_box = (lo, hi)

    def signed_distance(self, x):
        return np.min(np.stack([p.signed_distance(x) for p in self.parts]), axis=0)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        vals = np.stack([p.signed_distance(x) for p in self.parts])
        k = np.argmin(vals, axis=0)
        g = np.empty(x.shape)
        for i, p in enumerate(self.parts):
            m = k == i
            if np.any(m):
                g[m] = p.gradient(x[m])
        return g


# ---------------------------------------------------------------------------
# factories


def make_ball(center, radius: float) -> Ball:
    return Ball(center, radius)


def make_halfspace(normal, offset: float = 0.0, box_half_width: float = 10.0) -> HalfSpace:
    return HalfSpace(normal, offset, box_half_width)


def make_slit_box(side: float = 100.0, slab_thickness: float = 0.5, slit_reach: float = 49.0,
                  smoothing: float = 0.0, dim: int = 2) -> SlitBox:
    return SlitBox(dim, side, slab_thickness, slit_reach, smoothing)


def _frame(normal: np.ndarray) -> np.ndarray:
    """Orthonormal rows (t_1, ..., t_{d-1}, normal)."""
    d = normal.size
    m = np.eye(d)
    m[:, 0] = normal
    q, _ = np.linalg.qr(m)
    if q[:, 0] @ normal < 0:
        q = -q
    return np.vstack([q[:, 1:].T, normal])


@dataclass
class GraphBox:
    """D_Q(r1, r2) = {y in D : r1 > rho_Q(y) > 0, |y~| < r2} in the local frame at Q."""

    domain: Domain
    Q: np.ndarray
    r1: float
    r2: float
    frame: np.ndarray = field(repr=False)

    @property
    def normal(self) -> np.ndarray:
        return self.frame[-1]

    def local_coordinates(self, y):
        return (np.asarray(y, dtype=float) - self.Q) @ self.frame.T

    def graph(self, ytilde):
        g = getattr(self.domain, "local_graph", None)
        if g is not None:
            return g(self.Q, self.frame, ytilde)
        return self._graph_newton(ytilde)

    def _graph_newton(self, ytilde):
        s = np.zeros(np.shape(ytilde)[:-1])
        tang = self.frame[:-1]
        base = self.Q + ytilde @ tang
        for _ in range(20):
            p = base + s[..., None] * self.normal
            val = self.domain.signed_distance(p)
            slope = np.sum(self.domain.gradient(p) * self.normal, axis=-1)
            s = s - val / np.where(np.abs(slope) > 1e-12, slope, 1.0)
        return s

    def rho(self, y):
        z = self.local_coordinates(y)
        return z[..., -1] - self.graph(z[..., :-1])

    def contains(self, y):
        z = self.local_coordinates(y)
        rho = z[..., -1] - self.graph(z[..., :-1])
        lateral = np.linalg.norm(z[..., :-1], axis=-1)
        return (rho > 0) & (rho < self.r1) & (lateral < self.r2)


def make_graph_box(domain: Domain, Q, r1: float, r2: float, tol: float = 1e-9) -> GraphBox:
    if domain.characteristics is None:
        raise ValueError("graph boxes need a C^{1,1} domain with characteristics (R, Lambda)")
    R = domain.characteristics[0]
    if r1 > R or r2 > R:
        raise ValueError(f"r1, r2 must not exceed R = {R}")
    Q = np.asarray(Q, dtype=float)
    if abs(float(domain.signed_distance(Q))) > tol:
        raise ValueError("Q is not on the boundary")
    n = domain.inward_normal(Q)
    return GraphBox(domain, Q, r1, r2, _frame(n))


# ---------------------------------------------------------------------------


def _params(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ValueError(f"malformed domain parameter {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_domain(spec: str, dim: int) -> Domain:
    """``ball:r=1[,center=a;b;c]``, ``halfspace[:offset=0]``,
    ``slitbox:side=100,thickness=0.5,reach=49,smooth=0.1``."""
    name, _, rest = spec.strip().partition(":")
    p = _params(rest)
    name = name.strip().lower()
    if name == "ball":
        r = float(p.pop("r", 1.0))
        c = [float(v) for v in p.pop("center").split(";")] if "center" in p else [0.0] * dim
        if p:
            raise ValueError(f"unknown ball parameters {sorted(p)}")
        if len(c) != dim:
            raise ValueError("ball center has wrong dimension")
        return make_ball(c, r)
    if name == "halfspace":
        off = float(p.pop("offset", 0.0))
        box = float(p.pop("box", 10.0))
        if p:
            raise ValueError(f"unknown halfspace parameters {sorted(p)}")
        n = np.zeros(dim)
        n[-1] = 1.0
        return make_halfspace(n, off, box)
    if name == "slitbox":
        kw = dict(side=float(p.pop("side", 100.0)), slab_thickness=float(p.pop("thickness", 0.5)),
                  slit_reach=float(p.pop("reach", 49.0)), smoothing=float(p.pop("smooth", 0.0)))
        if p:
            raise ValueError(f"unknown slitbox parameters {sorted(p)}")
        return make_slit_box(dim=dim, **kw)
    raise ValueError(f"unknown domain {name!r}")


def sample_boundary_points(domain: Domain, n: int, rng: np.random.Generator, band: float = 0.05,
                           max_tries: int = 200) -> np.ndarray:
    """Boundary points by projecting random near-boundary points of the bounding box."""
    lo, hi = domain.bounding_box
    out = []
    got = 0
    for _ in range(max_tries):
        x = lo + (hi - lo) * rng.random((20 * n, domain.dim))
        s = domain.signed_distance(x)
        x = x[np.abs(s) < band]
        if x.size == 0:
            continue
        y = domain.project(x, iterations=6)
        ok = np.abs(domain.signed_distance(y)) < 1e-10
        out.append(y[ok])
        got += int(ok.sum())
        if got >= n:
            break
    return np.concatenate(out)[:n]
