"""Sets and Levy-system densities for the finite-range slit-box construction.

The slab occupies x_d in [-t, 0] for lateral coordinates up to the slit
reach. For depth index n the target set is the thin column

    C_n = {x in D : |x~| <= 2^{-n-3} r1,  x_d <= -1 + 2^{-n} r1^2}

below the slab, and D_n is the part of {y_d > 0} within distance 1 of C_n.
With a kernel vanishing beyond radius 1, exits from U \\ D_n can never land
in C_n, and u_n(x) = P_x(X_tau_U in C_n) = E_x int J_{C_n}(X_t) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .geometry import Domain, Intersection, make_ball, make_slit_box
from .jump_kernel import JumpKernel


@dataclass(frozen=True)
class SlitSetup:
    dim: int = 3
    side: float = 4.0
    thickness: float = 0.25
    reach: float = 1.5
    smoothing: float = 0.05
    r1: float = 0.2
    M1: float = 1.2
    kernel_range: float = 1.0

    def __post_init__(self):
        if self.M1 * self.r1 >= min(0.5, self.thickness):
            raise ValueError("need M1 r1 below 1/2 and below the slab thickness")
        if self.kernel_range - self.thickness <= 0:
            raise ValueError("slab must be thinner than the kernel range")

    @property
    def domain(self) -> Domain:
        return make_slit_box(self.side, self.thickness, self.reach, self.smoothing, self.dim)

    @property
    def local_domain(self) -> Domain:
        """U = D ∩ B(0, M1 r1)."""
        return Intersection([self.domain, make_ball(np.zeros(self.dim), self.M1 * self.r1)], name="U")

    @property
    def A(self) -> np.ndarray:
        a = np.zeros(self.dim)
        a[-1] = self.r1 / 2
        return a

    def lateral_radius(self, n: int) -> float:
        return 2.0 ** (-n - 3) * self.r1

    def height(self, n: int) -> float:
        return 2.0 ** (-n) * self.r1**2

    def target_top(self, n: int) -> float:
        return -self.kernel_range + self.height(n)

    def in_target(self, n: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lat = np.linalg.norm(x[..., :-1], axis=-1)
        return (lat <= self.lateral_radius(n)) & (x[..., -1] <= self.target_top(n)) & \
            (self.domain.signed_distance(x) > 0)

    def distance_to_target(self, n: int, y) -> np.ndarray:
        """Distance to the column C_n (exact for points above its top)."""
        y = np.asarray(y, dtype=float)
        lat = np.maximum(np.linalg.norm(y[..., :-1], axis=-1) - self.lateral_radius(n), 0.0)
        vert = np.maximum(y[..., -1] - self.target_top(n), 0.0)
        return np.hypot(lat, vert)

    def in_reach_set(self, n: int, y) -> np.ndarray:
        """Membership in D_n."""
        y = np.asarray(y, dtype=float)
        return (y[..., -1] > 0) & (self.distance_to_target(n, y) < self.kernel_range) & \
            (self.domain.signed_distance(y) > 0)

    def reach_set_bounds(self, n: int) -> tuple:
        """(lateral extent, height) of the closure of D_n."""
        R = self.kernel_range
        c = R - self.height(n)
        return self.lateral_radius(n) + math.sqrt(max(R * R - c * c, 0.0)), self.height(n)

    def grid(self, n: int, fractions=(1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0, 2.0),
             laterals=(0.0, 0.5)) -> np.ndarray:
        """Sup grid near the axis at heights h_n * fraction, lateral offsets l * lateral reach."""
        ext, h = self.reach_set_bounds(n)
        pts = []
        for f in fractions:
            for l in laterals:
                p = np.zeros(self.dim)
                p[0] = l * ext
                p[-1] = f * h
                pts.append(p)
        return np.array(pts)


class TargetDensity:
    """J_{C_n}(y) = int_{C_n} j(|y - z|) dz for y above the slab, tabulated on (|y~|, y_d).

    Values are exactly 0 off D_n (masked by exact membership)."""

    def __init__(self, setup: SlitSetup, n: int, kernel: JumpKernel, n_rho: int = 41, n_h: int = 17,
                 n_lat: int = 16, n_ang: int = 32, n_dep: int = 16):
        if kernel.truncation_radius is None or kernel.truncation_radius > setup.kernel_range:
            raise ValueError("kernel must vanish beyond the construction's range")
        self.setup, self.n, self.kernel = setup, n, kernel
        d = setup.dim
        if d not in (2, 3):
            raise ValueError("target density implemented for d in {2, 3}")
        self.ext, self.h = setup.reach_set_bounds(n)
        rho = np.linspace(0.0, self.ext, n_rho)
        hs = np.linspace(0.0, self.h, n_h)
        a = setup.lateral_radius(n)
        R = setup.kernel_range
        top = setup.target_top(n)
        xg, wg = np.polynomial.legendre.leggauss(n_lat)
        xd, wd = np.polynomial.legendre.leggauss(n_dep)
        if d == 3:
            s = 0.5 * a * (xg + 1)
            ws = 0.5 * a * wg * s
            th = (np.arange(n_ang) + 0.5) * 2 * math.pi / n_ang
            lat = np.stack([np.outer(s, np.cos(th)).ravel(), np.outer(s, np.sin(th)).ravel()], axis=1)
            wlat = np.outer(ws, np.full(n_ang, 2 * math.pi / n_ang)).ravel()
        else:
            lat = (a * xg)[:, None]
            wlat = a * wg
        table = np.zeros((n_rho, n_h))
        for i, r in enumerate(rho):
            yt = np.zeros(d - 1)
            yt[0] = r
            w = np.linalg.norm(lat - yt, axis=1)
            for k, yd in enumerate(hs):
                lo = yd - top
                hi = np.sqrt(np.maximum(R * R - w * w, 0.0))
                ok = hi > lo
                if not ok.any():
                    continue
                L = (hi - lo)[ok]
                u = lo + 0.5 * L[:, None] * (xd[None, :] + 1)
                dist = np.sqrt(w[ok][:, None] ** 2 + u * u)
                inner = 0.5 * L * np.sum(wd[None, :] * kernel.j(np.minimum(dist, np.nextafter(R, 0))), axis=1)
                table[i, k] = np.sum(wlat[ok] * inner)
        self.rho, self.hs, self.table = rho, hs, table
        self._interp = RegularGridInterpolator((rho, hs), table, bounds_error=False, fill_value=0.0)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape[0])
        lat = np.linalg.norm(y[:, :-1], axis=1)
        m = (y[:, -1] < self.h) & (lat < self.ext)
        if m.any():
            m_idx = np.flatnonzero(m)
            inside = self.setup.in_reach_set(self.n, y[m_idx])
            m_idx = m_idx[inside]
            out[m_idx] = np.maximum(self._interp(np.stack([lat[m_idx], y[m_idx, -1]], axis=1)), 0.0)
        return out


def below_slab_density(setup: SlitSetup, kernel: JumpKernel, n_r: int = 64):
    """J_V for V = the region under the slab, for points near the axis above it.

    Lateral walls are farther than the kernel range, so V acts as the half-space
    {z_d < -t} and J_V(y) = int_c^R r^{d-1} j(r) |cap(c/r)| dr with c = y_d + t.
    """
    from scipy.special import betainc
    from .jump_kernel import surface_area

    d = setup.dim
    R = kernel.truncation_radius if kernel.truncation_radius is not None else kernel.r_max
    x, w = np.polynomial.legendre.leggauss(n_r)
    S = surface_area(d)

    def J(y):
        y = np.asarray(y, dtype=float)
        c = y[:, -1] + setup.thickness
        out = np.zeros(y.shape[0])
        m = c < R
        if not m.any():
            return out
        cm = c[m]
        # log-spaced nodes resolve the r^{-d-alpha} singular end
        lo, hi = np.log(cm), math.log(R)
        lr = lo[:, None] + 0.5 * (hi - lo)[:, None] * (x[None, :] + 1)
        r = np.exp(lr)
        s = np.clip(cm[:, None] / r, 0.0, 1.0)
        frac = 0.5 * betainc((d - 1) / 2.0, 0.5, 1.0 - s * s)
        jr = kernel.j(np.minimum(r, np.nextafter(R, 0)))
        out[m] = 0.5 * (hi - lo) * np.sum(w[None, :] * r**d * jr * S * frac, axis=1)
        return out

    return J
