"""Radial jump intensity of the subordinate Brownian motion.

    j(r) = int_0^inf (4 pi t)^(-d/2) exp(-r^2 / (4t)) mu(t) dt

is computed by two independent routes: a double-exponential trapezoid
rule in log t (vectorised, used to build tables) and QUADPACK after the
substitution s = r^2 / (4t). Tables hold log j on log-spaced radii and are
interpolated with a cubic spline in log-log space.
"""
from __future__ import annotations

import csv
import math
import threading
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import gammaln, logsumexp

from .bernstein import BernsteinFunction, SumDensity, ZeroDensity

R_MIN = 1e-6
R_MAX = 1e3
N_NODES = 4096
DUAL_RTOL = 1e-6


class KernelIntegrationError(RuntimeError):
    def __init__(self, r: float, de_value: float, gk_value: float):
        super().__init__(
            f"j({r!r}) quadrature routes disagree: DE={de_value!r}, GK={gk_value!r}"
        )
        self.r = r
        self.values = (de_value, gk_value)


class GeneratorQuadratureError(RuntimeError):
    def __init__(self, shell: tuple, rel_change: float):
        super().__init__(
            f"sphere quadrature did not settle on radius shell [{shell[0]:.3g}, {shell[1]:.3g}] "
            f"(relative change {rel_change:.2e})"
        )
        self.shell = shell


def surface_area(d: int) -> float:
    """|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0))


def _components(f: BernsteinFunction):
    dens = f.levy_density
    if isinstance(dens, ZeroDensity):
        return []
    if isinstance(dens, SumDensity):
        return list(dens.parts)
    return [dens]


def _log_mu(dens, t):
    log = getattr(dens, "log", None)
    if log is not None:
        return log(t)
    with np.errstate(divide="ignore"):
        return np.log(dens(t))


def _log_integrand_u(dens, d: int, r2, u):
    """log of (4 pi t)^(-d/2) e^{-r^2/4t} mu(t) t at t = e^u."""
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        t = np.exp(u)
        out = -0.5 * d * (math.log(4.0 * math.pi) + u) - 0.25 * r2 * np.exp(-u) + _log_mu(dens, t) + u
    return np.where(np.isnan(out), -np.inf, out)


_SCAN = np.linspace(-40.0, 40.0, 4001)
_V_NODES = 401
_U_SPAN = 200.0


def _log_j_de_component(dens, d: int, r: np.ndarray) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    block = 256
    for s in range(0, r.size, block):
        rb = r[s : s + block]
        r2 = (rb**2)[:, None]
        base = 2.0 * np.log(rb)[:, None]
        u = base + _SCAN[None, :]
        L = _log_integrand_u(dens, d, r2, u)
        k = np.argmax(L, axis=1)
        k = np.clip(k, 1, _SCAN.size - 2)
        rows = np.arange(rb.size)
        h = _SCAN[1] - _SCAN[0]
        curv = -(L[rows, k + 1] - 2 * L[rows, k] + L[rows, k - 1]) / h**2
        curv = np.where(np.isfinite(curv) & (curv > 0), curv, 1.0)
        w = np.clip(1.0 / np.sqrt(curv), 0.005, 3.0)
        ustar = u[rows, k]
        V = np.arcsinh(_U_SPAN / (w * math.pi / 2.0))
        v = np.linspace(-1.0, 1.0, _V_NODES)[None, :] * V[:, None]
        hv = (2.0 * V / (_V_NODES - 1))[:, None]
        uu = ustar[:, None] + w[:, None] * (math.pi / 2.0) * np.sinh(v)
        logjac = np.log(w[:, None] * (math.pi / 2.0) * np.cosh(v) * hv)
        out[s : s + block] = logsumexp(_log_integrand_u(dens, d, r2, uu) + logjac, axis=1)
    return out


def log_j_de(f: BernsteinFunction, d: int, r) -> np.ndarray:
    """log j(r) by the double-exponential rule; -inf for a zero density."""
    comps = _components(f)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if not comps:
        return np.full(r.shape, -np.inf)
    parts = np.stack([_log_j_de_component(c, d, r) for c in comps])
    return logsumexp(parts, axis=0)


def _j_gk_component(dens, d: int, r: float) -> tuple[float, float]:
    """(log scale, integral) with j = exp(scale) * integral."""
    r2 = r * r

    def log_g(s):
        # integrand in s = r^2/(4t): (4 pi t)^(-d/2) e^{-s} mu(t) r^2 / (4 s^2)
        t = r2 / (4.0 * s)
        return (
            -0.5 * d * math.log(4.0 * math.pi * t)
            - s
            + float(_log_mu(dens, np.array(t)))
            + math.log(r2 / 4.0)
            - 2.0 * math.log(s)
        )

    # peak location from a coarse scan in log s
    ls = np.linspace(-40.0, 40.0, 1601)
    vals = np.array([log_g(math.exp(x)) for x in ls])
    k = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
    sstar = math.exp(ls[k])
    L0 = vals[k]

    def g(s):
        if s <= 0.0:
            return 0.0
        v = log_g(s) - L0
        return math.exp(v) if v > -745 else 0.0

    edges = [0.0, sstar * 0.25, sstar, sstar * 4.0, sstar * 64.0, np.inf]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
            total += val
    return L0, total


def log_j_gk(f: BernsteinFunction, d: int, r: float) -> float:
    """log j(r) by Gauss-Kronrod (QUADPACK) in the s = r^2/(4t) variable."""
    comps = _components(f)
    if not comps:
        return -np.inf
    logs = []
    for c in comps:
        L0, val = _j_gk_component(c, d, float(r))
        logs.append(L0 + math.log(val) if val > 0 else -np.inf)
    return float(logsumexp(logs))


def j_eval(f: BernsteinFunction, dim: int, r: float) -> float:
    """j(r) with both quadrature routes required to agree to 1e-6."""
    if r <= 0:
        raise ValueError("r must be positive")
    if f.is_zero:
        return 0.0
    a = float(log_j_de(f, dim, r)[0])
    b = log_j_gk(f, dim, r)
    if not (np.isfinite(a) and np.isfinite(b)) or abs(math.expm1(a - b)) > DUAL_RTOL:
        raise KernelIntegrationError(r, math.exp(a), math.exp(b))
    return math.exp(a)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelConditions:
    c1: float
    c2: float
    nu: float
    K: float
    violated: bool = False
    reason: str = ""


class RadialSampler:
    """Inverse-CDF sampler for the jump radius conditioned on r >= eps."""

    def __init__(self, log_r: np.ndarray, cdf: np.ndarray):
        self.log_r = log_r
        self.cdf = cdf

    def sample(self, u: np.ndarray) -> np.ndarray:
        return np.exp(np.interp(u, self.cdf, self.log_r))

    @property
    def r_max(self) -> float:
        return float(math.exp(self.log_r[-1]))


class JumpKernel:
    """Tabulated j for one (Bernstein function, dimension) pair.

    With ``truncation_radius`` set, j(r) = 0 for r >= truncation_radius.
    """

    def __init__(
        self,
        f: BernsteinFunction,
        dim: int,
        truncation_radius: Optional[float] = None,
        r_min: float = R_MIN,
        r_max: float = R_MAX,
        n_nodes: int = N_NODES,
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if truncation_radius is not None and not r_min < truncation_radius <= r_max:
            raise ValueError("truncation radius outside table range")
        self.f = f
        self.dim = int(dim)
        self.truncation_radius = truncation_radius
        self.r_min = r_min
        self.r_max = r_max
        self.is_zero = f.is_zero
        self.surface = surface_area(self.dim)
        self.log_r = np.linspace(math.log(r_min), math.log(r_max), n_nodes)
        self._lock = threading.Lock()
        self._sampler_cache: dict = {}
        self._tail_cache: dict = {}
        if self.is_zero:
            self.log_j_nodes = np.full(n_nodes, -np.inf)
            self._spline = None
            return
        self.log_j_nodes = log_j_de(f, self.dim, np.exp(self.log_r))
        self._spline = CubicSpline(self.log_r, self.log_j_nodes)
        d1 = self._spline.derivative()
        self._small_slope = float(d1(self.log_r[0]))
        # large r: log j = a - p log r - k r, matched to the first two log-log
        # derivatives at r_max (exact for power and exponential tails)
        u = self.log_r[-64:] - self.log_r[-1]
        c2, c1, _ = np.polyfit(u, self.log_j_nodes[-64:], 2)
        self._large_rate = max(-2.0 * c2 / r_max, 0.0)
        self._large_power = -c1 - self._large_rate * r_max

    # -- evaluation ----------------------------------------------------------
    @property
    def name(self) -> str:
        tr = "" if self.truncation_radius is None else f",trunc={self.truncation_radius:g}"
        return f"{self.f.name},d={self.dim}{tr}"

    @property
    def truncated(self) -> bool:
        return self.truncation_radius is not None

    @property
    def support_radius(self) -> float:
        return self.truncation_radius if self.truncated else np.inf

    def log_j(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.is_zero:
            return np.full(r.shape, -np.inf)
        with np.errstate(divide="ignore"):
            lr = np.log(r)
        out = self._spline(np.clip(lr, self.log_r[0], self.log_r[-1]))
        lo = lr < self.log_r[0]
        hi = lr > self.log_r[-1]
        out = np.where(lo, self.log_j_nodes[0] + self._small_slope * (lr - self.log_r[0]), out)
        with np.errstate(invalid="ignore"):
            tail = self.log_j_nodes[-1] - self._large_power * (lr - self.log_r[-1]) - self._large_rate * (r - self.r_max)
        out = np.where(hi, tail, out)
        if self.truncated:
            out = np.where(r >= self.truncation_radius, -np.inf, out)
        return out

    def j(self, r) -> np.ndarray:
        return np.exp(self.log_j(r))

    __call__ = j

    # -- radial integrals ----------------------------------------------------
    def _upper(self) -> float:
        return self.truncation_radius if self.truncated else self.r_max

    def _radial_integral(self, power: int, a: float, b: float) -> float:
        """int_a^b r^power j(r) dr through the log-radius variable."""
        if self.is_zero or b <= a:
            return 0.0

        def g(lr):
            return math.exp((power + 1) * lr + float(self.log_j(math.exp(lr))))

        la, lb = math.log(a), math.log(b)
        pts = np.linspace(la, lb, max(2, int((lb - la) / 0.5) + 2))
        total = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in zip(pts[:-1], pts[1:]):
                total += integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
        return total

    def _tail_beyond_table(self, power: int) -> float:
        """int_{r_max}^inf r^power j(r) dr under the large-r extrapolation."""
        if self.truncated or self.is_zero:
            return 0.0
        R, p, k = self.r_max, self._large_power, self._large_rate
        jmax = math.exp(self.log_j_nodes[-1])
        if k * R < 1e-8:
            if p <= power + 1:
                return np.inf
            return jmax * R ** (power + 1) / (p - power - 1)

        # in t = r/R - 1 the integrand is (1+t)^(power-p) e^{-kR t}
        def g(t):
            return (1.0 + t) ** (power - p) * math.exp(-k * R * t)

        val = integrate.quad(g, 0.0, np.inf, epsrel=1e-10, limit=200)[0]
        return jmax * R ** (power + 1) * val

    def tail_mass(self, eps: float) -> float:
        """Lambda_eps = |S^{d-1}| int_eps^inf r^{d-1} j(r) dr."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        key = ("tail", eps)
        with self._lock:
            if key in self._tail_cache:
                return self._tail_cache[key]
        d = self.dim
        upper = self._upper()
        if eps < self.r_min:
            val = self._radial_integral(d - 1, self.r_min, upper) + self._small_power_integral(d - 1, eps, self.r_min)
        else:
            val = self._radial_integral(d - 1, eps, upper)
        val = self.surface * (val + self._tail_beyond_table(d - 1))
        with self._lock:
            self._tail_cache[key] = val
        return val

    def _small_power_integral(self, power: int, a: float, b: float) -> float:
        """int_a^b r^power j(r) dr below the table with the power-law extrapolation."""
        if self.is_zero:
            return 0.0
        p = power + self._small_slope
        c = math.exp(self.log_j_nodes[0] - self._small_slope * self.log_r[0])
        if abs(p + 1) < 1e-12:
            return c * (math.log(b) - math.log(a))
        return c * (b ** (p + 1) - (a ** (p + 1) if a > 0 else 0.0)) / (p + 1)

    def small_moment(self, eps: float) -> float:
        """m2(eps) = |S^{d-1}| int_0^eps r^{d+1} j(r) dr."""
        if eps <= 0:
            return 0.0
        d = self.dim
        if self.is_zero:
            return 0.0
        upper = min(eps, self._upper())
        if upper <= self.r_min:
            val = self._small_power_integral(d + 1, 0.0, upper)
        else:
            val = self._small_power_integral(d + 1, 0.0, self.r_min) + self._radial_integral(d + 1, self.r_min, upper)
        return self.surface * val

    def levy_integrability(self) -> float:
        """|S^{d-1}| int (1 ^ r^2) r^{d-1} j(r) dr."""
        return self.small_moment(1.0) + (self.tail_mass(1.0) if self._upper() > 1.0 else 0.0)

    def radial_sampler(self, eps: float, n_grid: int = 8193) -> RadialSampler:
        with self._lock:
            if eps in self._sampler_cache:
                return self._sampler_cache[eps]
        if self.is_zero:
            raise ValueError("zero kernel has no jumps")
        upper = self._upper()
        if not self.truncated:
            k = self._large_rate
            upper = self.r_max + 60.0 / k if k * self.r_max > 60.0 / 1e3 else 1e3 * self.r_max
        if eps >= upper:
            raise ValueError("cutoff beyond kernel support")
        lr = np.linspace(math.log(eps), math.log(upper), n_grid)
        r = np.exp(lr)
        dens = np.exp(self.dim * lr + self.log_j(np.minimum(r, np.nextafter(upper, 0))))
        if self.truncated:
            dens[-1] = dens[-2]
        # Simpson-free cumulative trapezoid; grid is fine enough in log r
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(lr))])
        cdf = cum / cum[-1]
        sampler = RadialSampler(lr, cdf)
        with self._lock:
            self._sampler_cache[eps] = sampler
        return sampler

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "j"])
            for lr, lj in zip(self.log_r, self.log_j_nodes):
                r = math.exp(lr)
                if self.truncated and r >= self.truncation_radius:
                    w.writerow([repr(r), "0.0"])
                else:
                    w.writerow([repr(r), repr(math.exp(lj))])


_KERNEL_CACHE: dict = {}
_KERNEL_LOCK = threading.Lock()


def build_kernel(f: BernsteinFunction, dim: int, truncation_radius: Optional[float] = None) -> JumpKernel:
    """Cached constructor; tables are immutable and shared."""
    key = (f.name, dim, truncation_radius)
    with _KERNEL_LOCK:
        k = _KERNEL_CACHE.get(key)
    if k is None:
        k = JumpKernel(f, dim, truncation_radius)
        with _KERNEL_LOCK:
            _KERNEL_CACHE.setdefault(key, k)
            k = _KERNEL_CACHE[key]
    return k


def verify_kernel_conditions(k: JumpKernel, K: float, grid_size: int = 2000) -> KernelConditions:
    """Empirical doubling constant c1 on (0, K), unit-shift constant c2, nu = log2 c1."""
    if k.truncated:
        return KernelConditions(np.inf, np.inf, np.inf, K, violated=True,
                                reason="finite-range kernel: j(r)/j(2r) infinite for r in [rho/2, rho)")
    if k.is_zero:
        return KernelConditions(np.nan, np.nan, np.nan, K, violated=True, reason="zero kernel")
    r = np.geomspace(k.r_min, K, grid_size, endpoint=False)
    c1 = float(np.max(np.exp(k.log_j(r) - k.log_j(2 * r))))
    r2 = np.linspace(1.0, k.r_max - 1.0, grid_size)
    c2 = float(np.max(np.exp(k.log_j(r2) - k.log_j(r2 + 1.0))))
    return KernelConditions(c1, c2, math.log2(c1), K)


# ---------------------------------------------------------------------------
# generator


def sphere_rule(d: int, order: int = 16):
    """Antipodally symmetric quadrature on S^{d-1}; weights sum to |S^{d-1}|."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        m = 2 * order
        th = (np.arange(m) + 0.5) * 2 * math.pi / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2 * math.pi / m)
    if d == 3:
        z, wz = np.polynomial.legendre.leggauss(order)
        m = 2 * order
        ph = (np.arange(m) + 0.5) * 2 * math.pi / m
        Z, P = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z**2)
        pts = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(m, 2 * math.pi / m)[None, :]).reshape(-1)
        return pts, w
    raise ValueError("sphere quadrature implemented for d <= 3")


def _axial_rule(pole: np.ndarray, order: int):
    """Rule on S^2 exact for functions of the angle to ``pole`` (radial test functions):
    Gauss-Legendre in the polar cosine, two antipodal azimuths."""
    z, wz = np.polynomial.legendre.leggauss(order)
    s = np.sqrt(1 - z**2)
    pts = np.concatenate([np.stack([s, np.zeros_like(z), z], axis=1),
                          np.stack([-s, np.zeros_like(z), z], axis=1)])
    w = np.concatenate([wz, wz]) * math.pi
    # Householder reflection taking e_3 to the pole
    u = np.array([0.0, 0.0, 1.0]) - pole
    if np.linalg.norm(u) > 1e-12:
        pts = pts - 2.0 * np.outer(pts @ u, u) / (u @ u)
    return pts, w


def _radial_panels(k: JumpKernel, r_lo: float, per_panel: int = 16):
    r_hi = k._upper()
    edges = np.geomspace(r_lo, r_hi, int(round(math.log10(r_hi / r_lo))) * 2 + 1)
    if k.truncated:
        edges = np.unique(np.concatenate([edges, [r_hi * 0.5, r_hi * 0.9]]))
    edges = np.unique(np.concatenate([edges, [e for e in (1.0,) if r_lo < e < r_hi]]))
    x, w = np.polynomial.legendre.leggauss(per_panel)
    nodes, weights, shells = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        la, lb = math.log(a), math.log(b)
        lr = 0.5 * (lb - la) * x + 0.5 * (lb + la)
        nodes.append(np.exp(lr))
        weights.append(0.5 * (lb - la) * w)
        shells.append((a, b))
    return nodes, weights, shells


def generator_apply(k: JumpKernel, f, x, r_lo: float = 1e-4, sphere_order: int = 16,
                    rtol: float = 1e-6, max_order: int = 128) -> float:
    """(Delta + A) f (x) for a smooth bounded test function with analytic Laplacian.

    The jump part is integrated in (radius, direction) coordinates; the
    direction rule is antipodal so the gradient compensator drops out.
    Radii below ``r_lo`` use the Taylor term Delta f(x) m2(r_lo) / (2d);
    radii beyond the table use f(inf) - f(x) against the remaining mass.
    The direction rule is doubled until every shell agrees with its refinement.
    """
    x = np.asarray(x, dtype=float)
    d = k.dim
    lap = float(f.laplacian(x))
    if k.is_zero:
        return lap
    fx = float(f(x))
    nodes, weights, shells = _radial_panels(k, r_lo)
    order = sphere_order
    pole = None
    center = getattr(f, "center", None)
    if d == 3 and center is not None:
        v = np.asarray(center, dtype=float) - x
        nv = np.linalg.norm(v)
        pole = v / nv if nv > 0 else np.array([0.0, 0.0, 1.0])
        order, max_order = 4 * sphere_order, max(max_order, 2048)
    while True:
        total = lap + lap * k.small_moment(r_lo) / (2.0 * d)
        if pole is None:
            pts, w = sphere_rule(d, order)
            pts2, w2 = sphere_rule(d, 2 * order)
        else:
            pts, w = _axial_rule(pole, order)
            pts2, w2 = _axial_rule(pole, 2 * order)
        changes, mass = [], abs(lap)
        for r, wr, shell in zip(nodes, weights, shells):
            wj = wr * r**d * k.j(r)
            y = x[None, None, :] + r[:, None, None] * pts[None, :, :]
            contrib = np.sum(wj * np.sum((f(y) - fx) * w[None, :], axis=1))
            y2 = x[None, None, :] + r[:, None, None] * pts2[None, :, :]
            g2 = f(y2) - fx
            contrib2 = np.sum(wj * np.sum(g2 * w2[None, :], axis=1))
            mass += np.sum(wj * np.sum(np.abs(g2) * w2[None, :], axis=1))
            changes.append((shell, abs(contrib2 - contrib)))
            total += contrib2
        # refinement is judged against the absolute mass of the whole integrand
        bad = [(shell, ch) for shell, ch in changes if ch > rtol * mass + 1e-13]
        if not bad or d == 1:
            break
        if 2 * order >= max_order:
            shell, ch = bad[0]
            raise GeneratorQuadratureError(shell, ch / max(mass, 1e-300))
        order *= 2
    if not k.truncated:
        f_inf = f.limit_at_infinity
        if not np.isfinite(f_inf):
            raise ValueError("test function must be bounded for a kernel with infinite range")
        total += (f_inf - fx) * k.tail_mass(k.r_max)
    return float(total)
