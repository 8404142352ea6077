"""Complete Bernstein functions with unit drift.

A Bernstein function here is ``phi(lam) = drift * lam + psi(lam)`` with

    psi(lam) = int_0^inf (1 - exp(-lam t)) mu(t) dt,

where ``mu`` is a completely monotone Levy density. The killing term is
always zero. Built-in families are addressable by short string specs such
as ``"stable:alpha=0.5,a=1"``, ``"gamma"``, ``"pure_bm"`` and
``"sum:[stable:alpha=1,a=1;gamma]"``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 500


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, partial_value: float, error_estimate: float):
        super().__init__(f"{message} (partial={partial_value!r}, err={error_estimate!r})")
        self.partial_value = partial_value
        self.error_estimate = error_estimate


class GrowthConditionViolation(ValueError):
    def __init__(self, r: float):
        super().__init__(f"mu(2r) = 0 while mu(r) > 0 at r = {r!r}")
        self.r = r


class DivergentIntegralError(ValueError):
    def __init__(self, endpoint: str, exponent: float):
        super().__init__(
            f"int (1 ^ t) mu(t) dt diverges at t -> {endpoint} "
            f"(local power exponent {exponent:.4g})"
        )
        self.endpoint = endpoint
        self.exponent = exponent


# ---------------------------------------------------------------------------
# Levy densities. Small picklable callables with a matching log-density.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroDensity:
    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def log(self, t):
        return np.full_like(np.asarray(t, dtype=float), -np.inf)


@dataclass(frozen=True)
class StableDensity:
    """mu(t) = a^alpha * beta / Gamma(1 - beta) * t^(-1-beta), beta = alpha / 2.

    Gives psi(lam) = a^alpha * lam^(alpha/2).
    """

    alpha: float
    a: float = 1.0

    @property
    def beta(self) -> float:
        return self.alpha / 2.0

    @property
    def log_coef(self) -> float:
        b = self.beta
        return self.alpha * math.log(self.a) + math.log(b) - gammaln(1.0 - b)

    def __call__(self, t):
        return np.exp(self.log(t))

    def log(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return self.log_coef - (1.0 + self.beta) * np.log(t)


@dataclass(frozen=True)
class GammaDensity:
    """mu(t) = t^-1 exp(-t); psi(lam) = log(1 + lam)."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-t) / t

    def log(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return -t - np.log(t)


@dataclass(frozen=True)
class PowerDensity:
    """mu(t) = c * t^(-p). Not a valid Levy density for p >= 2 (kept for rejection tests)."""

    p: float
    c: float = 1.0

    def __call__(self, t):
        return np.exp(self.log(t))

    def log(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return math.log(self.c) - self.p * np.log(t)


@dataclass(frozen=True)
class SumDensity:
    parts: tuple

    def __call__(self, t):
        return sum(p(t) for p in self.parts)

    def log(self, t):
        logs = np.stack([np.asarray(p.log(t), dtype=float) for p in self.parts])
        with np.errstate(divide="ignore"):
            m = np.max(logs, axis=0)
            safe = np.where(np.isfinite(m), m, 0.0)
            return np.where(np.isfinite(m), safe + np.log(np.sum(np.exp(logs - safe), axis=0)), -np.inf)


@dataclass(frozen=True)
class TruncatedDensity:
    """mu(t) 1{t < T}; breaks the doubling condition near T/2."""

    base: Callable
    T: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.T, self.base(t), 0.0)

    def log(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.T, self.base.log(t), -np.inf)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BernsteinFunction:
    levy_density: Callable
    drift: float = 1.0
    closed_form_psi: Optional[Callable] = None
    name: str = "custom"
    components: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.drift < 0:
            raise ValueError("drift must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return isinstance(self.levy_density, ZeroDensity)

    def mu(self, t):
        return self.levy_density(t)

    def log_mu(self, t):
        log = getattr(self.levy_density, "log", None)
        if log is not None:
            return log(t)
        with np.errstate(divide="ignore"):
            return np.log(self.levy_density(t))

    def psi(self, lam: float, method: str = "quad") -> float:
        if method == "closed":
            if self.closed_form_psi is None:
                raise ValueError(f"{self.name} has no closed-form psi")
            return float(self.closed_form_psi(lam))
        return psi_quad(self, lam)

    def __call__(self, lam: float) -> float:
        return phi_eval(self, lam)


def psi_quad(f: BernsteinFunction, lam: float) -> float:
    """int_0^inf (1 - e^{-lam t}) mu(t) dt, split at 1/lam and 1."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if f.is_zero:
        return 0.0

    def integrand(t):
        return -math.expm1(-lam * t) * float(f.mu(t))

    breaks = sorted({1.0 / lam, 1.0})
    pieces = [(0.0, breaks[0])]
    pieces += [(breaks[i], breaks[i + 1]) for i in range(len(breaks) - 1)]
    pieces.append((breaks[-1], np.inf))
    total = 0.0
    for lo, hi in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(
                    integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT
                )
            except integrate.IntegrationWarning as exc:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    val, err = integrate.quad(
                        integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT
                    )
                raise QuadratureError(f"psi quadrature on [{lo}, {hi}]: {exc}", total + val, err)
        total += val
    return total


def phi_eval(f: BernsteinFunction, lam: float) -> float:
    """drift * lam + psi(lam) by quadrature."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return f.drift * lam + psi_quad(f, lam)


def check_growth_condition(f: BernsteinFunction, K: float, grid_size: int = 2000) -> float:
    """Empirical constant c with mu(r) <= c mu(2r) on a log grid of (1e-6 K, K)."""
    if K <= 0:
        raise ValueError("K must be positive")
    r = np.geomspace(K * 1e-6, K, grid_size, endpoint=False)
    num = f.mu(r)
    den = f.mu(2.0 * r)
    bad = (den <= 0) & (num > 0)
    if np.any(bad):
        raise GrowthConditionViolation(float(r[np.argmax(bad)]))
    pos = num > 0
    if not np.any(pos):
        return 0.0
    # ratio through logs keeps the power-law constant exact across K
    ratio = np.exp(f.log_mu(r[pos]) - f.log_mu(2.0 * r[pos]))
    return float(np.max(ratio))


def _local_exponent(f: BernsteinFunction, t1: float, t2: float) -> float:
    l1, l2 = f.log_mu(np.array([t1, t2]))
    if not (np.isfinite(l1) and np.isfinite(l2)):
        return -np.inf
    return float((l2 - l1) / (math.log(t2) - math.log(t1)))


def levy_tail_mass(f: BernsteinFunction) -> float:
    """int_0^inf min(1, t) mu(t) dt, rejecting divergent densities."""
    if f.is_zero:
        return 0.0
    # t * mu(t) ~ t^(1+q) near 0 needs 1 + q > -1; mu ~ t^q at infinity needs q < -1
    q0 = _local_exponent(f, 1e-14, 1e-12)
    if 1.0 + q0 <= -1.0 + 1e-6:
        raise DivergentIntegralError("0", 1.0 + q0)
    qinf = _local_exponent(f, 1e12, 1e14)
    if qinf >= -1.0 - 1e-6:
        raise DivergentIntegralError("inf", qinf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        a, ea = integrate.quad(lambda t: t * float(f.mu(t)), 0.0, 1.0,
                               epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        b, eb = integrate.quad(lambda t: float(f.mu(t)), 1.0, np.inf,
                               epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DivergentIntegralError("0" if not np.isfinite(a) else "inf", float("nan"))
    return a + b


def check_monotone_convex(f: BernsteinFunction, grid: Optional[np.ndarray] = None) -> bool:
    """Grid proxy for complete monotonicity: mu nonincreasing and convex."""
    if grid is None:
        grid = np.geomspace(1e-6, 1e3, 400)
    m = f.mu(grid)
    if np.any(m < 0):
        return False
    d1 = np.diff(m) / np.diff(grid)
    return bool(np.all(d1 <= 1e-12 * np.abs(m[:-1]) + 0.0) and np.all(np.diff(d1) >= -1e-9 * np.abs(d1[:-1])))


# ---------------------------------------------------------------------------
# families


def stable(alpha: float, a: float = 1.0) -> BernsteinFunction:
    """phi(lam) = lam + a^alpha lam^(alpha/2), 0 < alpha < 2."""
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if a <= 0:
        raise ValueError("a must be positive")
    return BernsteinFunction(
        levy_density=StableDensity(alpha, a),
        closed_form_psi=_StablePsi(alpha, a),
        name=f"stable(alpha={alpha:g},a={a:g})",
    )


@dataclass(frozen=True)
class _StablePsi:
    alpha: float
    a: float

    def __call__(self, lam):
        return self.a**self.alpha * np.power(lam, self.alpha / 2.0)


@dataclass(frozen=True)
class _GammaPsi:
    def __call__(self, lam):
        return np.log1p(lam)


@dataclass(frozen=True)
class _SumPsi:
    parts: tuple

    def __call__(self, lam):
        return sum(p(lam) for p in self.parts)


def gamma_subordinator() -> BernsteinFunction:
    return BernsteinFunction(levy_density=GammaDensity(), closed_form_psi=_GammaPsi(), name="gamma")


def pure_bm() -> BernsteinFunction:
    """psi = 0. Only a baseline; the analytic setting excludes it."""
    return BernsteinFunction(levy_density=ZeroDensity(), closed_form_psi=lambda lam: 0.0 * lam, name="pure_bm")


def sum_of(parts: Sequence[BernsteinFunction]) -> BernsteinFunction:
    parts = [p for p in parts if not p.is_zero]
    if not parts:
        return pure_bm()
    psis = tuple(p.closed_form_psi for p in parts)
    return BernsteinFunction(
        levy_density=SumDensity(tuple(p.levy_density for p in parts)),
        closed_form_psi=_SumPsi(psis) if all(p is not None for p in psis) else None,
        name="sum:[" + ";".join(p.name for p in parts) + "]",
        components=tuple(parts),
    )


def truncated(f: BernsteinFunction, T: float) -> BernsteinFunction:
    return BernsteinFunction(
        levy_density=TruncatedDensity(f.levy_density, T), name=f"{f.name}*1[t<{T:g}]"
    )


def _parse_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"malformed parameter {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def parse_bernstein(spec: str) -> BernsteinFunction:
    """Build a family from its config string."""
    spec = spec.strip()
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    if name == "sum":
        rest = rest.strip()
        if not (rest.startswith("[") and rest.endswith("]")):
            raise ValueError(f"sum spec must look like sum:[a;b], got {spec!r}")
        return sum_of([parse_bernstein(p) for p in rest[1:-1].split(";") if p.strip()])
    params = _parse_params(rest)
    if name == "stable":
        unknown = set(params) - {"alpha", "a"}
        if unknown:
            raise ValueError(f"unknown stable parameters {sorted(unknown)}")
        return stable(params.get("alpha", 1.0), params.get("a", 1.0))
    if name == "gamma":
        if params:
            raise ValueError("gamma takes no parameters")
        return gamma_subordinator()
    if name in ("pure_bm", "bm"):
        return pure_bm()
    raise ValueError(f"unknown Bernstein family {name!r}")
