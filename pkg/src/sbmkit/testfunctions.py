"""Smooth radial test functions with analytic Laplacians.

Each function is radial about ``center``: f(x) = g(|x - center|). The
Laplacian is g'' + (d - 1) g' / rho, written out per profile so that the
rho -> 0 limit is exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadialTestFunction:
    kind: str
    center: tuple
    scale: float = 1.0
    amplitude: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.center)

    def _rho2(self, x):
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center, dtype=float)
        return np.sum((x - c) ** 2, axis=-1)

    def profile(self, rho2):
        s2 = self.scale**2
        A = self.amplitude
        if self.kind == "constant":
            return np.full_like(rho2, A)
        if self.kind == "quadratic":
            return A * rho2 / s2
        if self.kind == "bounded_quadratic":
            q = rho2 / s2
            return A * q / (1.0 + q)
        if self.kind == "gaussian":
            return A * np.exp(-rho2 / s2)
        if self.kind == "compact_bump":
            u = 1.0 - rho2 / s2
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(u > 0, A * np.exp(1.0 - 1.0 / np.where(u > 0, u, 1.0)), 0.0)
        raise ValueError(self.kind)

    def __call__(self, x):
        return self.profile(self._rho2(x))

    def laplacian(self, x):
        rho2 = self._rho2(x)
        d = self.dim
        s2 = self.scale**2
        A = self.amplitude
        q = rho2 / s2
        if self.kind == "constant":
            return np.zeros_like(rho2)
        if self.kind == "quadratic":
            return np.full_like(rho2, 2.0 * d * A / s2)
        if self.kind == "bounded_quadratic":
            # f = 1 - 1/(1+q); Laplacian of (1+q)^-1 is (1+q)^-3 (-2d(1+q) + 8q) / s2
            return -A * (-2.0 * d * (1.0 + q) + 8.0 * q) / (1.0 + q) ** 3 / s2
        if self.kind == "gaussian":
            return A * np.exp(-q) * (4.0 * q - 2.0 * d) / s2
        if self.kind == "compact_bump":
            # G(q) = exp(1 - 1/u), u = 1 - q; Lap = (4 q G'' + 2 d G') / s2
            u = np.where(q < 1, 1.0 - q, 1.0)
            G = np.where(q < 1, np.exp(1.0 - 1.0 / u), 0.0)
            return A * G * (4.0 * q * (u**-4 - 2.0 * u**-3) - 2.0 * d * u**-2) / s2
        raise ValueError(self.kind)

    @property
    def limit_at_infinity(self) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "bounded_quadratic":
            return self.amplitude
        if self.kind in ("gaussian", "compact_bump"):
            return 0.0
        return np.inf

    @property
    def bounded(self) -> bool:
        return self.kind != "quadratic"

    def support_radius(self) -> float:
        return self.scale if self.kind == "compact_bump" else np.inf


def constant(dim: int, value: float = 1.0) -> RadialTestFunction:
    return RadialTestFunction("constant", (0.0,) * dim, amplitude=value)


def quadratic(center) -> RadialTestFunction:
    return RadialTestFunction("quadratic", tuple(map(float, center)))


def bounded_quadratic(center, scale: float = 1.0) -> RadialTestFunction:
    return RadialTestFunction("bounded_quadratic", tuple(map(float, center)), scale=scale)


def gaussian_bump(center, scale: float = 1.0) -> RadialTestFunction:
    return RadialTestFunction("gaussian", tuple(map(float, center)), scale=scale)


def compact_bump(center, radius: float) -> RadialTestFunction:
    return RadialTestFunction("compact_bump", tuple(map(float, center)), scale=radius)


def parse_test_function(spec: str, dim: int) -> RadialTestFunction:
    """``constant``, ``quadratic``, ``bounded_quadratic:scale=1``,
    ``gaussian:scale=1``, ``bump:radius=0.5``; all centred at the origin
    unless ``center=a;b;c`` is given."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    center = tuple(float(c) for c in params.pop("center").split(";")) if "center" in params else (0.0,) * dim
    if len(center) != dim:
        raise ValueError("test function center has wrong dimension")
    scale = float(params.pop("scale", params.pop("radius", 1.0)))
    if params:
        raise ValueError(f"unknown test function parameters {sorted(params)}")
    name = name.strip()
    if name == "constant":
        return constant(dim)
    if name == "quadratic":
        return quadratic(center)
    if name == "bounded_quadratic":
        return bounded_quadratic(center, scale)
    if name == "gaussian":
        return gaussian_bump(center, scale)
    if name == "bump":
        return compact_bump(center, scale)
    raise ValueError(f"unknown test function {name!r}")
