"""Payoff functions on exit positions, addressable by spec strings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Payoff:
    kind: str
    axis: int = -1
    level: float = 0.0
    center: tuple = ()
    radius: float = 0.0
    value: float = 1.0

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "halfspace":
            return (X[:, self.axis] >= self.level).astype(float)
        if self.kind == "cone":
            return (X[:, self.axis] >= self.level * np.linalg.norm(X, axis=1)).astype(float)
        if self.kind == "ball":
            return (np.linalg.norm(X - np.asarray(self.center), axis=1) < self.radius).astype(float)
        if self.kind == "const":
            return np.full(X.shape[0], self.value)
        raise ValueError(f"unknown payoff kind {self.kind!r}")

    def complement(self) -> "ComplementPayoff":
        return ComplementPayoff(self)


@dataclass(frozen=True)
class ComplementPayoff:
    base: Payoff

    def __call__(self, X) -> np.ndarray:
        return 1.0 - self.base(X)


def parse_payoff(spec: str, dim: int) -> Payoff:
    """``halfspace:axis=-1,level=0`` (x_axis >= level), ``cone:axis=0,cos=0.7``
    (x_axis >= cos |x|), ``ball:center=a;b;c,r=0.5``, ``const:value=1``."""
    name, _, rest = spec.strip().partition(":")
    p = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        if "=" not in item:
            raise ValueError(f"malformed payoff parameter {item!r}")
        k, v = item.split("=", 1)
        p[k.strip()] = v.strip()
    name = name.strip()
    if name == "halfspace":
        out = Payoff("halfspace", axis=int(p.pop("axis", -1)), level=float(p.pop("level", 0.0)))
    elif name == "cone":
        out = Payoff("cone", axis=int(p.pop("axis", -1)), level=float(p.pop("cos", 0.5)))
    elif name == "ball":
        if "center" not in p or "r" not in p:
            raise ValueError("ball payoff needs center and r")
        c = tuple(float(v) for v in p.pop("center").split(";"))
        if len(c) != dim:
            raise ValueError("payoff ball center has wrong dimension")
        out = Payoff("ball", center=c, radius=float(p.pop("r")))
    elif name == "const":
        out = Payoff("const", value=float(p.pop("value", 1.0)))
    else:
        raise ValueError(f"unknown payoff {name!r}")
    if p:
        raise ValueError(f"unknown payoff parameters {sorted(p)}")
    if out.kind in ("halfspace", "cone") and not -dim <= out.axis < dim:
        raise ValueError("payoff axis out of range")
    return out
