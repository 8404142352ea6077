"""Euler scheme for the jump diffusion X = Brownian part (generator Delta) + jumps with density j.

Per step: Gaussian increment (variance 2 dt per coordinate, inflated by the
folded small-jump variance), Brownian-bridge exit test against the locally
flat boundary, then a Poisson(rate dt) number of jumps of radius >= eps applied in
turn. Jumps land exactly.
"""
from __future__ import annotations

import math
import os
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Domain
from .jump_kernel import JumpKernel
from .rng import chunk_generator


class StartNearBoundaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    dt: float = 1e-3
    eps: float = 0.05
    fold_small_jumps: bool = True
    bridge_correction: bool = True
    time_cap: float = 20.0
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.time_cap < 100 * self.dt:
            raise ValueError("time_cap must be at least 100 dt")

    def summary(self) -> dict:
        return {"dt": self.dt, "eps": self.eps, "fold": self.fold_small_jumps,
                "bridge": self.bridge_correction, "time_cap": self.time_cap,
                "seed": self.seed, "stream": self.stream}


@dataclass
class ExitRecord:
    exit_time: float
    exit_position: np.ndarray
    pre_exit_position: np.ndarray
    exited_by_jump: bool
    truncated: bool
    n_jumps: int = 0
    near_boundary_start: bool = False
    occupation_samples: Optional[list] = None


@dataclass
class ExitBatch:
    exit_time: np.ndarray
    exit_position: np.ndarray
    pre_exit_position: np.ndarray
    exited_by_jump: np.ndarray
    truncated: np.ndarray
    n_jumps: np.ndarray
    near_boundary_start: np.ndarray
    occupation: Optional[np.ndarray] = None  # (n, k) per-path integrals of the occupation functional

    @property
    def n(self) -> int:
        return int(self.exit_time.size)

    @property
    def truncated_fraction(self) -> float:
        return float(self.truncated.mean()) if self.n else 0.0

    def record(self, i: int) -> ExitRecord:
        return ExitRecord(float(self.exit_time[i]), self.exit_position[i].copy(),
                          self.pre_exit_position[i].copy(), bool(self.exited_by_jump[i]),
                          bool(self.truncated[i]), int(self.n_jumps[i]), bool(self.near_boundary_start[i]))

    def records(self) -> list:
        return [self.record(i) for i in range(self.n)]

    def dump(self, path) -> None:
        """Binary path dump (npz) for debugging."""
        arrays = {k: v for k, v in self.__dict__.items() if v is not None}
        path = os.fspath(path)
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".npz.tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, **arrays)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @staticmethod
    def concatenate(parts: list, dim: int) -> "ExitBatch":
        if not parts:
            e = np.empty(0)
            return ExitBatch(e, np.empty((0, dim)), np.empty((0, dim)), np.empty(0, bool),
                             np.empty(0, bool), np.empty(0, np.int64), np.empty(0, bool), None)
        occ = None if parts[0].occupation is None else np.concatenate([p.occupation for p in parts])
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        return ExitBatch(cat("exit_time"), cat("exit_position"), cat("pre_exit_position"),
                         cat("exited_by_jump"), cat("truncated"), cat("n_jumps"),
                         cat("near_boundary_start"), occ)


@dataclass(frozen=True)
class _JumpParams:
    rate: float
    fold: float
    sampler: object = field(default=None, repr=False)


def jump_params(kernel: JumpKernel, scheme: SchemeConfig) -> _JumpParams:
    if kernel.is_zero:
        return _JumpParams(0.0, 0.0, None)
    if scheme.eps >= kernel.support_radius:
        raise ValueError("eps must be below the kernel support radius")
    fold = kernel.small_moment(scheme.eps) / (2 * kernel.dim) if scheme.fold_small_jumps else 0.0
    return _JumpParams(kernel.tail_mass(scheme.eps), fold, kernel.radial_sampler(scheme.eps))


OccupationFn = Callable[[np.ndarray], np.ndarray]
DtFn = Callable[[np.ndarray], np.ndarray]


def _simulate_chunk(domain: Domain, starts: np.ndarray, jp: _JumpParams, scheme: SchemeConfig,
                    rng: np.random.Generator, occupation: Optional[OccupationFn] = None,
                    n_occ: int = 0, visit=None, dt_fn: Optional[DtFn] = None) -> ExitBatch:
    m, d = starts.shape
    lo, hi = domain.bounding_box
    unbounded = not domain.bounded
    cap = scheme.time_cap

    tau = np.full(m, cap)
    exit_pos = starts.copy()
    pre = starts.copy()
    by_jump = np.zeros(m, bool)
    trunc = np.ones(m, bool)
    njumps = np.zeros(m, np.int64)
    occ = np.zeros((m, n_occ)) if occupation is not None else None

    idx = np.arange(m)
    X = starts.copy()
    sdX = domain.signed_distance(X)
    dt0 = scheme.dt if dt_fn is None else dt_fn(X)
    near = sdX < 2.0 * np.sqrt(2.0 * dt0)
    T = np.zeros(m)
    # g at the current position of each live particle (trapezoid rule for occupation)
    G = occupation(X) if occupation is not None else None
    # fixed step: time is step * dt so that exit times are exact multiples
    step = 0

    while idx.size:
        step += 1
        if dt_fn is None:
            dt = scheme.dt
            t = step * dt
            if t > cap * (1 + 1e-12):
                break
        else:
            dt = dt_fn(X)
            t = T[idx] + dt
            over = t > cap
            if over.any():
                keep = ~over
                idx, X, sdX, dt, t = idx[keep], X[keep], sdX[keep], dt[keep], t[keep]
                if G is not None:
                    G = G[keep]
                if not idx.size:
                    break
            T[idx] = t
        var = 2.0 * dt * (1.0 + jp.fold)
        Z = X + np.sqrt(var)[..., None] * rng.standard_normal(X.shape) if dt_fn is not None \
            else X + math.sqrt(var) * rng.standard_normal(X.shape)
        sdZ = domain.signed_distance(Z)
        out = sdZ <= 0
        if scheme.bridge_correction:
            u = rng.random(idx.size)
            prob = np.exp(-2.0 * sdX * np.maximum(sdZ, 0.0) / var)
            out |= u < prob
        if occupation is not None:
            # trapezoid along the continuous segment X -> Z; exiting steps keep g(X)
            w = dt if dt_fn is None else dt[:, None]
            Gz = G.copy()
            stay = ~out
            if stay.any():
                Gz[stay] = occupation(Z[stay])
            occ[idx] += w * np.where(out[:, None], G, 0.5 * (G + Gz))
            G = Gz
        if visit is not None:
            visit(idx, np.where(out[:, None], X, Z), dt)
        if out.any():
            gi = idx[out]
            tau[gi] = t if dt_fn is None else t[out]
            exit_pos[gi] = domain.project(Z[out])
            pre[gi] = X[out]
            trunc[gi] = False
            keep = ~out
            idx, Z, sdZ = idx[keep], Z[keep], sdZ[keep]
            if G is not None:
                G = G[keep]
            if dt_fn is not None:
                dt, t = dt[keep], t[keep]
        if jp.rate > 0 and idx.size:
            # Poisson number of large jumps in the step, applied in turn;
            # the first landing outside D ends the path
            cnt = rng.poisson(jp.rate * dt, idx.size)
            dead = np.zeros(idx.size, bool)
            for _ in range(int(cnt.max())):
                jm = (cnt > 0) & ~dead
                if not jm.any():
                    break
                cnt -= jm
                k = int(jm.sum())
                r = jp.sampler.sample(rng.random(k))
                v = rng.standard_normal((k, d))
                v /= np.linalg.norm(v, axis=1, keepdims=True)
                Zj = Z[jm]
                Y = Zj + r[:, None] * v
                sdY = domain.signed_distance(Y)
                njumps[idx[jm]] += 1
                Z[jm] = Y
                sdZ[jm] = sdY
                landed_out = sdY <= 0
                if G is not None and (~landed_out).any():
                    G[np.flatnonzero(jm)[~landed_out]] = occupation(Y[~landed_out])
                if landed_out.any():
                    ji = np.flatnonzero(jm)[landed_out]
                    gi = idx[ji]
                    tau[gi] = t if dt_fn is None else t[ji]
                    exit_pos[gi] = Y[landed_out]
                    pre[gi] = Zj[landed_out]
                    by_jump[gi] = True
                    trunc[gi] = False
                    dead[ji] = True
            if dead.any():
                keep = ~dead
                idx, Z, sdZ = idx[keep], Z[keep], sdZ[keep]
                if G is not None:
                    G = G[keep]
                if dt_fn is not None:
                    t = t[keep]
        if unbounded and idx.size:
            esc = ~np.all((Z >= lo) & (Z <= hi), axis=1)
            if esc.any():
                gi = idx[esc]
                tau[gi] = t if dt_fn is None else t[esc]
                exit_pos[gi] = Z[esc]
                pre[gi] = Z[esc]
                keep = ~esc
                idx, Z, sdZ = idx[keep], Z[keep], sdZ[keep]
                if G is not None:
                    G = G[keep]
        X, sdX = Z, sdZ
    if idx.size:
        exit_pos[idx] = X
        pre[idx] = X
    return ExitBatch(tau, exit_pos, pre, by_jump, trunc, njumps, near, occ)


@dataclass(frozen=True)
class Grading:
    """Distance-graded step: dt(x) = min(0.5 (max(delta(x), floor)/kappa)^2, dt_max).

    The Gaussian step standard deviation then stays below delta/kappa, so the
    boundary is resolved at every scale down to ``floor``.
    """

    kappa: float = 8.0
    floor: float = 1e-3
    dt_max: float = 1e-3

    def __post_init__(self):
        if self.kappa <= 0 or self.floor <= 0 or self.dt_max <= 0:
            raise ValueError("grading parameters must be positive")

    def bind(self, domain: Domain) -> DtFn:
        def dt_fn(X):
            dl = np.maximum(domain.signed_distance(X), self.floor)
            return np.minimum(0.5 * (dl / self.kappa) ** 2, self.dt_max)
        return dt_fn


def _broadcast_starts(starts, n_paths: int, dim: int) -> np.ndarray:
    s = np.asarray(starts, dtype=float)
    if s.ndim == 1:
        if s.size != dim:
            raise ValueError("start point has wrong dimension")
        return np.broadcast_to(s, (n_paths, dim))
    if s.shape != (n_paths, dim):
        raise ValueError("starts must be a point or an (n_paths, dim) array")
    return s


def simulate_exit_batch(domain: Domain, starts, kernel: JumpKernel, scheme: SchemeConfig, n_paths: int,
                        workers: int = 1, chunk_size: int = 4096, occupation: Optional[OccupationFn] = None,
                        n_occ: int = 0, warn: bool = True, dt_fn=None) -> ExitBatch:
    """Simulate n_paths exits; chunk i draws from stream (seed, stream, i).

    ``occupation`` maps an (m, d) array of positions to (m, n_occ) values g(X);
    the batch then carries the per-path integrals of g along the path
    (trapezoid rule over each diffusion segment; a step that exits diffusively
    contributes g at its start point).
    ``dt_fn`` maps positions to per-path step sizes (graded stepping near a
    boundary layer); by the strong Markov property each step is still a
    valid Euler step started afresh.
    """
    if kernel.dim != domain.dim:
        raise ValueError("kernel and domain dimensions differ")
    n_paths = int(n_paths)
    if n_paths < 0:
        raise ValueError("n_paths must be >= 0")
    S = _broadcast_starts(starts, n_paths, domain.dim)
    if n_paths == 0:
        return ExitBatch.concatenate([], domain.dim)
    if np.any(domain.signed_distance(S) <= 0):
        raise ValueError("start points must lie strictly inside the domain")
    if occupation is not None and n_occ < 1:
        raise ValueError("n_occ must be given with an occupation functional")
    if isinstance(dt_fn, Grading):
        dt_fn = dt_fn.bind(domain)
    jp = jump_params(kernel, scheme)
    bounds = [(a, min(a + chunk_size, n_paths)) for a in range(0, n_paths, chunk_size)]

    def run(i):
        a, b = bounds[i]
        rng = chunk_generator(scheme.seed, scheme.stream, i)
        return _simulate_chunk(domain, np.array(S[a:b]), jp, scheme, rng, occupation, n_occ, dt_fn=dt_fn)

    if workers <= 1 or len(bounds) == 1:
        parts = [run(i) for i in range(len(bounds))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(len(bounds))))
    batch = ExitBatch.concatenate(parts, domain.dim)
    if warn and batch.near_boundary_start.any():
        warnings.warn("start within 2 sqrt(2 dt) of the boundary; discretisation bias likely",
                      StartNearBoundaryWarning, stacklevel=2)
    return batch


def simulate_exit(domain: Domain, start, kernel: JumpKernel, scheme: SchemeConfig,
                  rng: Optional[np.random.Generator] = None, record_occupation: bool = False) -> ExitRecord:
    """Single path. ``rng`` defaults to the scheme's (seed, stream) chunk-0 stream."""
    if kernel.dim != domain.dim:
        raise ValueError("kernel and domain dimensions differ")
    x = np.asarray(start, dtype=float).reshape(1, -1)
    if domain.signed_distance(x)[0] <= 0:
        raise ValueError("start point must lie strictly inside the domain")
    rng = rng if rng is not None else chunk_generator(scheme.seed, scheme.stream, 0)
    samples = [] if record_occupation else None

    def visit(idx, pts, dt):
        if samples is not None:
            for p in pts:
                samples.append((p.copy(), dt))

    b = _simulate_chunk(domain, x, jump_params(kernel, scheme), scheme, rng, visit=visit)
    rec = b.record(0)
    rec.occupation_samples = samples
    if rec.near_boundary_start:
        warnings.warn("start within 2 sqrt(2 dt) of the boundary; discretisation bias likely",
                      StartNearBoundaryWarning, stacklevel=2)
    return rec
