"""Command-line entry point: ``sbmkit run <command> [--config FILE] [--section.key=value ...]``.

Exit status: 0 on success, 2 when an experiment claim fails, 1 on any error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bernstein import parse_bernstein
from .config import ConfigError, RunConfig, config_keys, load_config
from .estimators import (bhp_statistic, boundary_profile, carleson_statistic, default_boundary_grid,
                         dynkin_residual, exit_functional, expected_exit_time, green_function,
                         harnack_statistic, martin_ratio)
from .experiments import EXPERIMENTS, run_experiment, write_report
from .geometry import Ball, parse_domain
from .io import write_json
from .jump_kernel import build_kernel
from .payoffs import parse_payoff
from .rng import stream_tag
from .sampler import Grading, SchemeConfig, simulate_exit_batch
from .testfunctions import parse_test_function

log = logging.getLogger("sbmkit")

COMMANDS = {
    "sample": "simulate exit records from query.x and dump them (npz + summary JSON)",
    "exit-dist": "E_x payoff(X_tau) for query.payoff",
    "tau": "expected exit time E_x tau_D",
    "green": "Green function G_D(query.x, query.y)",
    "bhp": "boundary Harnack ratio and decay slope at query.Q with radius query.r",
    "harnack": "interior Harnack statistic on B(query.x, query.r)",
    "carleson": "Carleson statistic at query.Q with radius query.r",
    "martin": "Martin kernel ratios G(x, y_k)/G(x0, y_k) along the normal at query.Q",
    "profile": "one-dimensional boundary profile on (0, query.b) over query.grid",
    "dynkin": "Dynkin residual for query.test_function started at query.x",
    "experiment": "run a named experiment (experiment.id) and write its report",
    "report": "summarise reports already written under the output directory",
}

SHORTCUTS = {
    "id": "experiment.id",
    "seed": "run.seed",
    "paths": "run.paths",
    "workers": "run.workers",
    "kernel": "kernel.spec",
    "dim": "kernel.dim",
    "domain": "domain.spec",
    "out": "output.dir",
}


def _help_epilog() -> str:
    lines = ["commands:"]
    lines += [f"  {k:<11} {v}" for k, v in COMMANDS.items()]
    lines += ["", "experiments: " + ", ".join(EXPERIMENTS), "",
              "config keys (override with --section.key=value):"]
    for k, v in config_keys():
        lines.append(f"  {k} = {json.dumps(v)}")
    lines += ["", "exit status: 0 success, 2 claim failure, 1 error"]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbmkit", description="Monte Carlo toolkit for subordinate Brownian motion "
                                "with a Gaussian component.", epilog=_help_epilog(),
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run a command", epilog=_help_epilog(),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("command", choices=list(COMMANDS))
    r.add_argument("--config", help="YAML config file")
    for k, target in SHORTCUTS.items():
        r.add_argument(f"--{k}", dest=f"short_{k}", metavar=k.upper(), help=f"shortcut for --{target}")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def _split_overrides(rest: list) -> list:
    out, i = [], 0
    while i < len(rest):
        a = rest[i]
        if not a.startswith("--") or "." not in a.split("=", 1)[0]:
            raise ConfigError(f"unrecognised argument {a!r} (overrides look like --section.key=value)")
        if "=" in a:
            k, v = a[2:].split("=", 1)
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"override {a} has no value")
            k, v = a[2:], rest[i + 1]
            i += 1
        out.append((k, v))
        i += 1
    return out


def _shortcut_overrides(ns) -> list:
    out = []
    for k, target in SHORTCUTS.items():
        v = getattr(ns, f"short_{k}")
        if v is None:
            continue
        if k in ("paths", "seed", "workers", "dim"):
            v = str(int(float(v)))
        elif k in ("kernel", "domain", "id", "out"):
            v = json.dumps(v)
        out.append((target, v))
    return out


# ---------------------------------------------------------------------------
# ad-hoc estimator commands


def _scheme(cfg: RunConfig, command: str) -> SchemeConfig:
    s = cfg.scheme
    return SchemeConfig(dt=s.dt, eps=s.eps, fold_small_jumps=s.fold, bridge_correction=s.bridge,
                        time_cap=s.time_cap, seed=cfg.run.seed, stream=stream_tag("cli", command))


def _grading(cfg: RunConfig):
    s = cfg.scheme
    return Grading(s.grading, s.grading_floor, s.dt) if s.grading > 0 else None


def _default_x(domain, dim: int) -> np.ndarray:
    if isinstance(domain, Ball):
        return domain.center.copy()
    lo, hi = domain.bounding_box
    x = 0.5 * (np.asarray(lo) + np.asarray(hi))
    if domain.signed_distance(x) <= 0:
        raise ConfigError("query.x is required for this domain")
    return x


def _default_Q(domain, dim: int) -> np.ndarray:
    if isinstance(domain, Ball):
        q = domain.center.copy()
        q[-1] -= domain.radius
        return q
    raise ConfigError("query.Q is required for this domain")


def run_command(cfg: RunConfig, command: str) -> dict:
    d = cfg.kernel.dim
    f = parse_bernstein(cfg.kernel.spec)
    q = cfg.query
    kw = {"workers": cfg.run.workers, "chunk_size": cfg.run.chunk_size}
    sch = _scheme(cfg, command)
    n = cfg.run.paths
    if command == "profile":
        grid = q.grid or [q.b / 64, q.b / 32, q.b / 16, q.b / 8]
        res = boundary_profile(f, q.b, grid, sch, n, dt_fn=_grading(cfg), **kw)
        return {"b": q.b, "grid": grid, "values": [r.to_dict() for r in res]}
    k = build_kernel(f, d, cfg.kernel.truncation_radius)
    domain = parse_domain(cfg.domain.spec, d)
    x = np.asarray(q.x, dtype=float) if q.x is not None else None
    Q = np.asarray(q.Q, dtype=float) if q.Q is not None else None
    g = _grading(cfg)
    if command == "sample":
        x = _default_x(domain, d) if x is None else x
        batch = simulate_exit_batch(domain, x, k, sch, n, dt_fn=g, **kw)
        out = Path(cfg.output.resolve()) / "sample"
        out.mkdir(parents=True, exist_ok=True)
        batch.dump(out / "exits.npz")
        ok = ~batch.truncated
        return {"n": batch.n, "mean_exit_time": float(batch.exit_time.mean()),
                "fraction_exit_by_jump": float(np.mean(batch.exited_by_jump[ok])) if ok.any() else None,
                "mean_jumps": float(batch.n_jumps.mean()), "truncated_fraction": batch.truncated_fraction,
                "records": str(out / "exits.npz")}
    if command == "exit-dist":
        x = _default_x(domain, d) if x is None else x
        return exit_functional(domain, x, parse_payoff(q.payoff, d), k, sch, n, dt_fn=g, **kw).to_dict()
    if command == "tau":
        x = _default_x(domain, d) if x is None else x
        return expected_exit_time(domain, x, k, sch, n, dt_fn=g, **kw).to_dict()
    if command == "green":
        x = _default_x(domain, d) if x is None else x
        if q.y is None:
            raise ConfigError("green needs query.y")
        return green_function(domain, x, q.y, k, sch, n, q.bandwidth, dt_fn=g, **kw).to_dict()
    if command == "bhp":
        Q = _default_Q(domain, d) if Q is None else Q
        grid = q.grid if q.grid is not None else default_boundary_grid(domain, Q, q.r)
        return bhp_statistic(domain, Q, q.r, parse_payoff(q.payoff, d), grid, k, sch, n, dt_fn=g, **kw).to_dict()
    if command == "harnack":
        c = np.zeros(d) if x is None else x
        grid = q.grid if q.grid is not None else \
            [c] + [c + s * 0.45 * q.r * e for e in np.eye(d) for s in (1, -1)]
        st, vals = harnack_statistic(c, q.r, parse_payoff(q.payoff, d), k, sch, grid, n, dt_fn=g, **kw)
        return {"statistic": st.to_dict(), "values": [v.to_dict() for v in vals]}
    if command == "carleson":
        Q = _default_Q(domain, d) if Q is None else Q
        st, f0, vals = carleson_statistic(domain, Q, q.r, parse_payoff(q.payoff, d), k, sch, n, grid=q.grid,
                                          dt_fn=g, **kw)
        return {"statistic": st.to_dict(), "reference": f0.to_dict(), "values": [v.to_dict() for v in vals]}
    if command == "martin":
        Q = _default_Q(domain, d) if Q is None else Q
        x = _default_x(domain, d) if x is None else x
        x0 = _default_x(domain, d) if q.x0 is None else np.asarray(q.x0, dtype=float)
        return martin_ratio(domain, x, x0, Q, q.ts, k, sch, n, dt_fn=g, **kw).to_dict()
    if command == "dynkin":
        x = _default_x(domain, d) if x is None else x
        tf = parse_test_function(q.test_function, d)
        return dynkin_residual(domain, x, tf, k, sch, n, dt_fn=g, **kw).to_dict()
    raise ValueError(command)


def _print_report(rep: dict) -> None:
    print(f"[{rep['experiment']}] config {rep['config_hash']} seed {rep['seed']}")
    for c in rep["claims"]:
        lo, hi = c["band"]
        band = f"[{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}]"
        print(f"  {c['verdict'].upper():<12} {c['name']}: {c['statistic']:.6g} in {band}")


def main(argv=None) -> int:
    parser = build_parser()
    ns, rest = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _split_overrides(rest) + _shortcut_overrides(ns)
        cfg = load_config(ns.config, overrides)
        outdir = Path(cfg.output.resolve())
        if ns.command == "experiment":
            if not cfg.experiment.id:
                raise ConfigError("experiment needs --id or experiment.id")
            rep = run_experiment(cfg)
            path = write_report(rep, outdir)
            _print_report(rep.to_dict())
            print(f"report: {path}")
            if not rep.passed:
                print("claim failure: " + "; ".join(rep.failing), file=sys.stderr)
                return 2
            return 0
        if ns.command == "report":
            ids = [cfg.experiment.id] if cfg.experiment.id else list(EXPERIMENTS)
            found, failed = 0, []
            for i in ids:
                p = outdir / i / "report.json"
                if not p.exists():
                    continue
                found += 1
                rep = json.loads(p.read_text())
                _print_report(rep)
                failed += [f"{i}: {c['name']}" for c in rep["claims"] if c["verdict"] != "pass"]
            if not found:
                raise FileNotFoundError(f"no reports under {outdir}")
            if failed:
                print("claim failure: " + "; ".join(failed), file=sys.stderr)
                return 2
            return 0
        result = run_command(cfg, ns.command)
        payload = {"command": ns.command, "config_hash": cfg.hash(), "seed": cfg.run.seed, "result": result}
        path = write_json(outdir / ns.command / "result.json", payload)
        print(json.dumps(result, indent=2, default=str))
        print(f"result: {path}")
        return 0
    except (ConfigError, ValueError, FileNotFoundError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
