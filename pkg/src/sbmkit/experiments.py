"""Named experiments: each runs estimators against a claim and returns a report.

Thresholds come from the config sections; the analysis code only computes
statistics and compares them with the configured bands.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import svgplot
from .bernstein import parse_bernstein
from .config import RunConfig
from .counterexample import SlitSetup, TargetDensity, below_slab_density
from .estimators import (EstimatorResult, ball_density, bhp_statistic, boundary_profile, carleson_statistic,
                         default_boundary_grid, disc_green, dynkin_residual, exit_functional,
                         expected_exit_time, g_reference, green_functions, harnack_statistic,
                         levy_system_estimate, loglog_slope, martin_ratio)
from .geometry import HalfSpace, Intersection, make_ball
from .io import canonical_json, write_csv, write_json
from .jump_kernel import JumpKernel, build_kernel
from .payoffs import Payoff, parse_payoff
from .rng import chunk_generator, stream_tag
from .sampler import Grading, SchemeConfig, simulate_exit_batch
from .testfunctions import bounded_quadratic, parse_test_function

SCHEMA_VERSION = "1.0"
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class Claim:
    name: str
    anchor: str
    statistic: float
    band: list
    verdict: str
    detail: dict = field(default_factory=dict)


def judge(stat: float, lo: Optional[float] = None, hi: Optional[float] = None, reliable: bool = True) -> str:
    if stat is None or not np.isfinite(stat):
        return INCONCLUSIVE
    ok = (lo is None or stat >= lo) and (hi is None or stat <= hi)
    if not ok:
        return FAIL
    return PASS if reliable else INCONCLUSIVE


@dataclass
class ExperimentReport:
    experiment: str
    config_hash: str
    seed: int
    claims: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> {"header": [...], "rows": [[...]]}
    plots: dict = field(default_factory=dict)   # name -> plot spec
    notes: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def claim(self, name, anchor, stat, lo=None, hi=None, reliable=True, **detail) -> Claim:
        c = Claim(name, anchor, float(stat) if stat is not None else float("nan"), [lo, hi],
                  judge(stat, lo, hi, reliable), detail)
        self.claims.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.verdict == PASS for c in self.claims)

    @property
    def failing(self) -> list:
        return [c.name for c in self.claims if c.verdict != PASS]

    def to_dict(self, wall_clock: bool = True) -> dict:
        d = {"schema_version": SCHEMA_VERSION, "experiment": self.experiment, "config_hash": self.config_hash,
             "seed": self.seed, "claims": [asdict(c) for c in self.claims], "tables": self.tables,
             "plots": sorted(f"{k}.svg" for k in self.plots), "notes": self.notes, "config": self.config,
             "passed": self.passed}
        if wall_clock:
            d["wall_clock"] = self.wall_clock
        return d

    def result_json(self) -> str:
        """Canonical JSON without the wall-clock field (the determinism contract)."""
        return canonical_json(self.to_dict(wall_clock=False))


def write_report(report: ExperimentReport, outdir) -> Path:
    out = Path(outdir) / report.experiment
    out.mkdir(parents=True, exist_ok=True)
    for name, t in report.tables.items():
        write_csv(out / f"{name}.csv", t["header"], t["rows"])
    for name, spec in report.plots.items():
        svgplot.plot(out / f"{name}.svg", **spec)
    return write_json(out / "report.json", report.to_dict())


# ---------------------------------------------------------------------------
# helpers


def _kernel(spec: str, dim: int, truncation: Optional[float] = None) -> JumpKernel:
    return build_kernel(parse_bernstein(spec), dim, truncation)


def _scheme(cfg: RunConfig, label, **over) -> SchemeConfig:
    s = cfg.scheme
    base = dict(dt=s.dt, eps=s.eps, fold_small_jumps=s.fold, bridge_correction=s.bridge, time_cap=s.time_cap,
                seed=cfg.run.seed, stream=stream_tag(label))
    base.update(over)
    return SchemeConfig(**base)


def _run_kw(cfg: RunConfig) -> dict:
    return {"workers": cfg.run.workers, "chunk_size": cfg.run.chunk_size}


def _grading(kappa: float, floor: float, dt_max: float):
    return Grading(kappa, floor, dt_max) if kappa > 0 else None


def _res_row(label, r: EstimatorResult) -> list:
    return [label, r.value, r.std_error, r.n_paths, r.truncated_fraction]


def _new_report(cfg: RunConfig, exp_id: str) -> ExperimentReport:
    d = cfg.to_dict()
    d["run"].pop("workers")
    d.pop("output")
    d["experiment"] = {"id": exp_id, exp_id: d["experiment"][exp_id]}
    return ExperimentReport(exp_id, cfg.hash(), cfg.run.seed, config=d)


# ---------------------------------------------------------------------------
# exit times


def exp_exit_time_oracle(cfg: RunConfig) -> ExperimentReport:
    """Pure Brownian part in the unit ball: E_0 tau = 1/(2d), plus the bias order in dt."""
    p = cfg.experiment.exit_time_oracle
    rep = _new_report(cfg, "exit_time_oracle")
    d = p.dim
    D = make_ball(np.zeros(d), 1.0)
    k = _kernel("pure_bm", d)
    exact = 1.0 / (2 * d)
    main = expected_exit_time(D, np.zeros(d), k, _scheme(cfg, ("oracle", "main"), dt=p.dt), p.paths, **_run_kw(cfg))
    z = abs(main.value - exact) / main.std_error
    rep.claim("exit-time oracle", "expected exit time of the unit ball solves Delta u = -1", z, None, p.z_max,
              main.reliable, estimate=main.value, std_error=main.std_error, exact=exact, dt=p.dt)
    rows = [["main", p.dt, True, main.value, main.std_error, main.value - exact]]
    series = []
    orders = {}
    for bridge in (True, False):
        bias, ses = [], []
        for dt in p.order_dts:
            r = expected_exit_time(D, np.zeros(d), k,
                                   _scheme(cfg, ("oracle", dt, bridge), dt=dt, bridge_correction=bridge),
                                   p.order_paths, **_run_kw(cfg))
            bias.append(r.value - exact)
            ses.append(r.std_error)
            rows.append(["order", dt, bridge, r.value, r.std_error, r.value - exact])
        slope, sse, _ = loglog_slope(p.order_dts, np.abs(bias), ses)
        orders[bridge] = (slope, sse)
        series.append({"x": list(p.order_dts), "y": list(np.abs(bias)), "yerr": ses,
                       "label": "bridge" if bridge else "no bridge"})
    rep.claim("bridge-corrected bias order", "discretisation bias of the exit time is O(dt) with bridge correction",
              orders[True][0], p.min_order, None, True, slope_se=orders[True][1],
              no_bridge_order=orders[False][0], no_bridge_order_se=orders[False][1])
    rep.tables["exit_times"] = {"header": ["run", "dt", "bridge", "mean", "std_error", "bias"], "rows": rows}
    rep.plots["bias_vs_dt"] = {"series": series, "title": "exit-time bias", "xlabel": "dt",
                               "ylabel": "|E tau - 1/(2d)|", "logx": True, "logy": True}
    return rep


def exp_exit_time_scaling(cfg: RunConfig) -> ExperimentReport:
    """E tau_B(0,r) / r^2 is bounded above and below over r in (0, 1]."""
    p = cfg.experiment.exit_time_scaling
    rep = _new_report(cfg, "exit_time_scaling")
    d = p.dim
    rows, series = [], []
    for spec in p.kernels:
        k = _kernel(spec, d)
        scaled, ses, reliable = [], [], True
        for r in p.radii:
            sch = _scheme(cfg, ("scaling", spec, r), dt=p.dt_rel * r * r, eps=min(p.eps_rel * r, 1.0),
                          time_cap=max(cfg.scheme.time_cap * r * r, 100 * p.dt_rel * r * r))
            res = expected_exit_time(make_ball(np.zeros(d), r), np.zeros(d), k, sch, p.paths, **_run_kw(cfg))
            reliable &= res.truncated_fraction == 0
            scaled.append(res.value / r**2)
            ses.append(res.std_error / r**2)
            rows.append([spec, r, res.value, res.std_error, res.value / r**2, res.truncated_fraction])
        ratio = max(scaled) / min(scaled)
        detail = {"scaled": scaled, "std_errors": ses}
        if k.is_zero:
            detail["exact"] = 1.0 / (2 * d)
            detail["max_z"] = max(abs(s - 1.0 / (2 * d)) / e for s, e in zip(scaled, ses))
        rep.claim(f"exit-time comparability [{spec}]", "E tau of a ball of radius r is comparable to r^2",
                  ratio, None, p.max_ratio, reliable, **detail)
        series.append({"x": list(p.radii), "y": scaled, "yerr": ses, "label": spec})
    rep.tables["exit_time_scaling"] = {"header": ["kernel", "r", "mean", "std_error", "mean_over_r2",
                                                  "truncated_fraction"], "rows": rows}
    rep.plots["exit_time_over_r2"] = {"series": series, "title": "E tau / r^2", "xlabel": "r",
                                      "ylabel": "E tau / r^2", "logx": True}
    return rep


# ---------------------------------------------------------------------------
# boundary Harnack


def exp_bhp(cfg: RunConfig) -> ExperimentReport:
    p = cfg.experiment.bhp
    rep = _new_report(cfg, "bhp")
    d = p.dim
    D = make_ball(np.zeros(d), 1.0)
    Q = np.zeros(d)
    Q[-1] = -1.0
    f = parse_payoff(p.payoff, d)
    g = parse_payoff(p.second_payoff, d)
    grid = default_boundary_grid(D, Q, p.r)
    grading = _grading(p.grading, p.grading_floor, p.dt_max)
    rows, series = [], []
    for spec in p.kernels:
        k = _kernel(spec, d)
        rec = bhp_statistic(D, Q, p.r, f, grid, k, _scheme(cfg, ("bhp", spec)), p.paths, p.ray_points,
                            dt_fn=grading, second_payoff=g, **_run_kw(cfg))
        reliable = all(v.reliable for v in rec.grid_values + rec.ray_values)
        lo, hi = p.slope_band
        rep.claim(f"boundary decay rate [{spec}]", "harmonic functions vanishing off D decay like delta_D",
                  rec.decay_slope, lo, hi, reliable, slope_se=rec.decay_slope_se)
        rep.claim(f"boundary Harnack ratio [{spec}]", "f/delta_D comparable across points near the boundary",
                  rec.sup_ratio.value, None, p.max_sup_ratio, reliable and not rec.sup_ratio.inconclusive,
                  excluded_pairs=rec.sup_ratio.excluded_pairs, n_pairs=rec.sup_ratio.n_pairs)
        two = rec.two_function_ratio
        rep.claim(f"two-function ratio [{spec}]", "f/g comparable for two vanishing harmonic functions",
                  two.value, None, p.max_two_function_ratio, reliable and not two.inconclusive,
                  excluded_pairs=two.excluded_pairs, n_pairs=two.n_pairs)
        for t, v in zip(rec.ray_t, rec.ray_values):
            rows.append([spec, "ray", float(t), v.value, v.std_error])
        for x, v, w in zip(grid, rec.grid_values, rec.second_values):
            rows.append([spec, "grid:" + ";".join(f"{c:.6g}" for c in x), float(D.signed_distance(x)),
                         v.value, v.std_error])
            rows.append([spec, "grid2:" + ";".join(f"{c:.6g}" for c in x), float(D.signed_distance(x)),
                         w.value, w.std_error])
        series.append({"x": list(map(float, rec.ray_t)), "y": [v.value for v in rec.ray_values],
                       "yerr": [v.std_error for v in rec.ray_values], "label": spec})
    rep.tables["bhp"] = {"header": ["kernel", "point", "t_or_delta", "value", "std_error"], "rows": rows}
    rep.plots["decay_profile"] = {"series": series, "title": "f along the inward normal", "xlabel": "distance",
                                  "ylabel": "f", "logx": True, "logy": True}
    return rep


# ---------------------------------------------------------------------------
# Green function


def exp_green(cfg: RunConfig) -> ExperimentReport:
    p = cfg.experiment.green
    rep = _new_report(cfg, "green")
    kw = _run_kw(cfg)
    if p.run_disc:
        D = make_ball(np.zeros(2), 1.0)
        k = _kernel("pure_bm", 2)
        groups: dict = {}
        for x, y in p.disc_pairs:
            groups.setdefault(tuple(x), []).append(y)
        rows, lit_err, cor_err, reliable = [], [], [], True
        pts_mc, pts_lit = [], []
        for x, ys in groups.items():
            res = green_functions(D, x, ys, k, _scheme(cfg, ("green-disc", x), dt=p.disc_dt), p.disc_paths, **kw)
            for y, r in zip(ys, res):
                lit = disc_green(x, y, p.disc_constant)
                cor = disc_green(x, y, 1.0 / (4 * math.pi))
                reliable &= r.reliable
                lit_err.append(abs(r.value - lit) / lit)
                cor_err.append(abs(r.value - cor) / cor)
                rows.append([";".join(map(str, x)), ";".join(map(str, y)), r.value, r.std_error,
                             r.extra["value_half_bandwidth"], r.extra["bandwidth"], lit, cor])
                pts_mc.append(r.value)
                pts_lit.append(lit)
        rep.claim("disc Green oracle", "explicit planar disc Green function (configured constant)",
                  max(lit_err), None, p.disc_rel_tol, reliable, constant=p.disc_constant, rel_errors=lit_err)
        rep.claim("disc Green oracle, generator-Delta normalisation",
                  "planar disc Green function for generator Delta, constant 1/(4 pi)",
                  max(cor_err), None, p.disc_rel_tol, reliable, rel_errors=cor_err)
        rep.tables["disc_green"] = {"header": ["x", "y", "G_mc", "std_error", "G_mc_half_bandwidth", "bandwidth",
                                               "formula_configured", "formula_generator_delta"], "rows": rows}
        rep.plots["disc_green"] = {"series": [{"x": pts_lit, "y": pts_mc, "style": "points", "label": "MC vs formula"},
                                              {"x": pts_lit, "y": pts_lit, "label": "y = x"}],
                                   "title": "disc Green function", "xlabel": "formula", "ylabel": "Monte Carlo"}
    if p.run_martin:
        D = make_ball(np.zeros(2), 1.0)
        k = _kernel("pure_bm", 2)
        probe = martin_ratio(D, p.martin_x, p.martin_x0, p.martin_z, p.martin_ts, k,
                             _scheme(cfg, ("martin",), dt=p.disc_dt), p.martin_paths, **kw)
        errs, rows = [], []
        for y, r in zip(probe.targets, probe.ratios):
            exact = disc_green(p.martin_x, y) / disc_green(p.martin_x0, y)
            errs.append(abs(r.value - exact) / exact)
            rows.append([r.extra["t"], r.value, r.std_error, exact])
        rep.claim("Martin kernel ratio vs disc formula", "Green ratio G(x,y)/G(x0,y) near the boundary",
                  max(errs), None, p.martin_rel_tol, not probe.inconclusive and all(r.reliable for r in probe.ratios),
                  inconclusive_targets=probe.inconclusive, fluctuation=probe.fluctuation, pooled_se=probe.pooled_se)
        rep.tables["martin"] = {"header": ["t", "M_mc", "std_error", "M_formula"], "rows": rows}
    if p.run_comparability:
        d = len(p.starts[0])
        D = make_ball(np.zeros(d), 1.0)
        k = _kernel(p.kernel, d)
        rows, ratios, excluded, reliable = [], [], [], True
        G_all, g_all = [], []
        for i, (x, ys) in enumerate(zip(p.starts, p.targets)):
            ys_a = np.asarray(ys, dtype=float)
            h = np.minimum(np.linalg.norm(ys_a - np.asarray(x), axis=1) / 6, D.signed_distance(ys_a) / 2)
            res = green_functions(D, x, ys_a, k, _scheme(cfg, ("green-cmp", i), dt=p.dt), p.comparability_paths,
                                  h, **kw)
            for y, r in zip(ys, res):
                gref = g_reference(D, x, y)
                reliable &= r.reliable
                sig = r.significant()
                if sig:
                    ratios.append(r.value / gref)
                    G_all.append(r.value)
                    g_all.append(gref)
                else:
                    excluded.append([x, y])
                rows.append([";".join(map(str, x)), ";".join(map(str, y)), r.value, r.std_error,
                             r.extra["value_half_bandwidth"], r.extra["bandwidth"], gref, sig])
        spread = max(ratios) / min(ratios) if ratios else float("nan")
        rep.claim(f"Green comparability [{p.kernel}]", "G_D comparable to the closed-form g_D", spread, None,
                  p.max_spread, reliable, n_pairs=len(ratios), excluded_pairs=excluded,
                  min_ratio=min(ratios) if ratios else None, max_ratio=max(ratios) if ratios else None)
        rep.tables["green_comparability"] = {"header": ["x", "y", "G_mc", "std_error", "G_mc_half_bandwidth",
                                                        "bandwidth", "g_reference", "significant"], "rows": rows}
        rep.plots["green_vs_reference"] = {"series": [{"x": g_all, "y": G_all, "style": "points",
                                                       "label": p.kernel}],
                                           "title": "G vs g_D", "xlabel": "g_D", "ylabel": "G (MC)",
                                           "logx": True, "logy": True}
    return rep


# ---------------------------------------------------------------------------
# finite-range counterexample


def exp_counterexample(cfg: RunConfig) -> ExperimentReport:
    p = cfg.experiment.counterexample
    rep = _new_report(cfg, "counterexample")
    kw = _run_kw(cfg)
    setup = SlitSetup(p.dim, p.side, p.thickness, p.reach, p.smoothing, p.r1, p.M1, p.kernel_range)
    k = _kernel(p.kernel, p.dim, p.kernel_range)
    U = setup.local_domain
    A = setup.A
    rows = []
    ratio = {}
    ratio_se = {}
    reliable = True
    for n in p.depths:
        J = TargetDensity(setup, n, k)
        grading = Grading(p.grading, setup.height(n) / 64, p.dt_max)
        sch = _scheme(cfg, ("counterexample", n))
        uA = levy_system_estimate(U, A, J, k, sch, p.paths_A, dt_fn=grading, **kw)
        grid = setup.grid(n)
        vals = [levy_system_estimate(U, x, J, k, replace(sch, stream=stream_tag("ce-grid", n, i)), p.paths_grid,
                                     dt_fn=grading, **kw) for i, x in enumerate(grid)]
        j = int(np.argmax([v.value for v in vals]))
        sup = vals[j]
        reliable &= uA.reliable and all(v.reliable for v in vals)
        ratio[n] = uA.value / sup.value
        ratio_se[n] = ratio[n] * math.hypot(uA.std_error / uA.value, sup.std_error / sup.value)
        rows.append([n, setup.height(n), setup.lateral_radius(n), uA.value, uA.std_error, sup.value, sup.std_error,
                     ";".join(f"{c:.6g}" for c in grid[j]), ratio[n], ratio_se[n]])
    shallow, deep = p.shallow, p.deep
    decay = ratio[deep] / ratio[shallow]
    decay_se = decay * math.hypot(ratio_se[deep] / ratio[deep], ratio_se[shallow] / ratio[shallow])
    rep.claim("Carleson-type ratio decay with depth",
              "finite-range kernel: u_n(A) / sup u_n tends to 0, so no Carleson/BHP constant exists",
              decay, None, p.max_decay_factor, reliable, decay_se=decay_se, shallow=shallow, deep=deep,
              ratios={str(n): ratio[n] for n in p.depths})
    rep.tables["ratio_vs_depth"] = {"header": ["n", "h_n", "lateral_radius", "u_A", "u_A_se", "sup_u", "sup_u_se",
                                               "argmax", "ratio", "ratio_se"], "rows": rows}
    rep.plots["ratio_vs_depth"] = {"series": [{"x": list(map(float, p.depths)), "y": [ratio[n] for n in p.depths],
                                               "yerr": [ratio_se[n] for n in p.depths], "label": "u_n(A)/sup u_n"}],
                                   "title": "Carleson-type ratio vs depth", "xlabel": "n", "ylabel": "ratio",
                                   "logy": True}

    # structural zero: exits of U outside D_n never land in C_n
    sampler = k.radial_sampler(cfg.scheme.eps)
    rng = chunk_generator(cfg.run.seed, stream_tag("ce-radius"), 0)
    radii = sampler.sample(rng.random(p.radius_draws))
    rng = chunk_generator(cfg.run.seed, stream_tag("ce-points"), 0)
    lo, hi = U.bounding_box
    pts = lo + (hi - lo) * rng.random((200_000, p.dim))
    pts = pts[U.signed_distance(pts) > 0]
    batch = simulate_exit_batch(U, A, k, _scheme(cfg, ("ce-structural",)), p.structural_paths,
                                dt_fn=Grading(p.grading, setup.height(max(p.depths)) / 64, p.dt_max), **kw)
    violations = 0
    detail = {"max_jump_radius": float(radii.max()), "sampler_r_max": sampler.r_max}
    violations += int(radii.max() >= p.kernel_range) + int(sampler.r_max > p.kernel_range)
    for n in p.depths:
        J = TargetDensity(setup, n, k)
        off = pts[~setup.in_reach_set(n, pts)]
        nonzero = int(np.count_nonzero(J(off)))
        close = int(np.count_nonzero(setup.distance_to_target(n, off) < p.kernel_range))
        landed = setup.in_target(n, batch.exit_position) & ~batch.truncated
        bad = int(np.count_nonzero(landed & ~setup.in_reach_set(n, batch.pre_exit_position)))
        violations += nonzero + close + bad
        detail[f"n{n}"] = {"J_nonzero_off_reach_set": nonzero, "points_within_range_off_reach_set": close,
                           "landings": int(landed.sum()), "landings_from_outside_reach_set": bad}
    rep.claim("one-jump unreachability", "jump kernel vanishing beyond 1 cannot reach C_n from outside D_n",
              violations, 0, 0, True, **detail)

    # dual route on a reachable target: direct exit counts vs Levy-system integral
    V = below_slab_density(setup, k)
    x = np.asarray(p.crosscheck_start, dtype=float)
    grading = Grading(p.grading, 1e-3, p.dt_max)
    sch = _scheme(cfg, ("ce-crosscheck",))
    below = lambda P: (P[:, -1] < -setup.thickness).astype(float)
    direct = exit_functional(U, x, below, k, sch, p.crosscheck_paths, dt_fn=grading, **kw)
    levy = levy_system_estimate(U, x, V, k, replace(sch, stream=stream_tag("ce-crosscheck-levy")),
                                p.crosscheck_paths, dt_fn=grading, **kw)
    z = abs(direct.value - levy.value) / math.hypot(direct.std_error, levy.std_error)
    rep.claim("Levy-system formula vs direct exits", "exit distribution equals the occupation integral of J_V",
              z, None, 3.0, direct.reliable and levy.reliable, direct=direct.value, direct_se=direct.std_error,
              levy_system=levy.value, levy_system_se=levy.std_error)
    rep.notes.append("C_n = {|x~| <= 2^-n-3 r1, x_d <= -1 + 2^-n r1^2}; D_n = points above the slab within 1 of C_n")
    return rep


# ---------------------------------------------------------------------------
# half-space profile and Dynkin identity


def _dynkin_function(spec: str, dim: int, kernel: JumpKernel):
    f = parse_test_function(spec, dim)
    if f.kind == "quadratic" and not kernel.is_zero:
        # |x|^2 is not integrable against a heavy-tailed jump kernel
        return bounded_quadratic(f.center)
    return f


def exp_halfspace(cfg: RunConfig) -> ExperimentReport:
    p = cfg.experiment.halfspace
    rep = _new_report(cfg, "halfspace")
    kw = _run_kw(cfg)
    grading = _grading(p.grading, p.grading_floor, p.dt_max)
    if p.run_profile:
        rows, series = [], []
        for spec in p.kernels:
            f = parse_bernstein(spec)
            prof = boundary_profile(f, p.b, p.profile_grid, _scheme(cfg, ("profile", spec)), p.profile_paths,
                                    dt_fn=grading, **kw)
            slope, sse, _ = loglog_slope(p.profile_grid, [r.value for r in prof], [r.std_error for r in prof])
            lo, hi = p.slope_band
            reliable = all(r.reliable for r in prof)
            detail = {"slope_se": sse}
            if f.is_zero:
                detail["max_z_vs_linear"] = max(abs(r.value - x / p.b) / r.std_error
                                                for x, r in zip(p.profile_grid, prof))
            rep.claim(f"boundary profile slope [{spec}]", "one-dimensional harmonic profile near 0 is linear",
                      slope, lo, hi, reliable, **detail)
            for x, r in zip(p.profile_grid, prof):
                rows.append([spec, x, r.value, r.std_error])
            series.append({"x": list(p.profile_grid), "y": [r.value for r in prof],
                           "yerr": [r.std_error for r in prof], "label": spec})
        rep.tables["profile"] = {"header": ["kernel", "x", "h", "std_error"], "rows": rows}
        rep.plots["profile"] = {"series": series, "title": "exit-to-the-right probability", "xlabel": "x",
                                "ylabel": "h(x)", "logx": True, "logy": True}

    if p.run_dynkin:
        d = p.dim
        ball = make_ball(np.zeros(d), 1.0)
        e = np.zeros(d)
        e[-1] = 1.0
        mid = np.zeros(d)
        mid[-1] = p.slab_height / 2
        slab = Intersection([HalfSpace(e, 0.0), HalfSpace(-e, -p.slab_height), make_ball(mid, p.slab_width)],
                            name="truncated slab")
        cases = [(ball, p.dynkin_start, s) for s in p.test_functions] + [(slab, list(mid), p.slab_test_function)]
        drows = []
        for spec in p.kernels:
            k = _kernel(spec, d)
            for dom, x, fs in cases:
                f = _dynkin_function(fs, d, k)
                r = dynkin_residual(dom, x, f, k, _scheme(cfg, ("dynkin", spec, dom.name, fs)), p.dynkin_paths,
                                    dt_fn=grading, **kw)
                if f.kind == "constant":
                    stat = abs(r.value)
                    rep.claim(f"Dynkin residual, constant f [{spec}, {dom.name}]",
                              "Dynkin formula for the killed process", stat, 0.0, 0.0, r.reliable, residual=r.value)
                else:
                    z = abs(r.value) / r.std_error if r.std_error > 0 else float("inf")
                    rep.claim(f"Dynkin residual, {f.kind} [{spec}, {dom.name}]",
                              "Dynkin formula for the killed process", z, None, p.z_max, r.reliable,
                              residual=r.value, std_error=r.std_error)
                drows.append([spec, dom.name, fs, f.kind, r.value, r.std_error, r.truncated_fraction])
        rep.tables["dynkin"] = {"header": ["kernel", "domain", "test_function", "used", "residual", "std_error",
                                           "truncated_fraction"], "rows": drows}
    return rep


# ---------------------------------------------------------------------------
# interior Harnack and Carleson


def exp_harnack(cfg: RunConfig) -> ExperimentReport:
    p = cfg.experiment.harnack
    rep = _new_report(cfg, "harnack")
    kw = _run_kw(cfg)
    d = p.dim
    rows, series = [], []
    for spec in p.kernels:
        k = _kernel(spec, d)
        stats, reliable, excluded = [], True, {}
        for r in p.radii:
            c = np.zeros(d)
            target = np.zeros(d)
            target[0] = p.target_distance * r
            payoff = Payoff("ball", center=tuple(target), radius=p.target_radius * r)
            grid = [c] + [c + s * p.grid_fraction * r * np.eye(d)[i] for i in range(d) for s in (1, -1)]
            sch = _scheme(cfg, ("harnack", spec, r), dt=p.dt_rel * r * r, eps=min(p.eps_rel * r, 1.0))
            density = None if k.is_zero else ball_density(
                k, target, p.target_radius * r, s_range=((p.target_distance - 1) * r, (p.target_distance + 1) * r))
            st, vals = harnack_statistic(c, r, payoff, k, sch, grid, p.paths, density=density, **kw)
            reliable &= all(v.reliable for v in vals) and not st.inconclusive
            stats.append(st.value)
            excluded[str(r)] = st.excluded_pairs
            for x, v in zip(grid, vals):
                rows.append([spec, r, ";".join(f"{t:.6g}" for t in x), v.value, v.std_error])
        rep.claim(f"interior Harnack [{spec}]", "Harnack inequality on balls of radius r <= 1", max(stats), None,
                  p.max_harnack, reliable, per_radius=dict(zip(map(str, p.radii), stats)), excluded_pairs=excluded)
        series.append({"x": list(p.radii), "y": stats, "label": spec})
    rep.tables["harnack"] = {"header": ["kernel", "r", "x", "f", "std_error"], "rows": rows}
    rep.plots["harnack"] = {"series": series, "title": "Harnack statistic", "xlabel": "r", "ylabel": "max f(x)/f(y)",
                            "logx": True}
    if p.run_carleson:
        D = make_ball(np.zeros(d), 1.0)
        Q = np.zeros(d)
        Q[-1] = -1.0
        payoff = parse_payoff(p.carleson_payoff, d)
        grading = _grading(p.grading, p.grading_floor, p.dt_max)
        crows = []
        for spec in p.carleson_kernels:
            k = _kernel(spec, d)
            st, f0, vals = carleson_statistic(D, Q, p.carleson_r, payoff, k, _scheme(cfg, ("carleson", spec)),
                                              p.carleson_paths, dt_fn=grading, **kw)
            reliable = f0.reliable and all(v.reliable for v in vals) and not st.inconclusive
            rep.claim(f"Carleson estimate [{spec}]", "sup near the boundary controlled by an interior value",
                      st.value, None, p.max_carleson, reliable, reference=f0.value, reference_se=f0.std_error)
            crows.append([spec, "x0", f0.value, f0.std_error])
            crows += [[spec, f"grid{i}", v.value, v.std_error] for i, v in enumerate(vals)]
        rep.tables["carleson"] = {"header": ["kernel", "point", "f", "std_error"], "rows": crows}
    return rep


EXPERIMENTS: dict[str, Callable[[RunConfig], ExperimentReport]] = {
    "exit_time_oracle": exp_exit_time_oracle,
    "exit_time_scaling": exp_exit_time_scaling,
    "bhp": exp_bhp,
    "green": exp_green,
    "counterexample": exp_counterexample,
    "halfspace": exp_halfspace,
    "harnack": exp_harnack,
}


def run_experiment(cfg: RunConfig, exp_id: Optional[str] = None) -> ExperimentReport:
    exp_id = exp_id or cfg.experiment.id
    if exp_id not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {exp_id!r}; choose from {sorted(EXPERIMENTS)}")
    t0 = time.perf_counter()
    rep = EXPERIMENTS[exp_id](cfg)
    rep.wall_clock = time.perf_counter() - t0
    return rep
