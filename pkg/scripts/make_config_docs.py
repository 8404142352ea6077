"""Regenerate docs/config_keys.md from the config dataclasses."""
import json
import sys
from pathlib import Path

from sbmkit.config import config_keys

BY_KEY = {
    "kernel.spec": "Bernstein function of the subordinator, e.g. `pure_bm`, `stable:alpha=1,a=1`",
    "kernel.dim": "spatial dimension d",
    "kernel.truncation_radius": "cut the jump kernel to zero beyond this radius (null keeps it untruncated)",
    "domain.spec": "domain, `ball:r=1[,center=a;b;c]`, `halfspace[:offset=0]` or `slitbox:side=..,thickness=..,reach=..,smooth=..`",
    "scheme.dt": "time step (upper bound when grading is on)",
    "scheme.eps": "small-jump cutoff; jumps shorter than this are folded into the Gaussian part",
    "scheme.bridge": "Brownian-bridge kill test between steps",
    "scheme.fold": "fold the small-jump second moment into the Gaussian variance",
    "scheme.time_cap": "paths still alive at this time are truncated and reported",
    "scheme.grading": "kappa in dt(x) = min(0.5 (max(delta, floor)/kappa)^2, dt); 0 disables",
    "scheme.grading_floor": "boundary distance below which graded steps stop shrinking",
    "run.seed": "master seed",
    "run.paths": "number of sample paths for ad-hoc commands",
    "run.workers": "worker processes; results do not depend on it",
    "run.chunk_size": "paths per RNG chunk; results depend on it, so it is part of the config hash",
    "query.x": "start point (defaults to the ball center)",
    "query.y": "second point for `green`",
    "query.x0": "reference point for `martin`",
    "query.Q": "boundary point for `bhp`, `carleson`, `martin` (defaults to the ball bottom)",
    "query.r": "localisation radius",
    "query.payoff": "exit payoff, e.g. `halfspace:axis=-1,level=0`, `cone:axis=0,cos=0.7`, `ball:center=a;b;c,r=..`, `const:value=1`",
    "query.bandwidth": "kernel bandwidth for the Green estimator (null picks one from the geometry)",
    "query.ts": "normal offsets for `martin`",
    "query.test_function": "test function for `dynkin`, e.g. `gaussian:scale=0.5`, `bump:center=a;b;c,radius=..`, `quadratic`",
    "query.b": "interval length for `profile`",
    "query.grid": "evaluation points (profile heights, BHP/Harnack/Carleson points)",
    "experiment.id": "experiment to run with `sbmkit run experiment`",
    "output.dir": "output directory (falls back to $SBMKIT_OUTPUT, then `results`)",
    "experiment.exit_time_oracle.dt": "step for the main oracle run",
    "experiment.exit_time_oracle.paths": "paths for the main oracle run",
    "experiment.exit_time_oracle.order_dts": "step sizes for the convergence-order fit",
    "experiment.exit_time_oracle.order_paths": "paths per step size in the order fit",
    "experiment.exit_time_oracle.z_max": "pass bound on |z| of E_0 tau against 1/(2d)",
    "experiment.exit_time_oracle.min_order": "minimum fitted bias order with bridge correction",
    "experiment.exit_time_scaling.max_ratio": "pass bound on max/min of E tau_{B_r} / r^2 across radii",
    "experiment.exit_time_scaling.dt_rel": "dt = dt_rel r^2",
    "experiment.exit_time_scaling.eps_rel": "eps = min(eps_rel r, 1)",
    "experiment.bhp.r": "boundary ball radius",
    "experiment.bhp.payoff": "first nonnegative payoff vanishing on the boundary piece",
    "experiment.bhp.second_payoff": "second payoff for the two-function ratio",
    "experiment.bhp.ray_points": "points on the inward normal for the decay slope",
    "experiment.bhp.slope_band": "accepted band for the decay slope",
    "experiment.bhp.max_sup_ratio": "pass bound on the sup ratio over the grid",
    "experiment.bhp.max_two_function_ratio": "pass bound on the two-function ratio",
    "experiment.green.run_disc": "run the planar disc Green check",
    "experiment.green.disc_pairs": "(x, y) pairs in the unit disc",
    "experiment.green.disc_constant": "constant in front of the disc formula",
    "experiment.green.disc_rel_tol": "relative tolerance of the disc check",
    "experiment.green.disc_dt": "step for the disc check",
    "experiment.green.run_martin": "run the Martin ratio check",
    "experiment.green.martin_x": "Martin numerator start",
    "experiment.green.martin_x0": "Martin reference start",
    "experiment.green.martin_z": "boundary point approached by y_k",
    "experiment.green.martin_ts": "normal offsets of y_k",
    "experiment.green.martin_rel_tol": "relative tolerance against the disc Poisson-kernel ratio",
    "experiment.green.run_comparability": "run the Green comparability check",
    "experiment.green.kernel": "kernel for the comparability check",
    "experiment.green.starts": "start points x",
    "experiment.green.targets": "target points y for each start",
    "experiment.green.max_spread": "pass bound on max/min of G/g over all pairs",
    "experiment.green.dt": "step for the comparability check",
    "experiment.counterexample.kernel": "kernel before truncation at kernel_range",
    "experiment.counterexample.kernel_range": "jump range R; the kernel vanishes beyond it",
    "experiment.counterexample.side": "side of the box",
    "experiment.counterexample.thickness": "thickness of the slit slab (below R)",
    "experiment.counterexample.reach": "half-width of the slab inside the box",
    "experiment.counterexample.smoothing": "corner rounding radius",
    "experiment.counterexample.r1": "localisation scale",
    "experiment.counterexample.M1": "U = D intersected with B(0, M1 r1)",
    "experiment.counterexample.depths": "target depths n",
    "experiment.counterexample.shallow": "shallow depth of the decay claim",
    "experiment.counterexample.deep": "deep depth of the decay claim",
    "experiment.counterexample.paths_A": "paths from A per depth",
    "experiment.counterexample.paths_grid": "paths per grid point per depth",
    "experiment.counterexample.max_decay_factor": "pass bound on ratio(deep)/ratio(shallow)",
    "experiment.counterexample.dt_max": "largest graded step",
    "experiment.counterexample.structural_paths": "paths checked for structural violations",
    "experiment.counterexample.radius_draws": "radius draws checked against the range",
    "experiment.counterexample.crosscheck_paths": "paths for the direct against Levy-system cross-check",
    "experiment.counterexample.crosscheck_start": "start of the cross-check",
    "experiment.halfspace.run_profile": "run the boundary profile checks",
    "experiment.halfspace.run_dynkin": "run the Dynkin residual checks",
    "experiment.halfspace.b": "interval length of the profile",
    "experiment.halfspace.profile_grid": "profile heights",
    "experiment.halfspace.profile_paths": "paths per profile height",
    "experiment.halfspace.slope_band": "accepted band for the profile slope",
    "experiment.halfspace.dynkin_paths": "paths per Dynkin check",
    "experiment.halfspace.dynkin_start": "start of the Dynkin checks",
    "experiment.halfspace.test_functions": "test functions in the ball",
    "experiment.halfspace.slab_height": "height of the truncated slab",
    "experiment.halfspace.slab_width": "radius of the ball truncating the slab",
    "experiment.halfspace.slab_test_function": "test function in the truncated slab",
    "experiment.halfspace.z_max": "pass bound on |z| of each Dynkin residual",
    "experiment.harnack.radii": "ball radii r",
    "experiment.harnack.target_distance": "payoff ball center at target_distance r",
    "experiment.harnack.target_radius": "payoff ball radius target_radius r",
    "experiment.harnack.grid_fraction": "grid points at grid_fraction r from the center",
    "experiment.harnack.dt_rel": "dt = dt_rel r^2",
    "experiment.harnack.eps_rel": "eps = min(eps_rel r, 1)",
    "experiment.harnack.max_harnack": "pass bound on the Harnack statistic",
    "experiment.harnack.run_carleson": "run the Carleson checks",
    "experiment.harnack.carleson_kernels": "kernels for the Carleson checks",
    "experiment.harnack.carleson_r": "Carleson radius",
    "experiment.harnack.carleson_payoff": "Carleson payoff",
    "experiment.harnack.carleson_paths": "paths per Carleson point",
    "experiment.harnack.max_carleson": "pass bound on the Carleson statistic",
}

BY_LEAF = {
    "dim": "spatial dimension",
    "kernels": "Bernstein specs to run",
    "paths": "paths per estimate",
    "grading": "kappa of distance-graded stepping",
    "grading_floor": "distance floor of graded stepping",
    "dt_max": "largest graded step",
    "radii": "ball radii",
    "disc_paths": "paths per disc pair",
    "martin_paths": "paths per Martin estimate",
    "comparability_paths": "paths per comparability pair",
}


def describe(key: str) -> str:
    if key in BY_KEY:
        return BY_KEY[key]
    leaf = key.rsplit(".", 1)[-1]
    if leaf in BY_LEAF:
        return BY_LEAF[leaf]
    raise KeyError(f"no description for {key}")


def main(out="docs/config_keys.md") -> int:
    lines = ["# Configuration keys", "",
             "Every key can be set in a YAML file (nested sections) or on the command line as",
             "`--section.key=value` (values parsed as YAML). Unknown keys are errors that name the line.",
             "", "| key | default | meaning |", "|---|---|---|"]
    for k, v in config_keys():
        d = json.dumps(v)
        if len(d) > 60:
            d = d[:57] + "..."
        lines.append(f"| `{k}` | `{d}` | {describe(k)} |")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
