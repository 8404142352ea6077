"""Run configuration: a YAML key/value tree mapped onto dataclasses.

Unknown keys are errors with the offending line; CLI overrides use
``--section.key=value`` with YAML-typed values.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass, field
from typing import Optional

import yaml

OUTPUT_ENV = "SBMKIT_OUTPUT"


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# sections


@dataclass
class KernelSection:
    spec: str = "stable:alpha=1,a=1"
    dim: int = 3
    truncation_radius: Optional[float] = None


@dataclass
class DomainSection:
    spec: str = "ball:r=1"


@dataclass
class SchemeSection:
    dt: float = 1e-3
    eps: float = 0.05
    bridge: bool = True
    fold: bool = True
    time_cap: float = 20.0
    grading: float = 0.0  # kappa of distance-graded stepping; 0 keeps dt fixed
    grading_floor: float = 1e-3


@dataclass
class RunSection:
    seed: int = 0
    paths: int = 100000
    workers: int = 1
    chunk_size: int = 4096


@dataclass
class QuerySection:
    x: Optional[list] = None
    y: Optional[list] = None
    x0: Optional[list] = None
    Q: Optional[list] = None
    r: float = 0.5
    payoff: str = "halfspace:axis=-1,level=0"
    bandwidth: Optional[float] = None
    ts: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    test_function: str = "gaussian:scale=0.5"
    b: float = 1.0
    grid: Optional[list] = None


@dataclass
class ExitTimeOracleParams:
    dim: int = 3
    paths: int = 1_000_000
    dt: float = 2e-4
    order_dts: list = field(default_factory=lambda: [1.6e-2, 8e-3, 4e-3])
    order_paths: int = 400_000
    z_max: float = 3.0
    min_order: float = 0.8


@dataclass
class ExitTimeScalingParams:
    kernels: list = field(default_factory=lambda: ["pure_bm", "stable:alpha=1,a=1"])
    dim: int = 3
    radii: list = field(default_factory=lambda: [1 / 16, 1 / 8, 1 / 4, 1 / 2])
    dt_rel: float = 2e-4
    eps_rel: float = 0.25
    paths: int = 100_000
    max_ratio: float = 2.5


@dataclass
class BHPParams:
    kernels: list = field(default_factory=lambda: ["pure_bm", "stable:alpha=0.5,a=1", "stable:alpha=1,a=1"])
    dim: int = 3
    r: float = 0.5
    payoff: str = "halfspace:axis=-1,level=0"
    second_payoff: str = "cone:axis=0,cos=0.7"
    paths: int = 100_000
    ray_points: int = 7
    slope_band: list = field(default_factory=lambda: [0.85, 1.15])
    max_sup_ratio: float = 50.0
    max_two_function_ratio: float = 50.0
    grading: float = 8.0
    grading_floor: float = 1e-3
    dt_max: float = 1e-3


@dataclass
class GreenParams:
    run_disc: bool = True
    disc_pairs: list = field(default_factory=lambda: [
        [[0.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [0.0, -0.3]], [[0.0, 0.0], [-0.35, 0.35]],
        [[0.3, 0.0], [-0.4, 0.2]], [[0.3, 0.0], [0.3, -0.6]]])
    disc_paths: int = 1_000_000
    disc_dt: float = 1e-3
    disc_constant: float = 0.15915494309189535  # 1/(2 pi), the literal acceptance formula
    disc_rel_tol: float = 0.10
    run_martin: bool = True
    martin_x: list = field(default_factory=lambda: [0.3, 0.0])
    martin_x0: list = field(default_factory=lambda: [0.0, 0.0])
    martin_z: list = field(default_factory=lambda: [0.0, -1.0])
    martin_ts: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    martin_paths: int = 400_000
    martin_rel_tol: float = 0.15
    run_comparability: bool = True
    kernel: str = "stable:alpha=1,a=1"
    starts: list = field(default_factory=lambda: [
        [0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, -0.75], [-0.3, 0.4, 0.2], [0.0, -0.6, 0.3]])
    targets: list = field(default_factory=lambda: [
        [[0.4, 0.0, 0.0], [0.0, 0.6, 0.0], [0.0, 0.0, -0.85], [-0.5, -0.5, 0.0]],
        [[0.8, 0.0, 0.0], [0.5, 0.3, 0.0], [0.0, 0.0, 0.0], [0.3, 0.0, 0.6]],
        [[0.0, 0.0, -0.4], [0.3, 0.0, -0.85], [0.0, 0.5, -0.5], [0.0, 0.0, 0.3]],
        [[-0.6, 0.6, 0.2], [0.2, 0.4, 0.2], [-0.3, 0.0, 0.6], [-0.3, 0.4, -0.4]],
        [[0.0, -0.9, 0.3], [0.0, -0.2, 0.3], [0.5, -0.6, 0.3], [0.0, -0.6, -0.3]]])
    comparability_paths: int = 200_000
    max_spread: float = 25.0
    dt: float = 1e-3


@dataclass
class CounterexampleParams:
    dim: int = 3
    side: float = 4.0
    thickness: float = 0.25
    reach: float = 1.5
    smoothing: float = 0.05
    r1: float = 0.2
    M1: float = 1.2
    kernel: str = "stable:alpha=1,a=1"
    kernel_range: float = 1.0
    depths: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    shallow: int = 2
    deep: int = 6
    paths_A: int = 20_000
    paths_grid: int = 2_000
    max_decay_factor: float = 0.3333333333333333
    grading: float = 8.0
    dt_max: float = 1e-4
    structural_paths: int = 10_000
    radius_draws: int = 1_000_000
    crosscheck_paths: int = 40_000
    crosscheck_start: list = field(default_factory=lambda: [0.0, 0.0, 0.02])


@dataclass
class HalfspaceParams:
    run_profile: bool = True
    run_dynkin: bool = True
    kernels: list = field(default_factory=lambda: ["pure_bm", "stable:alpha=1,a=1"])
    b: float = 1.0
    profile_grid: list = field(default_factory=lambda: [1 / 64, 1 / 32, 1 / 16, 1 / 8])
    profile_paths: int = 40_000
    slope_band: list = field(default_factory=lambda: [0.85, 1.15])
    dim: int = 3
    dynkin_paths: int = 100_000
    dynkin_start: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    test_functions: list = field(default_factory=lambda: ["constant", "quadratic", "gaussian:center=0.2;0;0,scale=0.5"])
    slab_height: float = 1.0
    slab_width: float = 2.0
    slab_test_function: str = "bump:center=0;0;0.5,radius=0.4"
    z_max: float = 3.0
    grading: float = 8.0
    grading_floor: float = 1e-3
    dt_max: float = 1e-3


@dataclass
class HarnackParams:
    kernels: list = field(default_factory=lambda: ["stable:alpha=1,a=1", "stable:alpha=0.5,a=1"])
    dim: int = 3
    radii: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    target_distance: float = 2.0
    target_radius: float = 0.5
    grid_fraction: float = 0.45
    dt_rel: float = 1e-3
    eps_rel: float = 0.25
    paths: int = 40_000
    max_harnack: float = 10.0
    run_carleson: bool = True
    carleson_kernels: list = field(default_factory=lambda: ["pure_bm", "stable:alpha=1,a=1"])
    carleson_r: float = 0.5
    carleson_payoff: str = "halfspace:axis=-1,level=0"
    carleson_paths: int = 40_000
    max_carleson: float = 10.0
    grading: float = 8.0
    grading_floor: float = 1e-3
    dt_max: float = 1e-3


@dataclass
class ExperimentSection:
    id: str = ""
    exit_time_oracle: ExitTimeOracleParams = field(default_factory=ExitTimeOracleParams)
    exit_time_scaling: ExitTimeScalingParams = field(default_factory=ExitTimeScalingParams)
    bhp: BHPParams = field(default_factory=BHPParams)
    green: GreenParams = field(default_factory=GreenParams)
    counterexample: CounterexampleParams = field(default_factory=CounterexampleParams)
    halfspace: HalfspaceParams = field(default_factory=HalfspaceParams)
    harnack: HarnackParams = field(default_factory=HarnackParams)


@dataclass
class OutputSection:
    dir: str = ""

    def resolve(self) -> str:
        return self.dir or os.environ.get(OUTPUT_ENV, "results")


@dataclass
class RunConfig:
    kernel: KernelSection = field(default_factory=KernelSection)
    domain: DomainSection = field(default_factory=DomainSection)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    run: RunSection = field(default_factory=RunSection)
    query: QuerySection = field(default_factory=QuerySection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Digest of everything that affects results (worker count and output dir excluded)."""
        d = self.to_dict()
        d["run"].pop("workers")
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# building


def _key_lines(node, prefix=()) -> dict:
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            out.update(_key_lines(v, path))
    return out


def _coerce(tp, value, path, lines, source):
    line = lines.get(path)
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path, lines, source)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"section {'.'.join(path)} must be a mapping", line, source)
        return build(tp, value, path, lines, source)
    try:
        if tp is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if tp is int:
            if isinstance(value, bool):
                raise TypeError
            if isinstance(value, float) and value.is_integer():
                return int(value)
            if isinstance(value, str):
                f = float(value)
                if not f.is_integer():
                    raise TypeError
                return int(f)
            if not isinstance(value, int):
                raise TypeError
            return value
        if tp is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if tp is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if tp is list or origin is list:
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return list(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {value!r} for {'.'.join(path)} (expected {getattr(tp, '__name__', tp)})",
                          line, source) from None
    return value


def build(cls, data: dict, path=(), lines=None, source: str = "<config>"):
    lines = lines or {}
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for k, v in (data or {}).items():
        p = path + (str(k),)
        if k not in names:
            raise ConfigError(f"unknown key {'.'.join(p)}", lines.get(p), source)
        kwargs[k] = _coerce(hints[k], v, p, lines, source)
    return cls(**kwargs)


def apply_override(tree: dict, dotted: str, raw: str) -> None:
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted}: {k} is not a section")
    node[keys[-1]] = yaml.safe_load(raw)


def load_config(path=None, overrides=()) -> RunConfig:
    """Parse a YAML file (optional) then apply ``(dotted_key, raw_value)`` overrides."""
    tree, lines, source = {}, {}, "<config>"
    if path is not None:
        source = str(path)
        with open(path) as fh:
            text = fh.read()
        try:
            node = yaml.compose(text)
            tree = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}",
                              mark.line + 1 if mark else None, source) from None
        if not isinstance(tree, dict):
            raise ConfigError("top level must be a mapping", 1, source)
        lines = _key_lines(node) if node is not None else {}
    for k, v in overrides:
        apply_override(tree, k, v)
    cfg = build(RunConfig, tree, (), lines, source)
    validate(cfg, lines, source)
    return cfg


def validate(cfg: RunConfig, lines=None, source: str = "<config>") -> None:
    lines = lines or {}

    def fail(msg, *path):
        raise ConfigError(msg, lines.get(tuple(path)), source)

    s = cfg.scheme
    if s.dt <= 0:
        fail("scheme.dt must be positive", "scheme", "dt")
    if not 0 < s.eps <= 1:
        fail("scheme.eps must lie in (0, 1]", "scheme", "eps")
    if s.time_cap < 100 * s.dt:
        fail("scheme.time_cap must be at least 100 dt", "scheme", "time_cap")
    if cfg.run.paths < 0:
        fail("run.paths must be >= 0", "run", "paths")
    if cfg.run.workers < 1:
        fail("run.workers must be >= 1", "run", "workers")
    if cfg.run.chunk_size < 1:
        fail("run.chunk_size must be >= 1", "run", "chunk_size")
    if cfg.kernel.dim < 1:
        fail("kernel.dim must be >= 1", "kernel", "dim")
    et = cfg.experiment.exit_time_scaling
    if any(r > 1 or r <= 0 for r in et.radii):
        fail("exit-time radii must lie in (0, 1]", "experiment", "exit_time_scaling", "radii")
    hn = cfg.experiment.harnack
    if any(r > 1 or r <= 0 for r in hn.radii):
        fail("Harnack radii must lie in (0, 1]", "experiment", "harnack", "radii")


def config_keys(cls=RunConfig, prefix="") -> list:
    """All dotted config keys with defaults, for --help and docs."""
    out = []
    for f in dataclasses.fields(cls):
        hint = typing.get_type_hints(cls)[f.name]
        name = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(hint):
            out += config_keys(hint, name + ".")
        else:
            default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
            out.append((name, default))
    return out
