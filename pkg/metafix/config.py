# -*- coding: utf-8; -*-
"""Scenario configuration.

A scenario is described by a TOML file with the sections `[goals]`,
`[metric]`, `[metagoal]`, `[environment]`, `[agent]`, `[search]`,
`[estimation]`, `[hybrid]`, an optional `[sweep]`, and the top-level keys
`seed` and `intervals`. See `doc/config.md` for the schema.

`ScenarioConfig.from_mapping` validates the whole mapping and raises a single
`ConfigError` listing every problem it found, not just the first one.
"""

__all__ = ["ScenarioConfig", "GoalsConfig", "MetricConfig", "EnvironmentConfig",
           "AgentConfig", "SearchConfig", "EstimationConfig", "HybridConfig", "SweepConfig",
           "load_config", "apply_overrides", "MAX_GRID_CELLS", "NOISE_KINDS"]

from dataclasses import dataclass, field, fields, replace
from functools import cached_property
import hashlib
import json
import math
import tomllib

from .errors import ConfigError
from .goalspace import DomainBox, MetricParams, StateGrid
from .metagoal import MetaGoalSpec, Variant
from .objectives import OBJECTIVES, make_objective

MAX_GRID_CELLS = 4096
NOISE_KINDS = ("gaussian", "binary", "heavy_tail", "resample")


# --------------------------------------------------------------------------------
# Value converters. Each raises `TypeError` or `ValueError` with a message
# suitable for the problem list.

def _real(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeError(f"expected a real number, got {type(x)} with value {x!r}")
    return float(x)


def _count(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or (isinstance(x, float) and not x.is_integer()):
        raise TypeError(f"expected an integer, got {type(x)} with value {x!r}")
    return int(x)


def _flag(x):
    if not isinstance(x, bool):
        raise TypeError(f"expected true or false, got {type(x)} with value {x!r}")
    return x


def _text(x):
    if not isinstance(x, str):
        raise TypeError(f"expected a string, got {type(x)} with value {x!r}")
    return x


def _vector(x):
    if not isinstance(x, (list, tuple)):
        raise TypeError(f"expected a list of real numbers, got {type(x)} with value {x!r}")
    return tuple(_real(v) for v in x)


def _points(x):
    if not isinstance(x, (list, tuple)):
        raise TypeError(f"expected a list of points, got {type(x)} with value {x!r}")
    return tuple(_vector(v) for v in x)


def _optional(convert):
    def converter(x):
        return None if x is None else convert(x)
    return converter


def _setting(default, convert, **kw):
    """A dataclass field that carries its converter for `from_mapping`."""
    return field(default=default, metadata={"convert": convert}, **kw)


class _Section:
    """Mixin for configuration sections: validation on construction, parsing from a mapping."""
    section = ""

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError([f"[{self.section}] {p}" for p in problems])

    def problems(self):
        return []

    @classmethod
    def parse(cls, data, problems):
        """Build the section from the mapping `data`, appending any problems. Returns `None` on failure."""
        if data is None:
            data = {}
        if not isinstance(data, dict):
            problems.append(f"[{cls.section}] expected a table, got {type(data)} with value {data!r}")
            return None
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        ok = True
        for key, value in data.items():
            if key not in known:
                problems.append(f"[{cls.section}] unknown key {key!r}")
                ok = False
                continue
            try:
                kwargs[key] = known[key].metadata["convert"](value)
            except (TypeError, ValueError) as err:
                problems.append(f"[{cls.section}] {key}: {err}")
                ok = False
        if not ok:
            return None
        try:
            return cls(**kwargs)
        except ConfigError as err:
            problems.extend(err.problems)
            return None

    def to_mapping(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            out[f.name] = _plain(value)
        return out


def _plain(value):
    """Convert tuples and enums into TOML/JSON-friendly lists and strings."""
    if isinstance(value, Variant):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _nonneg(name, value, out):
    if not (value >= 0.0 and math.isfinite(value)):
        out.append(f"{name} must be a finite nonnegative real, got {value!r}")


def _positive_count(name, value, out):
    if value < 1:
        out.append(f"{name} must be at least 1, got {value!r}")


# --------------------------------------------------------------------------------
# Sections

@dataclass(frozen=True)
class GoalsConfig(_Section):
    """The goal space: dimension, box, start, and the state grid."""
    section = "goals"
    dim: int = _setting(1, _count)
    lo: tuple = _setting(None, _optional(_vector))
    hi: tuple = _setting(None, _optional(_vector))
    initial: tuple = _setting(None, _optional(_vector))
    initial_step: float = _setting(0.1, _real)
    grid_cells_per_dim: int = _setting(8, _count)

    def problems(self):
        out = []
        _positive_count("dim", self.dim, out)
        for name in ("lo", "hi", "initial"):
            v = getattr(self, name)
            if v is not None and len(v) != self.dim:
                out.append(f"{name} has length {len(v)}, expected dim = {self.dim}")
        if self.lo is not None and self.hi is not None and len(self.lo) == len(self.hi):
            if any(not (a < b) for a, b in zip(self.lo, self.hi)):
                out.append(f"lo must be strictly below hi on every axis, got lo={list(self.lo)}, hi={list(self.hi)}")
        _nonneg("initial_step", self.initial_step, out)
        _positive_count("grid_cells_per_dim", self.grid_cells_per_dim, out)
        if not out and self.grid_cells_per_dim ** self.dim > MAX_GRID_CELLS:
            out.append(f"grid_cells_per_dim ** dim = {self.grid_cells_per_dim ** self.dim} "
                       f"exceeds the cap of {MAX_GRID_CELLS} cells")
        return out

    @property
    def box(self):
        lo = self.lo if self.lo is not None else (0.0,) * self.dim
        hi = self.hi if self.hi is not None else (1.0,) * self.dim
        return DomainBox(lo, hi)


@dataclass(frozen=True)
class MetricConfig(_Section):
    """The agent's initial goal metric. Weights default to all ones."""
    section = "metric"
    weights: tuple = _setting(None, _optional(_vector))
    exponent: float = _setting(2.0, _real)

    def problems(self):
        out = []
        if self.weights is not None:
            if any(w < 0.0 or not math.isfinite(w) for w in self.weights):
                out.append(f"weights must be finite and nonnegative, got {list(self.weights)}")
            elif not any(w > 0.0 for w in self.weights):
                out.append("at least one weight must be positive")
        if math.isnan(self.exponent) or self.exponent < 1.0:
            out.append(f"exponent must be >= 1 (or inf), got {self.exponent!r}")
        return out


@dataclass(frozen=True)
class EnvironmentConfig(_Section):
    """Environment disturbance and the base objective."""
    section = "environment"
    noise: str = _setting("gaussian", _text)
    noise_sigma: float = _setting(0.0, _real)
    objective: str = _setting("quadratic-well", _text)
    center: tuple = _setting(None, _optional(_vector))
    width: float = _setting(0.25, _real)
    velocity: tuple = _setting(None, _optional(_vector))
    centers: tuple = _setting(None, _optional(_points))

    def problems(self):
        out = []
        if self.noise not in NOISE_KINDS:
            out.append(f"noise must be one of {list(NOISE_KINDS)}, got {self.noise!r}")
        _nonneg("noise_sigma", self.noise_sigma, out)
        if self.noise == "resample" and self.noise_sigma > 1.0:
            out.append(f"resample noise_sigma is a probability, got {self.noise_sigma!r}")
        if self.objective not in OBJECTIVES:
            out.append(f"objective must be one of {list(OBJECTIVES)}, got {self.objective!r}")
        if not (self.width > 0.0 and math.isfinite(self.width)):
            out.append(f"width must be positive, got {self.width!r}")
        if self.centers is not None and len(self.centers) < 1:
            out.append("centers must list at least one point")
        return out


@dataclass(frozen=True)
class AgentConfig(_Section):
    """The concrete agent: effort split, pursuit and self-modification proposal scales."""
    section = "agent"
    modification_rate: float = _setting(0.5, _real)
    pursuit_gain: float = _setting(0.5, _real)
    adapt_gain: float = _setting(0.0, _real)
    proposal_sigma: float = _setting(0.0, _real)
    meta_sigma: float = _setting(0.0, _real)
    metric_sigma: float = _setting(0.0, _real)
    initial_internal: tuple = _setting(None, _optional(_vector))

    def problems(self):
        out = []
        for name in ("modification_rate", "pursuit_gain", "adapt_gain"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name} must lie in [0, 1], got {v!r}")
        for name in ("proposal_sigma", "meta_sigma", "metric_sigma"):
            _nonneg(name, getattr(self, name), out)
        return out


@dataclass(frozen=True)
class SearchConfig(_Section):
    """The global self-modification search."""
    section = "search"
    candidates: int = _setting(8, _count)
    rollouts: int = _setting(2, _count)
    rollout_steps: int = _setting(2, _count)
    search_radius: float = _setting(0.1, _real)
    residual_weight: float = _setting(1.0, _real)
    refine_rounds: int = _setting(2, _count)

    def problems(self):
        out = []
        for name in ("candidates", "rollouts", "rollout_steps"):
            _positive_count(name, getattr(self, name), out)
        _nonneg("search_radius", self.search_radius, out)
        _nonneg("residual_weight", self.residual_weight, out)
        if self.refine_rounds < 0:
            out.append(f"refine_rounds must be nonnegative, got {self.refine_rounds!r}")
        return out


@dataclass(frozen=True)
class EstimationConfig(_Section):
    """Monte Carlo sizes for distribution, kernel and plausible-variation estimates."""
    section = "estimation"
    samples: int = _setting(16, _count)
    samples_per_cell: int = _setting(8, _count)
    mpv_ensemble: int = _setting(64, _count)
    mpv_quantile: float = _setting(0.95, _real)

    def problems(self):
        out = []
        for name in ("samples", "samples_per_cell", "mpv_ensemble"):
            _positive_count(name, getattr(self, name), out)
        if not 0.0 < self.mpv_quantile <= 1.0:
            out.append(f"mpv_quantile must lie in (0, 1], got {self.mpv_quantile!r}")
        return out


@dataclass(frozen=True)
class HybridConfig(_Section):
    """The hybrid switching policy: start mode, satisfaction window, feasibility flags, budget."""
    section = "hybrid"
    initial_mode: str = _setting("GoalStability", _text)
    theta_low: float = _setting(0.25, _real)
    window: int = _setting(20, _count)
    compactness_ok: bool = _setting(True, _flag)
    continuity_ok: bool = _setting(True, _flag)
    convexity_ok: bool = _setting(True, _flag)
    survival_ok: bool = _setting(True, _flag)
    budget_ok: bool = _setting(True, _flag)
    compute_budget: int = _setting(None, _optional(_count))

    def problems(self):
        out = []
        modes = [v.value for v in Variant if v is not Variant.Hybrid]
        if self.initial_mode not in modes:
            out.append(f"initial_mode must be one of {modes}, got {self.initial_mode!r}")
        if not 0.0 <= self.theta_low <= 1.0:
            out.append(f"theta_low must lie in [0, 1], got {self.theta_low!r}")
        _positive_count("window", self.window, out)
        if self.compute_budget is not None and self.compute_budget < 0:
            out.append(f"compute_budget must be nonnegative, got {self.compute_budget!r}")
        return out

    @property
    def flags(self):
        return {name: getattr(self, name) for name in ("compactness_ok", "continuity_ok", "convexity_ok",
                                                         "survival_ok", "budget_ok")}


def _swept(x):
    if not isinstance(x, dict):
        raise TypeError(f"expected a table of dotted keys to value lists, got {type(x)} with value {x!r}")
    out = []
    for key, values in x.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"swept parameter {key!r} needs a nonempty list of values, got {values!r}")
        out.append((key, tuple(values)))
    return tuple(out)


@dataclass(frozen=True)
class SweepConfig(_Section):
    """Parameters swept by `metafix sweep`: at most two dotted keys, each with a list of values."""
    section = "sweep"
    replications: int = _setting(1, _count)
    params: tuple = _setting((), _swept)

    def problems(self):
        out = []
        _positive_count("replications", self.replications, out)
        if len(self.params) > 2:
            out.append(f"at most two parameters may be swept, got {len(self.params)}")
        return out

    def to_mapping(self):
        return {"replications": self.replications,
                "params": {key: list(values) for key, values in self.params}}


def _parse_metagoal(data, problems):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        problems.append(f"[metagoal] expected a table, got {type(data)} with value {data!r}")
        return None
    converters = {"variant": _text, "c": _real, "inner_interval": _count, "interval_ratio": _count,
                  "target_variation": _real, "drift_bound": _real, "meta_drift_bound": _real,
                  "metric_drift_bound": _real, "horizon": _count}
    kwargs = {}
    ok = True
    for key, value in data.items():
        if key not in converters:
            problems.append(f"[metagoal] unknown key {key!r}")
            ok = False
            continue
        try:
            kwargs[key] = converters[key](value)
        except (TypeError, ValueError) as err:
            problems.append(f"[metagoal] {key}: {err}")
            ok = False
    if not ok:
        return None
    try:
        return MetaGoalSpec(**kwargs)
    except ConfigError as err:
        problems.extend(f"[metagoal] {p}" for p in err.problems)
        return None


def _metagoal_mapping(spec):
    return {f.name: _plain(getattr(spec, f.name)) for f in fields(spec)}


# --------------------------------------------------------------------------------

_SECTIONS = {"goals": GoalsConfig, "metric": MetricConfig, "environment": EnvironmentConfig,
             "agent": AgentConfig, "search": SearchConfig, "estimation": EstimationConfig,
             "hybrid": HybridConfig, "sweep": SweepConfig}


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete, validated scenario.

    `intervals` is K in the sense of the run length: the number of outer
    intervals of `M` steps that `run_scenario` simulates.
    """
    seed: int = 0
    intervals: int = 20
    goals: GoalsConfig = field(default_factory=GoalsConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    metagoal: MetaGoalSpec = field(default_factory=MetaGoalSpec)
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    hybrid: HybridConfig = field(default_factory=HybridConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self):
        """Constraints spanning several sections."""
        out = []
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            out.append(f"seed must be a nonnegative integer, got {self.seed!r}")
        if isinstance(self.intervals, bool) or not isinstance(self.intervals, int) or self.intervals < 1:
            out.append(f"intervals must be a positive integer, got {self.intervals!r}")
        n = self.goals.dim
        if self.metric.weights is not None and len(self.metric.weights) != n:
            out.append(f"[metric] weights has length {len(self.metric.weights)}, expected goals.dim = {n}")
        env = self.environment
        for name in ("center", "velocity"):
            v = getattr(env, name)
            if v is not None and len(v) != n:
                out.append(f"[environment] {name} has length {len(v)}, expected goals.dim = {n}")
        if env.centers is not None and any(len(c) != n for c in env.centers):
            out.append(f"[environment] every point in centers must have length goals.dim = {n}")
        if self.agent.initial_internal is not None and len(self.agent.initial_internal) != n + 1:
            out.append(f"[agent] initial_internal has length {len(self.agent.initial_internal)}, "
                       f"expected goals.dim + 1 = {n + 1} (behaviour point, then step scale)")
        for key, _ in self.sweep.params:
            if not _is_known_key(key):
                out.append(f"[sweep] unknown parameter {key!r}")
        return out

    # --------------------------------------------------------------------------------
    # Views used by the simulator.

    @property
    def goal_dim(self):
        return self.goals.dim

    @cached_property
    def domain(self):
        return self.goals.box

    @cached_property
    def grid(self):
        return StateGrid(self.domain, self.goals.grid_cells_per_dim)

    @property
    def grid_cells_per_dim(self):
        return self.goals.grid_cells_per_dim

    @property
    def env_noise_sigma(self):
        return self.environment.noise_sigma

    @property
    def modification_rate(self):
        return self.agent.modification_rate

    @property
    def timing(self):
        """`(N, M, K)`: snapshot spacing, outer interval, look-ahead horizon."""
        spec = self.metagoal
        return (spec.inner_interval, spec.outer_interval, spec.horizon)

    @property
    def steps_per_interval(self):
        """Number of N-steps in one outer interval."""
        return self.metagoal.interval_ratio

    @cached_property
    def objective(self):
        env = self.environment
        return make_objective(env.objective, self.domain, center=env.center, width=env.width,
                              velocity=env.velocity, centers=env.centers)

    @property
    def base_objective(self):
        return self.objective

    @cached_property
    def initial_metric(self):
        weights = self.metric.weights if self.metric.weights is not None else (1.0,) * self.goal_dim
        return MetricParams(weights, self.metric.exponent)

    # --------------------------------------------------------------------------------

    @classmethod
    def from_mapping(cls, mapping):
        """Build and validate a config from a nested mapping (as read from TOML).

        Raises `ConfigError` listing every problem found.
        """
        if not isinstance(mapping, dict):
            raise ConfigError([f"expected a table at the top level, got {type(mapping)} with value {mapping!r}"])
        problems = []
        known = {"seed", "intervals", "metagoal", *_SECTIONS}
        for key in mapping:
            if key not in known:
                problems.append(f"unknown top-level key {key!r}")
        kwargs = {}
        for key, convert in (("seed", _count), ("intervals", _count)):
            if key in mapping:
                try:
                    kwargs[key] = convert(mapping[key])
                except (TypeError, ValueError) as err:
                    problems.append(f"{key}: {err}")
        for name, section in _SECTIONS.items():
            parsed = section.parse(mapping.get(name), problems)
            if parsed is not None:
                kwargs[name] = parsed
        spec = _parse_metagoal(mapping.get("metagoal"), problems)
        if spec is not None:
            kwargs["metagoal"] = spec
        if problems:
            raise ConfigError(problems)
        return cls(**kwargs)

    def to_mapping(self):
        """The canonical nested mapping; `from_mapping(to_mapping())` reproduces the config."""
        out = {"seed": self.seed, "intervals": self.intervals}
        for name in _SECTIONS:
            out[name] = getattr(self, name).to_mapping()
        out["metagoal"] = _metagoal_mapping(self.metagoal)
        return out

    def digest(self):
        """SHA-256 of the canonical mapping, serialized as sorted-key JSON."""
        text = json.dumps(self.to_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_seed(self, seed):
        return replace(self, seed=seed)

    def with_overrides(self, overrides):
        """Return a new config with dotted-key overrides applied, e.g. `{"metagoal.c": 0.3}`."""
        return apply_overrides(self, overrides)


def _is_known_key(key):
    parts = key.split(".")
    if len(parts) == 1:
        return key in ("seed", "intervals")
    if len(parts) != 2:
        return False
    section, name = parts
    if section == "metagoal":
        return name in {f.name for f in fields(MetaGoalSpec)}
    if section in _SECTIONS and section != "sweep":
        return name in {f.name for f in fields(_SECTIONS[section])}
    return False


def apply_overrides(cfg, overrides):
    """Apply dotted-key overrides to `cfg` through its canonical mapping; revalidates the result."""
    mapping = cfg.to_mapping()
    problems = []
    for key, value in dict(overrides).items():
        if not _is_known_key(key):
            problems.append(f"unknown parameter {key!r}")
            continue
        parts = key.split(".")
        if len(parts) == 1:
            mapping[key] = value
        else:
            mapping.setdefault(parts[0], {})[parts[1]] = value
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig.from_mapping(mapping)


def load_config(path):
    """Read and validate a scenario config from a TOML file."""
    try:
        with open(path, "rb") as f:
            mapping = tomllib.load(f)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError([f"{path}: not valid TOML: {err}"])
    return ScenarioConfig.from_mapping(mapping)
