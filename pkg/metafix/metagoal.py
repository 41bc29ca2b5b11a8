# -*- coding: utf-8; -*-
"""Metagoals: goals about how the goal system itself may change.

A `MetaGoalSpec` selects one metagoal variant and its constants. This module
provides, per variant:

- condition checkers, which look at a `GoalHistory` of snapshots taken every
  `N` steps and tell whether the metagoal's inequality held;
- enforcement, which projects a proposed self-modification so that the
  contraction inequality holds by construction;
- the moderated-evolution estimate of maximum plausible variation, and the
  controller that steers it toward its target;
- the global self-modification search of the drift-bounded variants;
- the hybrid switching policy.

Checkers and enforcement are pure functions. The estimators run simulator
rollouts, each on its own seeded stream, and reduce the results in a fixed
order.
"""

__all__ = ["Variant", "MetaGoalSpec", "Snapshot", "GoalHistory",
           "ContractionReport", "DriftReport", "HybridPolicyState",
           "CONTRACTION_VARIANTS", "GLOBAL_VARIANTS",
           "check_goal_contraction", "check_dynamic_contraction", "enforce_contraction",
           "project_into_ball", "max_plausible_variation", "check_moderated_contraction",
           "moderate_variation", "check_drift_bounds", "global_modification_search",
           "modification_score", "hybrid_policy_step"]

from dataclasses import dataclass, replace
from enum import Enum
import logging
import math

import numpy as np

from .errors import ConfigError, HistoryError, ModeError, RangeError, SurrogateError
from .goalspace import (AugmentedState, GoalVector, MetricParams,
                        goal_distance, lift_metric, metric_distance, vector_distance, weighted_lp)
from .surrogate import SurrogateModel
from .utils import euclidean, make_rng

logger = logging.getLogger(__name__)

STATIONARY_TOL = 1e-12
SHRINK = 1.0 - 1e-9


class Variant(Enum):
    GoalStability = "GoalStability"
    GoalStabilityDynamicMeta = "GoalStabilityDynamicMeta"
    GoalStabilityDynamicMetric = "GoalStabilityDynamicMetric"
    ModeratedEvolution = "ModeratedEvolution"
    GlobalModerated = "GlobalModerated"
    GlobalModeratedDynamic = "GlobalModeratedDynamic"
    Hybrid = "Hybrid"
    Unconstrained = "Unconstrained"

    def __str__(self):
        return self.value


CONTRACTION_VARIANTS = frozenset({Variant.GoalStability, Variant.GoalStabilityDynamicMeta,
                                  Variant.GoalStabilityDynamicMetric})
DYNAMIC_VARIANTS = frozenset({Variant.GoalStabilityDynamicMeta, Variant.GoalStabilityDynamicMetric})
GLOBAL_VARIANTS = frozenset({Variant.GlobalModerated, Variant.GlobalModeratedDynamic})
META_MUTABLE = frozenset({Variant.GoalStabilityDynamicMeta, Variant.GoalStabilityDynamicMetric,
                          Variant.GlobalModeratedDynamic, Variant.Unconstrained})
METRIC_MUTABLE = frozenset({Variant.GoalStabilityDynamicMetric, Variant.GlobalModeratedDynamic,
                            Variant.Unconstrained})


# --------------------------------------------------------------------------------
# Metagoal constants

@dataclass(frozen=True)
class MetaGoalSpec:
    """Which metagoal the agent holds, and its constants.

    `c`: contraction factor in (0, 1).
    `inner_interval`: N, steps between goal snapshots.
    `interval_ratio`: M / N; the outer interval is `M = interval_ratio * N`.
    `target_variation`: m_M, target for the maximum plausible variation (moderated evolution).
    `drift_bound`, `meta_drift_bound`, `metric_drift_bound`: k, k1, k2 (global variants).
    `horizon`: K, in steps; the look-ahead of the plausible-variation estimate.
    """
    variant: Variant = Variant.GoalStability
    c: float = 0.5
    inner_interval: int = 1
    interval_ratio: int = 2
    target_variation: float = 0.0
    drift_bound: float = 0.1
    meta_drift_bound: float = 0.1
    metric_drift_bound: float = 0.1
    horizon: int = 4

    def __post_init__(self):
        if not isinstance(self.variant, Variant):
            try:
                object.__setattr__(self, "variant", Variant(self.variant))
            except ValueError:
                raise ConfigError([f"unknown metagoal variant {self.variant!r}; "
                                   f"expected one of {[v.value for v in Variant]}"])
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self):
        out = []
        if not 0.0 < self.c < 1.0:
            out.append(f"contraction factor c must lie in (0, 1), got {self.c!r}")
        for name in ("inner_interval", "interval_ratio", "horizon"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                out.append(f"{name} must be a positive integer, got {value!r}")
        for name in ("target_variation", "drift_bound", "meta_drift_bound", "metric_drift_bound"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value >= 0.0 and math.isfinite(value)):
                out.append(f"{name} must be a finite nonnegative real, got {value!r}")
        if (self.variant in GLOBAL_VARIANTS or self.variant is Variant.Hybrid) and not out:
            if not self.horizon > self.inner_interval:
                out.append(f"global variants need horizon K > N, got K={self.horizon}, N={self.inner_interval}")
        return out

    @property
    def outer_interval(self):
        return self.inner_interval * self.interval_ratio

    def params_vector(self):
        """The numeric fields `(c, N, M, m_M, k, k1, k2, K)` as a flat tuple."""
        return (float(self.c), float(self.inner_interval), float(self.outer_interval),
                float(self.target_variation), float(self.drift_bound), float(self.meta_drift_bound),
                float(self.metric_drift_bound), float(self.horizon))

    def with_variant(self, variant):
        return replace(self, variant=Variant(variant))


# --------------------------------------------------------------------------------
# History

@dataclass(frozen=True)
class Snapshot:
    """The goal system at one N-step boundary."""
    step: int
    goals: GoalVector
    metagoal_params: tuple
    metric: MetricParams

    @classmethod
    def of(cls, step, state):
        return cls(step, state.goals, state.metagoal_params, state.metric_params)


@dataclass(frozen=True)
class GoalHistory:
    """The last `capacity` snapshots, with step indices spaced exactly by `spacing`.

    Immutable; `push` returns a new history.
    """
    snapshots: tuple = ()
    spacing: int = 1
    capacity: int = 8

    def __post_init__(self):
        if self.capacity < 3:
            raise ValueError(f"history capacity must be at least 3, got {self.capacity!r}")
        if self.spacing < 1:
            raise ValueError(f"history spacing must be at least 1, got {self.spacing!r}")
        snaps = tuple(self.snapshots)[-self.capacity:]
        for a, b in zip(snaps, snaps[1:]):
            if b.step - a.step != self.spacing:
                raise HistoryError(f"snapshot steps must be spaced by {self.spacing}, got {a.step} then {b.step}")
        object.__setattr__(self, "snapshots", snaps)

    def push(self, snapshot):
        return GoalHistory(self.snapshots + (snapshot,), self.spacing, self.capacity)

    def require(self, count):
        if len(self.snapshots) < count:
            raise HistoryError(f"need at least {count} snapshots, have {len(self.snapshots)}")

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, index):
        return self.snapshots[index]


def _contracts(new, prev, c):
    """The strict inequality `new < c * prev`, true in the stationary case."""
    if new <= STATIONARY_TOL and prev <= STATIONARY_TOL:
        return True
    return new < c * prev


# --------------------------------------------------------------------------------
# Goal-stability metagoals

def check_goal_contraction(h, spec, m):
    """Whether `d(G(t+N), G(t)) < c d(G(t), G(t-N))` under metric `m`, for the last three snapshots."""
    h.require(3)
    prev = goal_distance(h[-2].goals, h[-3].goals, m)
    new = goal_distance(h[-1].goals, h[-2].goals, m)
    return _contracts(new, prev, spec.c)


@dataclass(frozen=True)
class ContractionReport:
    """Per-component outcome of a dynamic contraction check.

    `metric` is `None` when the metric is not a tracked component.
    """
    goals: bool
    metagoal: bool
    metric: bool = None

    @property
    def overall(self):
        return all(v for v in self.entries().values())

    def entries(self):
        out = {"goals": self.goals, "metagoal": self.metagoal}
        if self.metric is not None:
            out["metric"] = self.metric
        return out

    def __len__(self):
        return len(self.entries())

    def as_dict(self):
        return {**self.entries(), "overall": self.overall}


def _component_metrics(h, spec, base):
    """Metrics measuring goals, metagoal parameters and flat metrics, per the variant."""
    n = h[-1].goals.dim
    k = len(h[-1].metagoal_params)
    if spec.variant is Variant.GoalStabilityDynamicMetric:
        dt = h[-2].metric  # d(t): the metric in force at the older snapshot of the step
        return lift_metric(dt, n), lift_metric(dt, k), lift_metric(dt, n + 1)
    return lift_metric(base, n), MetricParams.canonical(k, base.exponent), MetricParams.canonical(n + 1, base.exponent)


def check_dynamic_contraction(h, spec, base):
    """Contraction of goals and metagoal parameters (and of the metric, for the dynamic-metric variant).

    For `GoalStabilityDynamicMetric`, every component is measured with the
    metric of the older snapshot of the newest step, the metric `d(t)` in
    force when the step was taken. For `GoalStabilityDynamicMeta`, goals are
    measured with `base` and metagoal parameters with the canonical metric.
    """
    if spec.variant not in DYNAMIC_VARIANTS:
        raise ModeError(f"dynamic contraction applies to {sorted(v.value for v in DYNAMIC_VARIANTS)}, "
                        f"got {spec.variant.value}")
    h.require(3)
    mg, mm, mf = _component_metrics(h, spec, base)
    a, b, c = h[-3], h[-2], h[-1]
    goals = _contracts(goal_distance(c.goals, b.goals, mg), goal_distance(b.goals, a.goals, mg), spec.c)
    meta = _contracts(vector_distance(c.metagoal_params, b.metagoal_params, mm),
                      vector_distance(b.metagoal_params, a.metagoal_params, mm), spec.c)
    metric = None
    if spec.variant is Variant.GoalStabilityDynamicMetric:
        metric = _contracts(metric_distance(c.metric, b.metric, mf), metric_distance(b.metric, a.metric, mf), spec.c)
    return ContractionReport(goals, meta, metric)


def project_into_ball(center, proposal, radius, metric):
    """Pull `proposal` toward `center` until it lies strictly inside the `metric` ball of `radius`.

    Returns `proposal` unchanged if already inside; otherwise the point on the
    segment at distance `(1 - 1e-9) * radius` from `center`; for a zero
    radius, `center` itself.
    """
    center = np.asarray(center, dtype=float)
    proposal = np.asarray(proposal, dtype=float)
    w, p = metric.weight_array, metric.exponent

    def dist(x):
        return weighted_lp(x - center, w, p)

    d = dist(proposal)
    if d < radius:
        return proposal.copy()
    if radius <= 0.0:
        return center.copy()
    s = SHRINK * radius / d
    out = center + s * (proposal - center)
    # rounding in the line above can land a hair outside a very small ball
    for _ in range(60):
        if dist(out) < radius:
            return out
        s *= 0.5
        out = center + s * (proposal - center)
    return center.copy()


def enforce_contraction(proposed, h, spec, m):
    """Project the proposed goals so that the contraction inequality holds.

    The allowed ball is centered on the current goals `G(t)` (the newest
    snapshot of `h`) with radius `c d(G(t), G(t-N))` under `m`. A proposal
    inside is returned unchanged. If the previous step was zero, the goals
    stay frozen at `G(t)`.
    """
    h.require(2)
    current = h[-1].goals
    if not isinstance(proposed, GoalVector):
        proposed = GoalVector(tuple(np.asarray(proposed, dtype=float)), current.box)
    radius = spec.c * goal_distance(current, h[-2].goals, m)
    if radius <= 0.0:
        return current
    x = project_into_ball(current.array, proposed.array, radius, m)
    if np.array_equal(x, proposed.array):
        return proposed
    return current.moved_to(x)


# --------------------------------------------------------------------------------
# Moderated goal evolution

def _max_pairwise(points, m):
    best = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = max(best, goal_distance(points[i], points[j], m))
    return best


def max_plausible_variation(sim_cfg, state, horizon, ensemble, quantile, seed):
    """The `quantile` order statistic, over `ensemble` seeded rollouts, of the largest goal change.

    Each rollout runs `horizon` steps (rounded down to whole N-steps) from
    `state` (an `AugmentedState` or a simulator `Agent`); its variation is the
    largest pairwise goal distance among its snapshots, start included,
    measured by the state's own metric. Rollout `e` uses the stream
    `(seed, e)`, so results grow monotonically with `horizon` and `quantile`.
    """
    from . import simulator
    if ensemble < 1:
        raise ValueError(f"`ensemble` must be at least 1, got {ensemble!r}")
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"`quantile` must lie in (0, 1], got {quantile!r}")
    agent = simulator.as_agent(sim_cfg, state)
    steps = horizon // sim_cfg.timing[0]
    m = agent.state.metric_params
    variations = []
    for e in range(ensemble):
        rng = make_rng(seed, e)
        path = simulator.rollout(sim_cfg, agent, steps, rng)
        points = [agent.state.goals.array] + [a.state.goals.array for a in path]
        variations.append(_max_pairwise(points, m))
    variations.sort()
    return float(variations[max(0, math.ceil(quantile * ensemble) - 1)])


def check_moderated_contraction(mpv_now, mpv_prev, spec):
    """Whether `|mpv_now - m_M| < c |mpv_prev - m_M|` (true when both gaps vanish)."""
    target = spec.target_variation
    return _contracts(abs(mpv_now - target), abs(mpv_prev - target), spec.c)


def moderate_variation(sim_cfg, agent, mpv_prev, seed, iterations=40):
    """Choose the step scale whose plausible variation is `m_M + 0.9 c (mpv_prev - m_M)`.

    Bisects the step scale over `[0, diameter of the goal box]`, estimating
    each trial with the same seeded ensemble. Returns `(agent with the chosen
    step scale, achieved plausible variation)`.
    """
    from . import simulator
    spec = sim_cfg.metagoal
    est = sim_cfg.estimation
    target = spec.target_variation + 0.9 * spec.c * (mpv_prev - spec.target_variation)

    def mpv_at(s):
        trial = simulator.with_step_scale(agent, s)
        return max_plausible_variation(sim_cfg, trial, spec.horizon, est.mpv_ensemble, est.mpv_quantile, seed)

    lo, hi = 0.0, sim_cfg.domain.diameter
    best_s, best_v = agent.state.step_scale, mpv_prev
    best_gap = abs(best_v - target)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        v = mpv_at(mid)
        gap = abs(v - target)
        if gap < best_gap:
            best_s, best_v, best_gap = mid, v, gap
        if gap <= 1e-9 * max(1.0, target):
            break
        if v > target:
            hi = mid
        else:
            lo = mid
    logger.debug(f"moderate_variation: target {target:.4g}, step scale {best_s:.4g}, mpv {best_v:.4g}")
    return simulator.with_step_scale(agent, best_s), best_v


# --------------------------------------------------------------------------------
# Global-optimization metagoals

@dataclass(frozen=True)
class DriftReport:
    """Per-component outcome of a drift-bound check. Unchecked components are `None`."""
    goals: bool
    metagoal: bool = None
    metric: bool = None

    @property
    def overall(self):
        return all(v for v in self.entries().values())

    def entries(self):
        out = {"goals": self.goals}
        if self.metagoal is not None:
            out["metagoal"] = self.metagoal
        if self.metric is not None:
            out["metric"] = self.metric
        return out

    def as_dict(self):
        return {**self.entries(), "overall": self.overall}


def check_drift_bounds(h, spec, m):
    """Whether the newest step kept within the drift bounds (boundaries inclusive).

    Goals must move at most `k`; for `GlobalModeratedDynamic`, metagoal
    parameters at most `k1` and the metric at most `k2`. All distances are
    measured by `m`, lifted to the component's length where needed.
    """
    if spec.variant not in GLOBAL_VARIANTS:
        raise ModeError(f"drift bounds apply to {sorted(v.value for v in GLOBAL_VARIANTS)}, got {spec.variant.value}")
    h.require(2)
    a, b = h[-2], h[-1]
    goals = goal_distance(b.goals, a.goals, m) <= spec.drift_bound
    if spec.variant is not Variant.GlobalModeratedDynamic:
        return DriftReport(goals)
    meta = vector_distance(b.metagoal_params, a.metagoal_params, m) <= spec.meta_drift_bound
    metric = metric_distance(b.metric, a.metric, m) <= spec.metric_drift_bound
    return DriftReport(goals, meta, metric)


def _drift_ok(current, candidate, spec):
    h = GoalHistory((Snapshot.of(0, current), Snapshot.of(1, candidate)), spacing=1, capacity=3)
    return check_drift_bounds(h, spec, current.metric_params).overall


def modification_score(sim_cfg, current, candidate, seed, rollouts=None):
    """Score a candidate self-modification: mean base objective over short passive rollouts.

    Returns `(objective, displacement)`: the mean objective value along
    `search.rollout_steps` N-steps from `candidate`, averaged over rollouts on
    the shared streams `(seed, r)`, and the mean distance the goals travel.
    `current` supplies the history and clock of the agent being modified.
    """
    from . import simulator
    rollouts = rollouts or sim_cfg.search.rollouts
    agent = simulator.as_agent(sim_cfg, current).with_state(candidate)
    objective = sim_cfg.objective
    values = []
    moves = []
    for r in range(rollouts):
        path = simulator.rollout(sim_cfg, agent, sim_cfg.search.rollout_steps, make_rng(seed, r), filtered=False)
        values.append(np.mean([objective.value(a.state.theta, a.step) for a in path]))
        moves.append(euclidean(path[-1].state.goals.array - candidate.goals.array))
    return float(np.mean(values)), float(np.mean(moves))


def _truncate(center, target, radius, metric):
    # strictly inside, so that rounding cannot push past the inclusive bound
    return project_into_ball(center, target, SHRINK * radius, metric)


def _candidate_states(sim_cfg, state, spec, count, rng, proposal, include_null, t):
    """The candidate pool: null, proposal, greedy, then uniform samples from the drift ball."""
    s = state
    m = s.metric_params
    n = s.goals.dim
    euclid = MetricParams.canonical(n)
    radius = sim_cfg.search.search_radius
    dynamic = spec.variant is Variant.GlobalModeratedDynamic
    pool = []
    if include_null:
        pool.append(s)
    if proposal is not None:
        pool.append(proposal)
    optimum = sim_cfg.objective.optimum(s.theta, t)
    greedy_goals = _truncate(s.goals.array, optimum, spec.drift_bound, m)
    greedy_theta = _truncate(s.theta, optimum, radius, euclid)
    pool.append(_assemble(s, greedy_goals, greedy_theta))
    while len(pool) < count:
        goals = s.goals.array + _ball_sample(rng, n, spec.drift_bound, m)
        theta = s.theta + _ball_sample(rng, n, radius, euclid)
        meta, metric = None, None
        if dynamic:
            k = len(s.metagoal_params)
            meta = np.asarray(s.metagoal_params) + _ball_sample(rng, k, spec.meta_drift_bound,
                                                               lift_metric(m, k))
            flat = s.metric_params.flat()
            flat = flat + _ball_sample(rng, n + 1, spec.metric_drift_bound, lift_metric(m, n + 1))
            flat[:-1] = np.clip(flat[:-1], 0.0, None)
            if np.any(flat[:-1] > 0.0):
                metric = MetricParams.from_flat(flat)
        pool.append(_assemble(s, goals, theta, meta, metric))
    return pool[:count]


def _ball_sample(rng, dim, radius, metric):
    """A uniform-radius sample from the `metric` ball (direction uniform in Euclidean terms)."""
    direction = rng.standard_normal(dim)
    u = rng.random()
    if radius <= 0.0:
        return np.zeros(dim)
    norm = weighted_lp(direction, metric.weight_array, metric.exponent)
    if norm == 0.0:
        return np.zeros(dim)
    return direction / norm * (SHRINK * radius * u ** (1.0 / dim))


def _assemble(s, goals, theta, meta=None, metric=None):
    internal = tuple(s.goals.box.clamp(theta)) + tuple(s.internal_params[s.goals.dim:])
    return AugmentedState(goals=s.goals.moved_to(goals),
                          metagoal_params=tuple(meta) if meta is not None else s.metagoal_params,
                          metric_params=metric if metric is not None else s.metric_params,
                          internal_params=internal)


def _search(sim_cfg, state, spec, candidates, seed, proposal=None, include_null=True):
    """`global_modification_search`, also returning the number of rollouts spent."""
    from . import simulator
    if spec.variant not in GLOBAL_VARIANTS:
        raise ModeError(f"global modification search applies to global variants, got {spec.variant.value}")
    if candidates < 1:
        raise ValueError(f"`candidates` must be at least 1, got {candidates!r}")
    agent = simulator.as_agent(sim_cfg, state)
    current = agent.state
    search = sim_cfg.search
    rng = make_rng(seed)
    pool = _candidate_states(sim_cfg, current, spec, candidates, rng, proposal, include_null, agent.step)
    pool = [c for c in pool if _drift_ok(current, c, spec)]
    if not pool:
        logger.info("global modification search: no candidate within the drift bounds; keeping the current state")
        return current, 0
    score_seed = int(rng.integers(0, 2 ** 31))

    def score(c):
        value, move = modification_score(sim_cfg, agent, c, score_seed)
        return value, move

    n = current.goals.dim
    scored = []
    for c in pool:
        value, move = score(c)
        scored.append([c, value, move])
    spent = len(pool) * search.rollouts

    def vec(c):
        return np.concatenate([c.goals.array - current.goals.array, c.theta - current.theta])

    # Surrogate over the candidate space: predicts the objective and the goal displacement.
    for _ in range(search.refine_rounds):
        if len(scored) < 2 * n + 1:
            break
        X = np.array([vec(c) for c, _, _ in scored])
        Y = np.array([[v, mv] for _, v, mv in scored])
        try:
            model = SurrogateModel(X, Y)
        except (SurrogateError, ValueError) as err:  # degenerate candidate sets: skip refinement
            logger.debug(f"global modification search: surrogate refinement skipped: {err}")
            break

        def predicted(x):
            v, mv = model.predict(x)
            return v + search.residual_weight * mv

        start = min(scored, key=lambda e: e[1] + search.residual_weight * e[2])[0]
        x = vec(start)
        step = np.full(len(x), search.search_radius / 4.0)
        px = predicted(x)
        for _sweep in range(20):
            improved = False
            for i in range(len(x)):
                for sign in (1.0, -1.0):
                    y = x.copy()
                    y[i] += sign * step[i]
                    py = predicted(y)
                    if py < px:
                        x, px, improved = y, py, True
                        break
            if not improved:
                step = step / 2.0
        goals = _truncate(current.goals.array, current.goals.array + x[:n], spec.drift_bound, current.metric_params)
        theta = _truncate(current.theta, current.theta + x[n:], search.search_radius, MetricParams.canonical(n))
        refined = _assemble(start, goals, theta)
        if not _drift_ok(current, refined, spec):
            break
        if any(np.array_equal(vec(refined), vec(c)) for c, _, _ in scored):
            break
        value, move = score(refined)  # verify by a true rollout
        spent += search.rollouts
        scored.append([refined, value, move])

    best = min(scored, key=lambda e: (e[1] + search.residual_weight * e[2]))
    return best[0], spent


def global_modification_search(sim_cfg, state, spec, candidates, seed, proposal=None, include_null=True):
    """Pick the best self-modification within the drift bounds by simulating the candidates.

    Candidates, in order: the null modification, the agent's own `proposal`
    (if any, as proposed), the greedy modification (goals and behaviour
    moved toward the objective optimum, truncated to the bounds), then
    modifications drawn uniformly from the drift balls (goals within `k`,
    behaviour within `search.search_radius`, and for the dynamic variant,
    metagoal parameters within `k1` and metric within `k2`). The first
    `candidates` of these are used.

    Each candidate is scored by short passive rollouts on shared streams:
    mean objective value plus `search.residual_weight` times the goal
    displacement. A surrogate fitted over the candidate space then proposes
    `search.refine_rounds` further candidates by local minimization, each
    verified by a true rollout.

    Candidates violating `check_drift_bounds` are discarded; if none remain,
    returns `state` unchanged. `state` may be an `AugmentedState` or an `Agent`;
    always returns an `AugmentedState`.
    """
    return _search(sim_cfg, state, spec, candidates, seed, proposal, include_null)[0]


# --------------------------------------------------------------------------------
# Hybrid policy

@dataclass(frozen=True)
class HybridPolicyState:
    """State of the hybrid switching policy.

    `window` holds the most recent satisfaction values, at most `window_length`.
    """
    current_mode: Variant = Variant.GoalStability
    window: tuple = ()
    compactness_ok: bool = True
    continuity_ok: bool = True
    convexity_ok: bool = True
    survival_ok: bool = True
    budget_ok: bool = True
    theta_low: float = 0.25
    window_length: int = 20

    def __post_init__(self):
        object.__setattr__(self, "current_mode", Variant(self.current_mode))
        if self.current_mode is Variant.Hybrid:
            raise ModeError("the hybrid policy cannot switch into Hybrid itself")
        if self.window_length < 1:
            raise ValueError(f"`window_length` must be at least 1, got {self.window_length!r}")
        object.__setattr__(self, "window", tuple(self.window)[-self.window_length:])

    @property
    def flags(self):
        return {"compactness_ok": self.compactness_ok, "continuity_ok": self.continuity_ok,
                "convexity_ok": self.convexity_ok, "survival_ok": self.survival_ok,
                "budget_ok": self.budget_ok}

    def with_flags(self, **flags):
        return replace(self, **flags)


def hybrid_policy_step(ps, new_satisfaction):
    """Push a satisfaction value and pick the next mode.

    Rules, in priority order:

      1. survival at stake: `Unconstrained`;
      2. the window is full and its mean is below `theta_low`: `ModeratedEvolution`;
      3. compactness, continuity, convexity and budget all fine: `GlobalModeratedDynamic`;
      4. budget fine: `GoalStabilityDynamicMeta`;
      5. otherwise `GoalStability`.
    """
    s = float(new_satisfaction)
    if not 0.0 <= s <= 1.0:
        raise RangeError(f"satisfaction must lie in [0, 1], got {new_satisfaction!r}")
    window = (ps.window + (s,))[-ps.window_length:]
    if not ps.survival_ok:
        mode = Variant.Unconstrained
    elif len(window) == ps.window_length and float(np.mean(window)) < ps.theta_low:
        mode = Variant.ModeratedEvolution
    elif ps.compactness_ok and ps.continuity_ok and ps.convexity_ok and ps.budget_ok:
        mode = Variant.GlobalModeratedDynamic
    elif ps.budget_ok:
        mode = Variant.GoalStabilityDynamicMeta
    else:
        mode = Variant.GoalStability
    if mode is not ps.current_mode:
        logger.info(f"hybrid policy: {ps.current_mode.value} -> {mode.value}")
    return replace(ps, current_mode=mode, window=window)
