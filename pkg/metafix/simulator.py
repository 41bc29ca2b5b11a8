# -*- coding: utf-8; -*-
"""The self-modifying agent loop, its state distributions, and the interval operator.

One call to `step_interval` advances an agent by N steps: it pursues its
goals, suffers an environment disturbance, proposes a self-modification,
and filters that proposal through its metagoal. `estimate_R` bins rollouts
of one outer interval (M steps) into the goal grid; `realize_F` and
`build_kernel` turn the same per-cell rollouts into the interval operator
`F(R(t)) = R(t+M)`, as a map on distributions or as a `MarkovKernel`.

Randomness: every rollout draws from its own seeded stream, so results do
not depend on thread scheduling (see `metafix.utils.parallel_map`).
"""

__all__ = ["Agent", "IntervalMetrics", "TrajectoryRecord",
           "initial_state", "fresh_agent", "as_agent", "with_step_scale",
           "step_interval", "rollout", "estimate_R", "realize_F", "build_kernel",
           "run_scenario", "iterate_F"]

from dataclasses import dataclass, replace
import logging

import numpy as np

from .errors import GridError, SizeError
from .goalspace import (AugmentedState, DiscreteDistribution, GoalVector, MetricParams, lift_metric, metric_distance,
                        goal_distance, total_variation, vector_distance, wasserstein1)
from .config import MAX_GRID_CELLS
from .markov import MarkovKernel
from .metagoal import (CONTRACTION_VARIANTS, DYNAMIC_VARIANTS, GLOBAL_VARIANTS, META_MUTABLE, METRIC_MUTABLE,
                       GoalHistory, HybridPolicyState, Snapshot, Variant,
                       _search, check_drift_bounds, check_dynamic_contraction, check_goal_contraction,
                       check_moderated_contraction, enforce_contraction, hybrid_policy_step,
                       max_plausible_variation, moderate_variation, project_into_ball)
from .utils import make_rng, parallel_map, unit

logger = logging.getLogger(__name__)

HISTORY_CAPACITY = 8
HEAVY_TAIL_DOF = 2
GAUSSIAN_TRUNCATION = 3.0
HEAVY_TAIL_TRUNCATION = 20.0


# --------------------------------------------------------------------------------
# The agent

@dataclass(frozen=True)
class Agent:
    """An augmented state together with its goal history, clock, active mode and search spend.

    `step` is the tick count `t`. `evaluations` counts the true rollouts spent
    by the global self-modification search so far.
    """
    state: AugmentedState
    history: GoalHistory
    step: int = 0
    mode: Variant = Variant.GoalStability
    evaluations: int = 0

    def with_state(self, state):
        """The same agent (history, clock, mode), with its current state replaced."""
        return replace(self, state=state)


def initial_state(cfg, goals=None, theta=None):
    """The configured start state. `goals` and `theta` override the configured start points."""
    box = cfg.domain
    n = cfg.goal_dim
    if goals is None:
        goals = cfg.goals.initial if cfg.goals.initial is not None else tuple(box.center)
    internal = cfg.agent.initial_internal
    if internal is None:
        internal = tuple(goals) + (cfg.goals.initial_step,)
    if theta is not None:
        internal = tuple(np.asarray(theta, dtype=float)) + tuple(internal[n:])
    internal = tuple(box.clamp(np.asarray(internal[:n], dtype=float))) + (max(0.0, float(internal[n])),)
    return AugmentedState(goals=GoalVector(tuple(goals), box),
                          metagoal_params=cfg.metagoal.params_vector(),
                          metric_params=cfg.initial_metric,
                          internal_params=internal)


def _initial_mode(cfg):
    spec = cfg.metagoal
    if spec.variant is Variant.Hybrid:
        return Variant(cfg.hybrid.initial_mode)
    return spec.variant


def fresh_agent(cfg, state=None, step=0):
    """Wrap `state` (default: the configured start) as an agent with a seeded two-snapshot history.

    The older snapshot sits `initial_step` away from the start goals along the
    first axis (toward the box interior), so that the first allowed
    contraction step is `c * initial_step`.
    """
    state = state if state is not None else initial_state(cfg)
    N = cfg.timing[0]
    g = state.goals.array
    box = state.goals.box
    offset = np.zeros_like(g)
    offset[0] = cfg.goals.initial_step
    older = g + offset if g[0] + offset[0] <= box.hi[0] else g - offset
    # the metagoal parameters and metric get the same seeded displacement on their first component
    meta = np.asarray(state.metagoal_params, dtype=float)
    meta[0] += cfg.goals.initial_step
    weights = state.metric_params.weight_array
    weights[0] += cfg.goals.initial_step
    before = Snapshot(step - N, state.goals.moved_to(older), tuple(meta),
                      MetricParams(tuple(weights), state.metric_params.exponent))
    history = GoalHistory((before, Snapshot.of(step, state)), spacing=N, capacity=HISTORY_CAPACITY)
    return Agent(state, history, step, _initial_mode(cfg))


def as_agent(cfg, state):
    """Return `state` if it already is an `Agent`; otherwise wrap it with `fresh_agent`."""
    if isinstance(state, Agent):
        return state
    return fresh_agent(cfg, state)


def with_step_scale(agent, s):
    """The agent with its moderated-evolution step scale set to `s`."""
    st = agent.state
    n = st.goals.dim
    internal = tuple(st.internal_params[:n]) + (float(s),) + tuple(st.internal_params[n + 1:])
    return agent.with_state(st.replace(internal_params=internal))


# --------------------------------------------------------------------------------
# One N-step

@dataclass(frozen=True)
class _Draws:
    """All random numbers of one N-step. Always drawn in full, so streams stay aligned across configs."""
    noise: np.ndarray
    jump: bool
    jump_to: np.ndarray
    proposal: np.ndarray
    meta: np.ndarray
    metric: np.ndarray
    search_seed: int


def _draw(cfg, state, rng):
    env = cfg.environment
    n = state.goals.dim
    box = state.goals.box
    sigma = env.noise_sigma
    if env.noise == "binary":
        noise = sigma * (2.0 * rng.integers(0, 2, size=n) - 1.0)
    elif env.noise == "heavy_tail":
        noise = sigma * np.clip(rng.standard_t(HEAVY_TAIL_DOF, size=n), -HEAVY_TAIL_TRUNCATION, HEAVY_TAIL_TRUNCATION)
    else:
        noise = sigma * np.clip(rng.standard_normal(n), -GAUSSIAN_TRUNCATION, GAUSSIAN_TRUNCATION)
    u = rng.random()
    jump_to = rng.uniform(box.lo_array, box.hi_array)
    return _Draws(noise=noise,
                  jump=(env.noise == "resample" and u < sigma),
                  jump_to=jump_to,
                  proposal=rng.standard_normal(n),
                  meta=rng.standard_normal(len(state.metagoal_params)),
                  metric=rng.standard_normal(n),
                  search_seed=int(rng.integers(0, 2 ** 31)))


def _disturb(cfg, goals, draws, factor):
    """Apply the fraction `factor` of the environment disturbance to goal coordinates `goals`."""
    if cfg.environment.noise == "resample":
        if not draws.jump:
            return goals
        return goals + factor * (draws.jump_to - goals)
    return goals + factor * draws.noise


def _goal_delta(cfg, state, draws, mode, t):
    a = cfg.agent
    g = state.goals.array
    raw = a.adapt_gain * (cfg.objective.optimum(g, t) - g) + a.proposal_sigma * draws.proposal
    if mode is not Variant.ModeratedEvolution:
        return raw
    direction = unit(raw)
    if not np.any(direction):
        # no preferred direction: step along the first axis, toward the box interior
        direction = np.zeros_like(g)
        direction[0] = 1.0 if g[0] <= state.goals.box.center[0] else -1.0
    return state.step_scale * direction


def _proposed_metric(cfg, state, draws):
    w = state.metric_params.weight_array + cfg.agent.metric_sigma * draws.metric
    w = np.clip(w, 1e-6, None)
    return MetricParams(tuple(w), state.metric_params.exponent).normalized()


def step_interval(agent, cfg, rng, filtered=True):
    """Advance by one N-step. Accepts an `Agent` or an `AugmentedState`; returns the same kind.

    With `filtered=False` the agent makes no self-modification: its goals
    only receive the unfiltered part of the disturbance (used for passive
    rollouts when scoring candidate modifications).
    """
    if not isinstance(agent, Agent):
        return step_interval(fresh_agent(cfg, agent), cfg, rng, filtered).state
    s = agent.state
    t = agent.step
    N = cfg.timing[0]
    rho = cfg.modification_rate
    mode = agent.mode
    spec = cfg.metagoal.with_variant(mode)
    box = s.goals.box
    draws = _draw(cfg, s, rng)

    # (1) pursuit: the behaviour point moves toward the goal point
    theta = s.theta + (1.0 - rho) * cfg.agent.pursuit_gain * (s.goals.array - s.theta)
    internal = tuple(box.clamp(theta)) + tuple(s.internal_params[s.goals.dim:])
    s = s.replace(internal_params=internal)

    evaluations = agent.evaluations
    if not filtered:
        goals = _disturb(cfg, s.goals.array, draws, 1.0 - rho)
        new = s.replace(goals=s.goals.moved_to(goals))
    else:
        # proposal
        proposed_goals = s.goals.moved_to(s.goals.array + _goal_delta(cfg, s, draws, mode, t))
        meta = np.asarray(s.metagoal_params)
        if mode in META_MUTABLE:
            meta = meta + cfg.agent.meta_sigma * draws.meta
        metric = _proposed_metric(cfg, s, draws) if mode in METRIC_MUTABLE else s.metric_params

        # filter, then the disturbance left over after the metagoal effort
        h = agent.history
        if mode in CONTRACTION_VARIANTS:
            new = _enforce(s, h, spec, proposed_goals, meta, metric)
            goals = _disturb(cfg, new.goals.array, draws, 1.0 - rho)
            new = new.replace(goals=new.goals.moved_to(goals))
        elif mode in GLOBAL_VARIANTS:
            proposal = s.replace(goals=proposed_goals, metagoal_params=tuple(meta), metric_params=metric)
            here = agent.with_state(s)
            new, spent = _search(cfg, here, spec, cfg.search.candidates, draws.search_seed, proposal=proposal)
            evaluations += spent
            goals = _disturb(cfg, new.goals.array, draws, 1.0 - rho)
            new = new.replace(goals=new.goals.moved_to(goals))
        else:  # Unconstrained, ModeratedEvolution
            goals = _disturb(cfg, proposed_goals.array, draws, 1.0)
            new = s.replace(goals=proposed_goals.moved_to(goals), metagoal_params=tuple(meta), metric_params=metric)

    history = agent.history.push(Snapshot.of(t + N, new))
    return Agent(new, history, t + N, agent.mode, evaluations)


def _enforce(s, h, spec, proposed_goals, meta, metric):
    """Project every mutable component so that the contraction inequality holds."""
    n = s.goals.dim
    if spec.variant is Variant.GoalStabilityDynamicMetric:
        dt = h[-1].metric
        goals_metric, meta_metric, flat_metric = lift_metric(dt, n), lift_metric(dt, len(meta)), lift_metric(dt, n + 1)
    else:
        base = s.metric_params
        goals_metric = base
        meta_metric = MetricParams.canonical(len(meta), base.exponent)
        flat_metric = MetricParams.canonical(n + 1, base.exponent)
    goals = enforce_contraction(proposed_goals, h, spec, goals_metric)
    new_meta = s.metagoal_params
    if spec.variant in DYNAMIC_VARIANTS:
        radius = spec.c * vector_distance(h[-1].metagoal_params, h[-2].metagoal_params, meta_metric)
        new_meta = tuple(project_into_ball(h[-1].metagoal_params, meta, radius, meta_metric))
    new_metric = s.metric_params
    if spec.variant is Variant.GoalStabilityDynamicMetric:
        radius = spec.c * metric_distance(h[-1].metric, h[-2].metric, flat_metric)
        flat = project_into_ball(h[-1].metric.flat(), metric.flat(), radius, flat_metric)
        new_metric = MetricParams.from_flat(flat)
    return s.replace(goals=goals, metagoal_params=new_meta, metric_params=new_metric)


def rollout(cfg, agent, steps, rng, filtered=True):
    """Chain `steps` N-steps from `agent` on the stream `rng`. Returns the agents after each step."""
    agent = as_agent(cfg, agent)
    path = []
    for _ in range(steps):
        agent = step_interval(agent, cfg, rng, filtered)
        path.append(agent)
    return path


# --------------------------------------------------------------------------------
# Distributions and the interval operator

def _occupancy(cfg, agent, rngs):
    """Counts of goal cells at ticks `t+N, ..., t+M`, over one rollout per stream."""
    grid = cfg.grid
    steps = cfg.steps_per_interval

    def one(rng):
        path = rollout(cfg, agent, steps, rng)
        return grid.locate(np.array([a.state.goals.array for a in path]))

    counts = np.zeros(grid.size)
    for cells in parallel_map(one, rngs):
        np.add.at(counts, cells, 1.0)
    return counts


def estimate_R(cfg, state, samples, rng):
    """The goal distribution during the next outer interval, from `samples` rollouts.

    Occupancy-weighted: every N-boundary after the start, up to and
    including `t+M`, contributes one count. `state` may be an `Agent`.
    """
    if samples < 1:
        raise ValueError(f"`samples` must be at least 1, got {samples!r}")
    counts = _occupancy(cfg, as_agent(cfg, state), rng.spawn(samples))
    return DiscreteDistribution.from_counts(counts, cfg.grid)


def _check_grid_size(cfg):
    if cfg.grid.size > MAX_GRID_CELLS:
        raise SizeError(f"grid has {cfg.grid.size} cells, cap is {MAX_GRID_CELLS}")


def _cell_row(cfg, cell, samples_per_cell, seed):
    """Normalized occupancy of rollouts from the center of `cell`, on the streams `(seed, cell, r)`."""
    center = cfg.grid.centers[cell]
    agent = fresh_agent(cfg, initial_state(cfg, goals=center, theta=center))
    rngs = [make_rng(seed, cell, r) for r in range(samples_per_cell)]
    counts = _occupancy(cfg, agent, rngs)
    return counts / counts.sum()


def realize_F(cfg, R, samples_per_cell, seed, rows=None):
    """Push the distribution `R` through one outer interval of the dynamics.

    For each cell with positive mass, rollouts start from the cell center;
    their occupancy, weighted by the cell's mass, is accumulated. The
    per-cell streams depend only on `(seed, cell)`, so this is exactly
    `R` pushed through `build_kernel(cfg, samples_per_cell, seed)`.

    `rows`, if given, is a dict used as a cache of computed cell rows.
    """
    _check_grid_size(cfg)
    if R.grid != cfg.grid:
        raise GridError("distribution does not live on the scenario's grid")
    rows = {} if rows is None else rows
    out = np.zeros(cfg.grid.size)
    for cell in map(int, R.support):
        if cell not in rows:
            rows[cell] = _cell_row(cfg, cell, samples_per_cell, seed)
        out += R.probs[cell] * rows[cell]
    return DiscreteDistribution.from_counts(out, cfg.grid)


def build_kernel(cfg, samples_per_cell, seed):
    """The empirical Markov kernel of the interval operator: row `i` from rollouts out of cell `i`."""
    _check_grid_size(cfg)
    cells = range(cfg.grid.size)
    rows = [_cell_row(cfg, i, samples_per_cell, seed) for i in cells]
    logger.debug(f"build_kernel: {cfg.grid.size} rows, {samples_per_cell} rollouts each")
    return MarkovKernel(np.array(rows), cfg.grid)


def iterate_F(cfg, R0, steps, samples_per_cell, seed, tol=None):
    """Iterate the realized interval operator from `R0`.

    Returns `(iterates, residuals)`: the distributions `R0, F(R0), ...` and the
    TV distances between successive iterates. Stops early once a residual
    drops below `tol`.
    """
    rows = {}
    iterates = [R0]
    residuals = []
    for _ in range(steps):
        nxt = realize_F(cfg, iterates[-1], samples_per_cell, seed, rows=rows)
        residuals.append(total_variation(nxt, iterates[-1]))
        iterates.append(nxt)
        if tol is not None and residuals[-1] < tol:
            break
    return iterates, residuals


# --------------------------------------------------------------------------------
# Full runs

@dataclass(frozen=True)
class IntervalMetrics:
    """What `run_scenario` records about one outer interval.

    `checks` maps check names to booleans, plus `"overall"`; empty when the
    active mode has no checkable condition. `mpv` is the plausible variation
    chosen by the moderated-evolution controller, if it ran.
    """
    index: int
    mode: str
    goal_step: float
    satisfaction: float
    checks: tuple
    residual_w1: float
    residual_tv: float
    mpv: float = None
    evaluations: int = 0

    @property
    def check_dict(self):
        return dict(self.checks)


@dataclass(frozen=True)
class TrajectoryRecord:
    """A full scenario run.

    `snapshots`: the augmented state at every N-boundary, start included.
    `distributions`: `R(0), R(M), ...`, one more than there are intervals.
    `starts`: the agent state at the start of each interval.
    `transitions`: `(start goals, end goals)` per interval.
    """
    variant: Variant
    timing: tuple
    snapshots: tuple
    distributions: tuple
    intervals: tuple
    starts: tuple
    transitions: tuple

    def __len__(self):
        return len(self.intervals)

    @property
    def residuals_tv(self):
        return tuple(m.residual_tv for m in self.intervals)

    @property
    def residuals_w1(self):
        return tuple(m.residual_w1 for m in self.intervals)


def _step_checks(agent, spec):
    """The condition checks of the active mode for the newest N-step, in the metric in force before it."""
    h = agent.history
    v = spec.variant
    m = h[-2].metric
    if v is Variant.GoalStability:
        return {"goals": check_goal_contraction(h, spec, m)}
    if v in DYNAMIC_VARIANTS:
        return check_dynamic_contraction(h, spec, m).entries()
    if v in GLOBAL_VARIANTS:
        return check_drift_bounds(h, spec, m).entries()
    return {}


def _merge_checks(acc, new):
    for key, value in new.items():
        acc[key] = acc.get(key, True) and bool(value)
    return acc


def run_scenario(cfg):
    """Simulate `cfg.intervals` outer intervals; deterministic given `cfg.seed`."""
    N, M, _ = cfg.timing
    steps = cfg.steps_per_interval
    est = cfg.estimation
    agent = fresh_agent(cfg)
    policy = None
    if cfg.metagoal.variant is Variant.Hybrid:
        policy = HybridPolicyState(current_mode=agent.mode, theta_low=cfg.hybrid.theta_low,
                                   window_length=cfg.hybrid.window, **cfg.hybrid.flags)
    snapshots = [agent.state]
    distributions = [estimate_R(cfg, agent, est.samples, make_rng(cfg.seed, 2, 0))]
    intervals, starts, transitions = [], [], []
    mpv_prev = None
    for j in range(cfg.intervals):
        rng = make_rng(cfg.seed, 1, j)
        spec = cfg.metagoal.with_variant(agent.mode)
        start = agent
        mpv = None
        checks = {}
        if agent.mode is Variant.ModeratedEvolution:
            if mpv_prev is None:
                mpv_prev = max_plausible_variation(cfg, agent, spec.horizon, est.mpv_ensemble,
                                                   est.mpv_quantile, cfg.seed)
            agent, mpv = moderate_variation(cfg, agent, mpv_prev, seed=cfg.seed + 1 + j)
            checks["moderated"] = check_moderated_contraction(mpv, mpv_prev, spec)
            mpv_prev = mpv
        else:
            mpv_prev = None
        satisfaction = []
        for _ in range(steps):
            agent = step_interval(agent, cfg, rng)
            snapshots.append(agent.state)
            satisfaction.append(cfg.objective.satisfaction(agent.state.theta, agent.step))
            _merge_checks(checks, _step_checks(agent, spec))
        if checks:
            checks["overall"] = all(checks.values())
        R = estimate_R(cfg, agent, est.samples, make_rng(cfg.seed, 2, j + 1))
        prev = distributions[-1]
        distributions.append(R)
        h = agent.history
        goal_step = goal_distance(h[-1].goals, h[-2].goals, h[-2].metric)
        sat = float(np.mean(satisfaction))
        intervals.append(IntervalMetrics(index=j, mode=agent.mode.value, goal_step=goal_step,
                                         satisfaction=sat, checks=tuple(checks.items()),
                                         residual_w1=wasserstein1(R, prev),
                                         residual_tv=total_variation(R, prev), mpv=mpv,
                                         evaluations=agent.evaluations))
        starts.append(start.state)
        transitions.append((start.state.goals.array.copy(), agent.state.goals.array.copy()))
        logger.debug(f"interval {j}: mode {agent.mode.value}, goal step {goal_step:.4g}, "
                     f"satisfaction {sat:.4g}, TV residual {intervals[-1].residual_tv:.4g}")
        if policy is not None:
            budget = cfg.hybrid.compute_budget
            if budget is not None and agent.evaluations > budget and policy.budget_ok:
                logger.info(f"hybrid: search budget of {budget} rollouts exhausted")
                policy = policy.with_flags(budget_ok=False)
            policy = hybrid_policy_step(policy, sat)
            if policy.current_mode is not agent.mode:
                agent = replace(agent, mode=policy.current_mode)
    return TrajectoryRecord(variant=cfg.metagoal.variant, timing=(N, M, cfg.intervals),
                            snapshots=tuple(snapshots), distributions=tuple(distributions),
                            intervals=tuple(intervals), starts=tuple(starts),
                            transitions=tuple(transitions))
