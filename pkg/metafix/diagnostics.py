# -*- coding: utf-8; -*-
"""Post-hoc analysis of scenario runs.

- `analyze` turns a `TrajectoryRecord` into a `ConvergenceReport`: the
  residual series `d(R(t+M), R(t))`, successive residual ratios (the
  empirical contraction factor), the tremor plateau, and the rate at which
  the active metagoal's condition failed.
- `expected_contraction_experiment` estimates the expected contraction
  factor of the interval operator directly, by pushing random pairs of
  distributions through its kernel.
- `self_model_accuracy` measures how well a surrogate fitted to the agent's
  own interval transitions predicts fresh rollouts.

Everything here is deterministic given its inputs and seed.
"""

__all__ = ["ConvergenceReport", "analyze", "analyze_series",
           "expected_contraction_experiment", "self_model_accuracy"]

from dataclasses import dataclass
import logging
import math

import numpy as np

from .errors import HistoryError, ModeError, SamplingError
from .goalspace import DiscreteDistribution, distribution_metric
from .metagoal import GLOBAL_VARIANTS
from .surrogate import SurrogateModel
from .utils import make_rng, parallel_map

logger = logging.getLogger(__name__)

MIN_INTERVALS = 4
ONSET_FACTOR = 2.0
DEGENERATE_DISTANCE = 1e-15


@dataclass(frozen=True)
class ConvergenceReport:
    """Summary of one run.

    `empirical_c_series[i]` is `residual[i] / residual[i-1]`, or `nan` where
    that ratio is undefined (the first entry, and wherever the previous
    residual is zero). Both series have one entry per interval.

    `condition_violation_rate` is the fraction of checked intervals in which
    the realized goal history failed the active metagoal's check. The
    environment disturbance is applied after the metagoal filter, so this
    measures the states the agent actually ended up in, not its filtered
    proposals (which satisfy the contraction variants by construction).
    Under noise, a contraction variant's steps shrink until they are as large
    as the disturbance; after that nearly every check fails and the rate
    approaches 1. Zero noise gives a rate of 0 for those variants.
    """
    residual_series: tuple
    empirical_c_series: tuple
    plateau_level: float
    plateau_onset: int
    condition_violation_rate: float
    metric_choice: str = "TV"

    @property
    def mean_empirical_c(self):
        """Mean of the defined contraction ratios; `nan` if there are none."""
        defined = [c for c in self.empirical_c_series if not math.isnan(c)]
        return float(np.mean(defined)) if defined else math.nan

    def as_dict(self):
        return {"metric": self.metric_choice,
                "plateau_level": self.plateau_level,
                "plateau_onset": self.plateau_onset,
                "condition_violation_rate": self.condition_violation_rate,
                "mean_empirical_c": self.mean_empirical_c,
                "residual_series": list(self.residual_series),
                "empirical_c_series": list(self.empirical_c_series)}


def analyze_series(residuals, violations=(), metric_choice="TV"):
    """Build a `ConvergenceReport` from a residual series.

    `violations` has one entry per interval: `True` if the active
    metagoal's check failed, `False` if it held, `None` if nothing was
    checked. The violation rate is over the checked intervals only.
    """
    r = [float(x) for x in residuals]
    if len(r) < MIN_INTERVALS:
        raise HistoryError(f"need at least {MIN_INTERVALS} intervals to analyze, got {len(r)}")
    ratios = [math.nan] + [(b / a if a > 0.0 else math.nan) for a, b in zip(r, r[1:])]
    quarter = max(1, len(r) // 4)
    plateau = float(np.median(r[-quarter:]))
    threshold = ONSET_FACTOR * plateau
    onset = len(r)
    for i in range(len(r) - 1, -1, -1):
        if r[i] > threshold:
            break
        onset = i
    checked = [v for v in violations if v is not None]
    rate = (sum(1 for v in checked if v) / len(checked)) if checked else 0.0
    return ConvergenceReport(tuple(r), tuple(ratios), plateau, onset, float(rate), metric_choice)


def analyze(traj, metric_choice="TV"):
    """Analyze a `TrajectoryRecord`. `metric_choice` picks the residual metric, `"TV"` or `"W1"`."""
    if metric_choice == "TV":
        residuals = traj.residuals_tv
    elif metric_choice == "W1":
        residuals = traj.residuals_w1
    else:
        raise ValueError(f"expected metric choice 'TV' or 'W1', got {metric_choice!r}")
    violations = []
    for m in traj.intervals:
        checks = m.check_dict
        violations.append(None if "overall" not in checks else not checks["overall"])
    return analyze_series(residuals, violations, metric_choice)


def expected_contraction_experiment(cfg, num_state_pairs, seed, metric_choice="TV", samples_per_cell=None):
    """Mean of `d(F(x), F(y)) / d(x, y)` over random pairs of distributions `x, y`.

    `F` is the realized interval operator; its per-cell rollouts are computed
    once, as a kernel, on the same streams `realize_F` uses. Pairs are drawn
    from a flat Dirichlet on the stream `(seed, 1)`. Pairs closer than `1e-15`
    are skipped; if all are, raises `SamplingError`.
    """
    from .simulator import build_kernel
    if num_state_pairs < 1:
        raise ValueError(f"`num_state_pairs` must be at least 1, got {num_state_pairs!r}")
    spc = samples_per_cell or cfg.estimation.samples_per_cell
    kernel = build_kernel(cfg, spc, seed)
    distance = distribution_metric(metric_choice)
    grid = cfg.grid
    rng = make_rng(seed, 1)
    ratios = []
    for _ in range(num_state_pairs):
        x = DiscreteDistribution(rng.dirichlet(np.ones(grid.size)), grid)
        y = DiscreteDistribution(rng.dirichlet(np.ones(grid.size)), grid)
        d = distance(x, y)
        if d <= DEGENERATE_DISTANCE:
            continue
        ratios.append(distance(kernel.push(x), kernel.push(y)) / d)
    if not ratios:
        raise SamplingError(f"all {num_state_pairs} sampled pairs were degenerate")
    logger.debug(f"expected_contraction_experiment: {len(ratios)} pairs, mean ratio {np.mean(ratios):.4g}")
    return float(np.mean(ratios))


def self_model_accuracy(cfg, traj, query_states, seed, strict=True, shuffle_labels=False, samples=None):
    """Normalized error of the agent's self-model of one outer interval; lower is better.

    The self-model is a `SurrogateModel` fitted to the recorded interval
    transitions `start goals -> end goals`. For each query (an interval start
    drawn on the stream `(seed, 0)`), the prediction is compared with the mean
    end goals of `samples` fresh one-interval rollouts from the recorded
    start state, at the recorded start time; the distance is divided by the
    domain diameter and the result averaged over queries. An empty self-model
    scores 1.

    `strict`: require a trajectory of a global-search variant (raises
    `ModeError` otherwise). `shuffle_labels`: fit the surrogate to permuted
    outputs, as a control.
    """
    from .simulator import fresh_agent, rollout
    if query_states < 1:
        raise ValueError(f"`query_states` must be at least 1, got {query_states!r}")
    if strict and traj.variant not in GLOBAL_VARIANTS:
        raise ModeError(f"self-model accuracy is defined for global-search trajectories, got {traj.variant.value}")
    if not traj.transitions:
        return 1.0
    X = np.array([a for a, _ in traj.transitions])
    Y = np.array([b for _, b in traj.transitions])
    if shuffle_labels:
        Y = Y[make_rng(seed, 1).permutation(len(Y))]
    model = SurrogateModel(X, Y)
    rng = make_rng(seed, 0)
    count = len(traj.starts)
    picks = rng.choice(count, size=query_states, replace=query_states > count)
    samples = samples or cfg.estimation.samples
    box = cfg.domain
    steps = cfg.steps_per_interval
    M = cfg.timing[1]

    def query_error(q):
        index, slot = q
        start = traj.starts[index]
        agent = fresh_agent(cfg, start, step=index * M)
        ends = [rollout(cfg, agent, steps, make_rng(seed, 2, slot, r))[-1].state.goals.array
                for r in range(samples)]
        truth = np.mean(ends, axis=0)
        predicted = box.clamp(model.predict(start.goals.array))
        return float(np.linalg.norm(predicted - truth) / box.diameter)

    errors = parallel_map(query_error, [(int(i), slot) for slot, i in enumerate(picks)])
    return float(min(1.0, np.mean(errors)))
