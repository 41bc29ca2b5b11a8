# -*- coding: utf-8; -*-
"""Goal space: domain types for goals, metrics and state distributions, and the distances between them.

All types here are immutable after construction, and all distance functions
are pure, so everything in this module is safe to use from any number of
threads.

Metrics are weighted lp norms. A metric can measure other metrics: the
parameters of a `MetricParams` flatten into the vector `weights ++ [1/p]`
(so the max-norm, `p = inf`, flattens to a trailing `0`), and a *base*
metric then measures the distance between two such vectors.
"""

__all__ = ["MAX_TRANSPORT_CELLS",
           "DomainBox", "GoalVector", "MetricParams", "StateGrid",
           "DiscreteDistribution", "AugmentedState",
           "weighted_lp", "lift_metric",
           "goal_distance", "metric_distance", "vector_distance", "augmented_distance",
           "wasserstein1", "total_variation", "distribution_metric"]

from dataclasses import dataclass, field, replace
from functools import cached_property
import logging
import math

import numpy as np
from scipy import optimize, sparse

from .errors import DimensionError, DistributionError, GridError, MetafixError, SizeError

logger = logging.getLogger(__name__)

MAX_TRANSPORT_CELLS = 4096
_RENORMALIZE_SLACK = 1e-9


def _as_float_tuple(values, name):
    try:
        out = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
    except (TypeError, ValueError):
        raise TypeError(f"`{name}` must be a sequence of reals, got {type(values)} with value {values!r}")
    return out


# --------------------------------------------------------------------------------
# Points

@dataclass(frozen=True)
class DomainBox:
    """A compact axis-aligned box `[lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}]`."""
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = _as_float_tuple(self.lo, "lo")
        hi = _as_float_tuple(self.hi, "hi")
        if len(lo) != len(hi) or not lo:
            raise DimensionError(f"`lo` and `hi` must be nonempty and of equal length, got {len(lo)} and {len(hi)}")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError(f"box bounds must be finite, got [{a}, {b}] on axis {i}")
            if not a < b:
                raise ValueError(f"expected lo < hi on every axis, got [{a}, {b}] on axis {i}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim):
        """The unit cube `[0, 1]^dim`."""
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def lo_array(self):
        return np.array(self.lo)

    @property
    def hi_array(self):
        return np.array(self.hi)

    @property
    def widths(self):
        return self.hi_array - self.lo_array

    @property
    def center(self):
        return 0.5 * (self.lo_array + self.hi_array)

    @property
    def diameter(self):
        """Euclidean length of the main diagonal."""
        return float(np.linalg.norm(self.widths))

    @property
    def volume(self):
        return float(np.prod(self.widths))

    def clamp(self, x):
        """Clip the point `x` into the box. Returns a new array."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        return np.clip(x, self.lo_array, self.hi_array)

    def contains(self, x, slack=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo_array - slack) and np.all(x <= self.hi_array + slack))

    def corners(self):
        """All `2^dim` vertices, as an array of shape `(2^dim, dim)`."""
        bits = np.array(np.meshgrid(*([[0, 1]] * self.dim), indexing="ij")).reshape(self.dim, -1).T
        return np.where(bits == 1, self.hi_array, self.lo_array)

    def bisect(self):
        """Split into `2^dim` children by halving every axis."""
        mid = self.center
        children = []
        for corner in self.corners():
            lo = np.minimum(corner, mid)
            hi = np.maximum(corner, mid)
            children.append(DomainBox(tuple(lo), tuple(hi)))
        return children


@dataclass(frozen=True)
class GoalVector:
    """A point of the goal box. Coordinates are clamped into `box` on construction."""
    coords: tuple
    box: DomainBox

    def __post_init__(self):
        if not isinstance(self.box, DomainBox):
            raise TypeError(f"`box` must be a DomainBox, got {type(self.box)} with value {self.box!r}")
        coords = _as_float_tuple(self.coords, "coords")
        if len(coords) != self.box.dim:
            raise DimensionError(f"expected {self.box.dim} goal coordinates, got {len(coords)}")
        object.__setattr__(self, "coords", tuple(float(c) for c in self.box.clamp(coords)))

    @property
    def dim(self):
        return len(self.coords)

    @property
    def array(self):
        return np.array(self.coords)

    def moved_to(self, x):
        """Return a new goal vector at `x` (clamped) in the same box."""
        return GoalVector(tuple(x), self.box)


# --------------------------------------------------------------------------------
# Metrics

@dataclass(frozen=True)
class MetricParams:
    """Parameters of the weighted lp metric `(sum_i w_i |a_i - b_i|^p)^(1/p)`.

    `exponent` is `p >= 1`, or `math.inf` for the weighted max-norm `max_i w_i |a_i - b_i|`.

    Weights are kept as given, so that `(2, 1)` really weighs the first axis
    double. `normalized()` returns the representative whose weights sum to
    the dimension; the all-ones vector is the canonical metric.
    """
    weights: tuple
    exponent: float = 2.0

    def __post_init__(self):
        weights = _as_float_tuple(self.weights, "weights")
        if not weights:
            raise DimensionError("metric needs at least one weight")
        if any(not math.isfinite(w) or w < 0.0 for w in weights):
            raise ValueError(f"weights must be finite and nonnegative, got {weights}")
        if not any(w > 0.0 for w in weights):
            raise ValueError(f"at least one weight must be strictly positive, got {weights}")
        p = float(self.exponent)
        if math.isnan(p) or p < 1.0:
            raise ValueError(f"exponent must be >= 1 or inf, got {self.exponent!r}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "exponent", p)

    @classmethod
    def canonical(cls, dim, exponent=2.0):
        """All-ones weights: the unweighted lp metric."""
        return cls((1.0,) * dim, exponent)

    @property
    def dim(self):
        return len(self.weights)

    @property
    def weight_array(self):
        return np.array(self.weights)

    def normalized(self):
        """Rescale the weights to sum to `dim`."""
        w = self.weight_array
        return MetricParams(tuple(w * (self.dim / w.sum())), self.exponent)

    def flat(self):
        """Flatten into `weights ++ [1/p]`."""
        inv_p = 0.0 if math.isinf(self.exponent) else 1.0 / self.exponent
        return np.append(self.weight_array, inv_p)

    @classmethod
    def from_flat(cls, v):
        """Inverse of `flat`. Negative weights are clipped to zero, `1/p` clipped into `[0, 1]`."""
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise DimensionError(f"expected a flat metric vector of length >= 2, got shape {v.shape}")
        weights = np.clip(v[:-1], 0.0, None)
        if not np.any(weights > 0.0):
            weights = np.ones_like(weights)
        inv_p = float(np.clip(v[-1], 0.0, 1.0))
        exponent = math.inf if inv_p == 0.0 else 1.0 / inv_p
        return cls(tuple(weights), exponent)


def weighted_lp(diff, weights, p):
    """The weighted lp norm of the vector `diff`."""
    diff = np.abs(np.asarray(diff, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if math.isinf(p):
        return float(np.max(weights * diff)) if diff.size else 0.0
    if p == 1.0:
        return float(np.sum(weights * diff))
    if p == 2.0:
        return float(math.sqrt(np.sum(weights * diff * diff)))
    return float(np.sum(weights * diff ** p) ** (1.0 / p))


def lift_metric(base, dim):
    """Adapt the base metric `base` to vectors of length `dim`.

    Used as-is when its dimension matches; otherwise all-ones weights with
    the exponent of `base`.
    """
    if base.dim == dim:
        return base
    return MetricParams.canonical(dim, base.exponent)


def _as_coords(x):
    if isinstance(x, GoalVector):
        return x.array
    return np.atleast_1d(np.asarray(x, dtype=float))


def goal_distance(a, b, m):
    """Distance between goal vectors `a` and `b` under metric `m`.

    `a` and `b` may also be plain coordinate arrays.
    """
    x, y = _as_coords(a), _as_coords(b)
    if x.shape != y.shape or len(x) != m.dim:
        raise DimensionError(f"goal_distance: dimensions {len(x)}, {len(y)} and metric dimension {m.dim} must agree")
    return weighted_lp(x - y, m.weight_array, m.exponent)


def vector_distance(u, v, base):
    """Distance between two flat parameter vectors, measured by `base` lifted to their length."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise DimensionError(f"parameter vectors differ in length: {len(u)} vs. {len(v)}")
    if not len(u):
        return 0.0
    m = lift_metric(base, len(u))
    return weighted_lp(u - v, m.weight_array, m.exponent)


def metric_distance(m1, m2, base):
    """Distance between two metrics, as `base` applied to their flattened parameters."""
    if m1.dim != m2.dim:
        raise DimensionError(f"metric_distance: metric dimensions differ, {m1.dim} vs. {m2.dim}")
    return vector_distance(m1.flat(), m2.flat(), base)


# --------------------------------------------------------------------------------
# The augmented state

@dataclass(frozen=True)
class AugmentedState:
    """Everything self-modification may change: goals, metagoal parameters, metric, internal knobs.

    In the simulator, `internal_params` is the behaviour point `theta`
    (same dimension as the goals) followed by one scalar, the step scale
    used by moderated goal evolution.
    """
    goals: GoalVector
    metagoal_params: tuple
    metric_params: MetricParams
    internal_params: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "metagoal_params", _as_float_tuple(self.metagoal_params, "metagoal_params"))
        object.__setattr__(self, "internal_params", _as_float_tuple(self.internal_params, "internal_params"))
        if self.metric_params.dim != self.goals.dim:
            raise DimensionError(f"metric dimension {self.metric_params.dim} does not match goal dimension {self.goals.dim}")

    @property
    def layout(self):
        """Lengths of the components: `(goals, metagoal_params, flat metric, internal_params)`."""
        return (self.goals.dim, len(self.metagoal_params), self.metric_params.dim + 1, len(self.internal_params))

    @property
    def theta(self):
        return np.array(self.internal_params[:self.goals.dim])

    @property
    def step_scale(self):
        return self.internal_params[self.goals.dim] if len(self.internal_params) > self.goals.dim else 0.0

    def replace(self, **changes):
        return replace(self, **changes)

    def flat(self):
        """All components concatenated into one vector."""
        return np.concatenate([self.goals.array, np.asarray(self.metagoal_params, dtype=float),
                               self.metric_params.flat(), np.asarray(self.internal_params, dtype=float)])


def augmented_distance(s1, s2, base):
    """The fixed super-metric on augmented states.

    Sum of the component distances: goals by `base`, metagoal parameters and
    metric parameters by `base` on the flat vectors. Internal parameters are
    not part of the goal system and do not count.
    """
    if s1.layout[:3] != s2.layout[:3]:
        raise DimensionError(f"augmented_distance: state layouts differ, {s1.layout} vs. {s2.layout}")
    goals = goal_distance(s1.goals, s2.goals, lift_metric(base, s1.goals.dim))
    meta = vector_distance(s1.metagoal_params, s2.metagoal_params, base)
    metric = metric_distance(s1.metric_params, s2.metric_params, base)
    return goals + meta + metric


# --------------------------------------------------------------------------------
# Distributions

@dataclass(frozen=True)
class StateGrid:
    """A regular grid of `cells_per_dim^dim` cells over a box. Cells are numbered in C order."""
    box: DomainBox
    cells_per_dim: int

    def __post_init__(self):
        if int(self.cells_per_dim) != self.cells_per_dim or self.cells_per_dim < 1:
            raise ValueError(f"`cells_per_dim` must be a positive integer, got {self.cells_per_dim!r}")
        object.__setattr__(self, "cells_per_dim", int(self.cells_per_dim))

    @classmethod
    def over_indices(cls, count):
        """A 1-D grid whose cell centers are `0, 1, ..., count - 1` (unit widths)."""
        return cls(DomainBox((-0.5,), (count - 0.5,)), count)

    @property
    def dim(self):
        return self.box.dim

    @property
    def size(self):
        return self.cells_per_dim ** self.dim

    @property
    def shape(self):
        return (self.cells_per_dim,) * self.dim

    @property
    def widths(self):
        return self.box.widths / self.cells_per_dim

    @cached_property
    def centers(self):
        """Cell centers, shape `(size, dim)`."""
        axes = [lo + (np.arange(self.cells_per_dim) + 0.5) * w
                for lo, w in zip(self.box.lo, self.widths)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=-1)
        out.flags.writeable = False
        return out

    def locate(self, x):
        """Index of the cell containing point `x` (points outside are clamped in).

        `x` may also be an array of points, shape `(k, dim)`; then returns `k` indices.
        """
        x = np.asarray(x, dtype=float)
        rel = (x - self.box.lo_array) / self.widths
        idx = np.clip(np.floor(rel).astype(int), 0, self.cells_per_dim - 1)
        if idx.ndim == 1:
            return int(np.ravel_multi_index(tuple(idx), self.shape))
        return np.ravel_multi_index(tuple(idx.T), self.shape)


class DiscreteDistribution:
    """A probability vector over the cells of a `StateGrid`.

    Negative entries are rejected. A sum within `1e-9` of one is renormalized;
    anything further off is an error. The stored vector is read-only.
    """
    __slots__ = ("grid", "probs")

    def __init__(self, probs, grid):
        if not isinstance(grid, StateGrid):
            raise TypeError(f"`grid` must be a StateGrid, got {type(grid)} with value {grid!r}")
        p = np.array(probs, dtype=float).ravel()
        if p.shape != (grid.size,):
            raise DimensionError(f"expected {grid.size} probabilities for the grid, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise DistributionError(f"probabilities must be finite, got {p}")
        if np.any(p < 0.0):
            raise DistributionError(f"probabilities must be nonnegative, got min {p.min()}")
        total = p.sum()
        if abs(total - 1.0) > _RENORMALIZE_SLACK:
            raise DistributionError(f"probabilities must sum to 1, got {total!r}")
        p = p / total
        p.flags.writeable = False
        self.probs = p
        self.grid = grid

    @classmethod
    def from_counts(cls, counts, grid):
        """Normalize nonnegative counts (or weights) into a distribution."""
        c = np.asarray(counts, dtype=float).ravel()
        if np.any(c < 0.0):
            raise DistributionError(f"counts must be nonnegative, got min {c.min()}")
        total = c.sum()
        if not total > 0.0:
            raise DistributionError("counts must not all be zero")
        return cls(c / total, grid)

    @classmethod
    def point_mass(cls, index, grid):
        p = np.zeros(grid.size)
        p[index] = 1.0
        return cls(p, grid)

    @classmethod
    def uniform(cls, grid):
        return cls(np.full(grid.size, 1.0 / grid.size), grid)

    @property
    def support(self):
        return np.flatnonzero(self.probs)

    def mix(self, other, alpha):
        """The mixture `alpha * self + (1 - alpha) * other`."""
        _check_same_grid(self, other)
        return DiscreteDistribution(alpha * self.probs + (1.0 - alpha) * other.probs, self.grid)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.grid, self.probs.tobytes()))

    def __repr__(self):
        return f"DiscreteDistribution({np.array2string(self.probs, precision=4)}, cells={self.grid.size})"


def _check_same_grid(p, q):
    if p.grid != q.grid:
        raise GridError("distributions live on different grids")


def total_variation(p, q):
    """Total variation distance `(1/2) sum_i |p_i - q_i|`, in `[0, 1]`."""
    _check_same_grid(p, q)
    return float(min(1.0, 0.5 * np.abs(p.probs - q.probs).sum()))


def _wasserstein1_cdf(p, q):
    grid = p.grid
    gaps = np.diff(grid.centers[:, 0])
    cdf_gap = np.cumsum(p.probs - q.probs)[:-1]
    return float(np.sum(np.abs(cdf_gap) * gaps))


def _wasserstein1_lp(p, q, max_cells):
    diff = p.probs - q.probs
    sources = np.flatnonzero(diff > 0.0)
    sinks = np.flatnonzero(diff < 0.0)
    if not len(sources) or not len(sinks):
        return 0.0
    supply = diff[sources]
    demand = -diff[sinks]
    # the two sides can differ by rounding; scale demand to the supply total
    demand = demand * (supply.sum() / demand.sum())
    centers = p.grid.centers
    cost = np.linalg.norm(centers[sources][:, None, :] - centers[sinks][None, :, :], axis=-1).ravel()
    ns, nt = len(sources), len(sinks)
    rows = sparse.kron(sparse.identity(ns), np.ones((1, nt)))
    cols = sparse.kron(np.ones((1, ns)), sparse.identity(nt))
    a_eq = sparse.vstack([rows, cols]).tocsr()[:-1]  # one equation is redundant
    b_eq = np.concatenate([supply, demand])[:-1]
    res = optimize.linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise MetafixError(f"transport LP failed: {res.message}")
    logger.debug(f"W1 transport LP: {ns} sources, {nt} sinks, cost {res.fun}")
    return float(max(res.fun, 0.0))


def wasserstein1(p, q, method="auto", max_cells=MAX_TRANSPORT_CELLS):
    """Wasserstein-1 distance between two distributions on the same grid.

    Ground distance is the Euclidean distance between cell centers.

    `method`:
      - `"cdf"`: the exact 1-D formula `sum_i |CDF_p(i) - CDF_q(i)| * gap_i`
        (1-D grids only);
      - `"lp"`: exact transport LP over the cells where `p` and `q` differ;
      - `"auto"`: `"cdf"` for 1-D grids, `"lp"` otherwise.

    The common mass `min(p, q)` stays in place at no cost, so only the
    difference is transported.
    """
    _check_same_grid(p, q)
    if method == "auto":
        method = "cdf" if p.grid.dim == 1 else "lp"
    if method == "cdf":
        if p.grid.dim != 1:
            raise DimensionError(f"the CDF formula needs a 1-D grid, got dimension {p.grid.dim}")
        return _wasserstein1_cdf(p, q)
    if method == "lp":
        if p.grid.size > max_cells:
            raise SizeError(f"grid with {p.grid.size} cells exceeds the transport cap of {max_cells}")
        return _wasserstein1_lp(p, q, max_cells)
    raise ValueError(f"`method` must be one of 'auto', 'cdf', 'lp', got {method!r}")


_distribution_metrics = {"TV": total_variation,
                         "W1": wasserstein1}

def distribution_metric(choice):
    """Look up a distribution metric by name, `"TV"` or `"W1"` (case-insensitive)."""
    try:
        return _distribution_metrics[str(choice).upper()]
    except KeyError:
        raise ValueError(f"metric choice must be one of {sorted(_distribution_metrics)}, got {choice!r}")
