# -*- coding: utf-8; -*-
"""Markov kernels on finite grids, their invariant distributions, and contraction estimates."""

__all__ = ["MarkovKernel", "markov_invariant", "stationary_direct",
           "dobrushin_coefficient", "empirical_contraction"]

import logging

import numpy as np

from .errors import DimensionError, DistributionError, GridError, NonConvergence, SamplingError
from .goalspace import DiscreteDistribution, StateGrid, distribution_metric, total_variation
from .utils import make_rng

logger = logging.getLogger(__name__)

_ROW_SLACK = 1e-9
_DEGENERATE = 1e-15


class MarkovKernel:
    """A row-stochastic matrix over the cells of a grid.

    Row `i` is the distribution of the next cell given the current cell `i`.
    Rows whose sum is within `1e-9` of one are renormalized; others are an error.

    `grid` defaults to a 1-D grid whose cell centers are the state indices.
    """
    __slots__ = ("rows", "grid")

    def __init__(self, rows, grid=None):
        T = np.array(rows, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or not T.shape[0]:
            raise DimensionError(f"a kernel must be a nonempty square matrix, got shape {T.shape}")
        if grid is None:
            grid = StateGrid.over_indices(T.shape[0])
        if grid.size != T.shape[0]:
            raise GridError(f"kernel has {T.shape[0]} states but the grid has {grid.size} cells")
        if not np.all(np.isfinite(T)) or np.any(T < 0.0):
            raise DistributionError("kernel entries must be finite and nonnegative")
        sums = T.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > _ROW_SLACK)
        if len(bad):
            raise DistributionError(f"kernel rows must sum to 1; row {bad[0]} sums to {sums[bad[0]]!r}")
        T = T / sums[:, None]
        T.flags.writeable = False
        self.rows = T
        self.grid = grid

    @classmethod
    def from_counts(cls, counts, grid=None):
        """Normalize transition counts row by row. A row with no counts becomes a self-loop."""
        C = np.array(counts, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionError(f"counts must be a square matrix, got shape {C.shape}")
        if np.any(C < 0.0):
            raise DistributionError("counts must be nonnegative")
        sums = C.sum(axis=1)
        empty = np.flatnonzero(sums == 0.0)
        C[empty, empty] = 1.0
        sums[empty] = 1.0
        return cls(C / sums[:, None], grid)

    @classmethod
    def identity(cls, size, grid=None):
        return cls(np.eye(size), grid)

    @property
    def size(self):
        return self.rows.shape[0]

    def push(self, mu):
        """The distribution `mu T` after one step."""
        if mu.grid != self.grid:
            raise GridError("distribution and kernel live on different grids")
        return DiscreteDistribution(mu.probs @ self.rows, self.grid)

    def __repr__(self):
        return f"MarkovKernel(<{self.size} states>)"


def markov_invariant(T, tol=1e-12, max_iter=100000):
    """Invariant distribution of `T` by power iteration from the uniform distribution.

    Iterates `mu <- mu T` until one step moves less than `tol` in total variation,
    and returns the last iterate `nu`; then also `TV(nu T, nu) < tol`.

    Periodic kernels oscillate; after `max_iter` steps, raises `NonConvergence`
    with the final two iterates in `last_iterates`.
    """
    if not tol > 0.0:
        raise ValueError(f"`tol` must be positive, got {tol!r}")
    if max_iter < 1:
        raise ValueError(f"`max_iter` must be at least 1, got {max_iter!r}")
    mu = DiscreteDistribution.uniform(T.grid)
    step = np.inf
    for k in range(1, max_iter + 1):
        nu = T.push(mu)
        step = total_variation(nu, mu)
        if step < tol:
            logger.debug(f"power iteration converged after {k} steps, last step {step:.3g}")
            return nu
        mu = nu
    raise NonConvergence(f"power iteration did not converge in {max_iter} steps; last TV step {step:.3g}",
                         point=nu, residual=step, iterations=max_iter,
                         last_iterates=(mu, T.push(mu)))


def stationary_direct(T):
    """Stationary distribution by a direct linear solve of `pi T = pi`, `sum(pi) = 1`.

    Solves the overdetermined system in the least-squares sense. For an
    irreducible kernel the solution is unique.
    """
    n = T.size
    A = np.vstack([T.rows.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return DiscreteDistribution.from_counts(pi, T.grid)


def dobrushin_coefficient(T):
    """The exact total-variation contraction coefficient of `T`.

    `max_{i,j} TV(T_i, T_j) = 1 - min_{i,j} sum_k min(T_ik, T_jk)`. Quadratic
    in the number of states.
    """
    R = T.rows
    overlap = np.inf
    for i in range(T.size):
        overlap = min(overlap, float(np.minimum(R[i], R).sum(axis=1).min()))
    return float(min(1.0, max(0.0, 1.0 - overlap)))


def empirical_contraction(T, metric_choice="TV", num_pairs=256, seed=0, concentration=1.0):
    """Estimate the contraction factor of `T` from random pairs of distributions.

    Draws `num_pairs` pairs `(mu, nu)` from a symmetric Dirichlet distribution
    (parameter `concentration`) using a generator seeded from `seed`, and returns
    the largest ratio `d(mu T, nu T) / d(mu, nu)`, where `d` is `metric_choice`
    (`"TV"` or `"W1"`). Pairs at zero distance are skipped; if every pair is,
    raises `SamplingError`.
    """
    if num_pairs < 1:
        raise ValueError(f"`num_pairs` must be at least 1, got {num_pairs!r}")
    d = distribution_metric(metric_choice)
    rng = make_rng(seed)
    alpha = np.full(T.size, float(concentration))
    best = None
    skipped = 0
    for _ in range(num_pairs):
        mu = DiscreteDistribution.from_counts(rng.dirichlet(alpha), T.grid)
        nu = DiscreteDistribution.from_counts(rng.dirichlet(alpha), T.grid)
        before = d(mu, nu)
        if before <= _DEGENERATE:
            skipped += 1
            continue
        ratio = d(T.push(mu), T.push(nu)) / before
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise SamplingError(f"all {num_pairs} sampled pairs were degenerate")
    if skipped:
        logger.debug(f"empirical_contraction: skipped {skipped} degenerate pairs of {num_pairs}")
    return float(best)
