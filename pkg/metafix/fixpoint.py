# -*- coding: utf-8; -*-
"""Fixed-point solvers.

- `banach_iterate`: plain iteration `x <- F(x)` of a contraction.
- `markov_invariant`: power iteration of a Markov kernel (see `metafix.markov`).
- `grid_fixed_point_search`: constructive search by best-first subdivision of
  the domain box.
- `surrogate_guided_search`: the same kind of search, steered by an
  interpolating surrogate of `F` so that fewer true evaluations are needed.

Every residual reported in a `FixedPointResult` comes from a true evaluation
of `F` at the returned point, never from a surrogate.
"""

__all__ = ["FixedPointResult", "SearchBlock", "SurrogateSearchConfig",
           "banach_iterate", "grid_fixed_point_search", "surrogate_guided_search",
           "MarkovKernel", "markov_invariant", "empirical_contraction"]

from dataclasses import dataclass
import heapq
import itertools
import logging
import math
import warnings

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import qmc

from .errors import BudgetExhausted, Divergence, NonConvergence, RangeError, SizeError
from .goalspace import DomainBox
from .markov import MarkovKernel, empirical_contraction, markov_invariant
from .surrogate import SurrogateModel
from .utils import as_vector, euclidean, make_rng, parallel_map

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e6
CONTRACTION_WINDOW = 10
MAX_SUBDIVISION_DIM = 6
MIN_BLOCK_WIDTH = 1e-12
_SELFMAP_SLACK = 1e-12


@dataclass(frozen=True)
class FixedPointResult:
    """An approximate fixed point.

    `residual` is `||F(point) - point||`, from a true evaluation.
    `empirical_contraction` is set by iterative solvers only.
    `evaluations` counts calls of the true map.
    """
    point: tuple
    residual: float
    iterations: int
    evaluations: int
    empirical_contraction: float = None
    solver: str = ""

    @property
    def array(self):
        return np.array(self.point)


def _result(x, residual, iterations, evaluations, contraction=None, solver=""):
    return FixedPointResult(point=tuple(float(c) for c in x), residual=float(residual),
                            iterations=int(iterations), evaluations=int(evaluations),
                            empirical_contraction=contraction, solver=solver)


# --------------------------------------------------------------------------------
# Contraction iteration

def banach_iterate(F, x0, tol=1e-10, max_iter=10000, norm=euclidean):
    """Iterate `x <- F(x)` from `x0` until `||F(x) - x|| < tol`.

    `F` maps a 1-D array to a 1-D array of the same length; a scalar `x0` is
    treated as a 1-vector. Returns the first iterate meeting the tolerance.

    `empirical_contraction` of the result is the largest ratio of successive
    steps `||x_{i+1} - x_i|| / ||x_i - x_{i-1}||` over the last ten steps,
    skipping zero denominators (`None` if no ratio was available).

    Raises `Divergence` if the residual grows past `1e6` times its initial
    value, and `NonConvergence` if `max_iter` iterations do not suffice.
    """
    if not tol > 0.0:
        raise ValueError(f"`tol` must be positive, got {tol!r}")
    if max_iter < 1:
        raise ValueError(f"`max_iter` must be at least 1, got {max_iter!r}")
    x = as_vector(x0, "x0")
    fx = as_vector(F(x), "F(x0)")
    evaluations = 1
    r0 = norm(fx - x)
    if r0 < tol:
        return _result(x, r0, 0, evaluations, None, "banach")
    residuals = [r0]
    r = r0
    for i in range(1, max_iter + 1):
        x = fx
        fx = as_vector(F(x), "F(x)")
        evaluations += 1
        r = norm(fx - x)
        residuals.append(r)
        if r < tol:
            contraction = _trailing_contraction(residuals)
            logger.debug(f"banach_iterate: converged in {i} iterations, residual {r:.3g}")
            return _result(x, r, i, evaluations, contraction, "banach")
        if not math.isfinite(r) or (r0 > 0.0 and r > DIVERGENCE_FACTOR * r0):
            raise Divergence(f"iteration diverged at step {i}: residual {r:.3g} vs. initial {r0:.3g}",
                             point=tuple(x), residual=r, iterations=i, evaluations=evaluations)
    raise NonConvergence(f"no convergence in {max_iter} iterations; residual {r:.3g}",
                         point=tuple(x), residual=r, iterations=max_iter, evaluations=evaluations)


def _trailing_contraction(residuals):
    # successive steps ||x_{i+1} - x_i|| are the residuals of the iterates
    tail = residuals[-(CONTRACTION_WINDOW + 1):]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0.0]
    return max(ratios) if ratios else None


# --------------------------------------------------------------------------------
# Constructive subdivision search

@dataclass(frozen=True)
class SearchBlock:
    """A sub-box of the search domain, with its search score."""
    bounds: DomainBox
    predicted_g: float
    uncertainty: float = 0.0
    depth: int = 0


class _Evaluator:
    """Cached true-map evaluations with budget accounting and a best-so-far record."""
    def __init__(self, F, domain, budget, solver):
        self.F = F
        self.domain = domain
        self.budget = budget
        self.solver = solver
        self.cache = {}
        self.evaluations = 0
        self.iterations = 0
        self.best = None

    def best_result(self):
        if self.best is None:
            return None
        x, r = self.best
        return _result(x, r, self.iterations, self.evaluations, None, self.solver)

    def exhausted(self):
        best = self.best_result()
        residual = best.residual if best else None
        return BudgetExhausted(f"{self.solver} search: budget of {self.budget} evaluations exhausted; "
                               f"best residual {residual!r}",
                               best=best, point=best.point if best else None, residual=residual,
                               iterations=self.iterations, evaluations=self.evaluations)

    def record(self, x, fx):
        fx = as_vector(fx, "F(x)")
        if fx.shape != x.shape:
            raise RangeError(f"F maps dimension {len(x)} to dimension {len(fx)}")
        if not self.domain.contains(fx, slack=_SELFMAP_SLACK):
            raise RangeError(f"F is not a self-map of the domain: F({x.tolist()}) = {fx.tolist()}")
        r = euclidean(fx - x)
        self.evaluations += 1
        if self.best is None or r < self.best[1]:
            self.best = (x.copy(), r)
        return fx, r

    def __call__(self, x):
        """Return `(F(x), residual)`."""
        key = tuple(x)
        if key in self.cache:
            return self.cache[key]
        if self.evaluations >= self.budget:
            raise self.exhausted()
        out = self.record(np.array(x, dtype=float), self.F(np.array(x, dtype=float)))
        self.cache[key] = out
        return out


def _grid_vertices(domain, divisions):
    axes = [np.linspace(lo, hi, divisions + 1) for lo, hi in zip(domain.lo, domain.hi)]
    return [np.array(v) for v in itertools.product(*axes)]


def _grid_blocks(domain, divisions):
    edges = [np.linspace(lo, hi, divisions + 1) for lo, hi in zip(domain.lo, domain.hi)]
    blocks = []
    for idx in itertools.product(range(divisions), repeat=domain.dim):
        lo = tuple(edges[i][j] for i, j in enumerate(idx))
        hi = tuple(edges[i][j + 1] for i, j in enumerate(idx))
        blocks.append(DomainBox(lo, hi))
    return blocks


def _block_score(corners, evaluate):
    """Score a block from its corner evaluations: `(missing, g, u)`.

    `missing` counts the axes on which the displacement `F_i(x) - x_i` keeps
    one strict sign over all corners. Where it changes sign, that component
    vanishes somewhere in the block; a fixed point of a continuous map can only
    lie in a block with `missing == 0`, unless a component touches zero
    without crossing it.

    `g` is the smallest corner residual and `u` its local Lipschitz allowance:
    the steepest residual change between two corners times the block radius,
    so `g - u` estimates the lowest residual inside the block.
    """
    displacements = []
    residuals = []
    for v in corners:
        fv, r = evaluate(v)
        displacements.append(fv - v)
        residuals.append(r)
    displacements = np.array(displacements)
    residuals = np.array(residuals)
    straddles = (displacements.max(axis=0) >= 0.0) & (displacements.min(axis=0) <= 0.0)
    distances = pdist(np.asarray(corners, dtype=float))
    slope = float(np.max(pdist(residuals[:, None]) / distances))
    radius = 0.5 * float(distances.max())
    return int(np.count_nonzero(~straddles)), float(residuals.min()), slope * radius


def grid_fixed_point_search(F, domain, epsilon, budget, initial_divisions=2):
    """Find `x` in `domain` with `||F(x) - x|| < epsilon` by best-first subdivision.

    `F` must map the box `domain` into itself. The search evaluates `F` at the
    vertices of an initial grid (`initial_divisions` cells per axis) and
    returns the first vertex meeting the tolerance. Otherwise it keeps a
    priority queue of blocks and repeatedly bisects the best block along all
    axes, evaluating the new vertices.

    Blocks are ranked first by the number of axes on which the displacement
    `F(x) - x` does not change sign over the corners (fewer is better), then
    by the estimated lower bound `g - u` of the residual inside the block
    (see `_block_score`), then by volume (larger first). The allowance `u`
    shrinks with the block, so a block that stays poor after subdivision
    loses priority to its unexplored neighbours.

    No block is bisected into children narrower than `MIN_BLOCK_WIDTH` times
    the domain width on any axis.

    Vertex evaluations are cached, so `budget` counts distinct true evaluations.

    Raises `BudgetExhausted` (carrying the best vertex so far) when the budget
    runs out, `NonConvergence` if every block reached the minimum width first,
    and `RangeError` if `F` leaves the domain.
    """
    if not epsilon > 0.0:
        raise ValueError(f"`epsilon` must be positive, got {epsilon!r}")
    if domain.dim > MAX_SUBDIVISION_DIM:
        raise SizeError(f"subdivision search supports dimension <= {MAX_SUBDIVISION_DIM}, got {domain.dim}")
    if initial_divisions < 1:
        raise ValueError(f"`initial_divisions` must be at least 1, got {initial_divisions!r}")
    initial_vertices = _grid_vertices(domain, initial_divisions)
    if budget < len(initial_vertices):
        raise ValueError(f"`budget` must cover the {len(initial_vertices)} initial grid vertices, got {budget!r}")

    evaluate = _Evaluator(F, domain, budget, "grid")
    min_widths = MIN_BLOCK_WIDTH * domain.widths

    def success(x, r):
        logger.debug(f"grid search: residual {r:.3g} after {evaluate.evaluations} evaluations")
        return _result(x, r, evaluate.iterations, evaluate.evaluations, None, "grid")

    for v in initial_vertices:
        _, r = evaluate(v)
        if r < epsilon:
            return success(v, r)

    counter = itertools.count()
    heap = []

    def push(block, depth):
        corners = block.corners()
        for v in corners:
            _, r = evaluate(v)
            if r < epsilon:
                return v, r
        missing, g, u = _block_score(corners, evaluate)
        key = (missing, g - u, -block.volume, next(counter))
        heapq.heappush(heap, key + (SearchBlock(block, g, u, depth),))
        return None

    for block in _grid_blocks(domain, initial_divisions):
        found = push(block, 0)
        if found:
            return success(*found)
    while heap:
        *_, best = heapq.heappop(heap)
        evaluate.iterations += 1
        if np.any(best.bounds.widths <= 2.0 * min_widths):
            logger.debug(f"grid search: block {best.bounds} at depth {best.depth} reached the minimum width")
            continue
        for child in best.bounds.bisect():
            found = push(child, best.depth + 1)
            if found:
                return success(*found)
    best = evaluate.best_result()
    raise NonConvergence(f"grid search: every block reached the minimum width; best residual {best.residual:.3g}",
                         point=best.point, residual=best.residual,
                         iterations=evaluate.iterations, evaluations=evaluate.evaluations)


# --------------------------------------------------------------------------------
# Surrogate-guided search

@dataclass(frozen=True)
class SurrogateSearchConfig:
    """Settings for `surrogate_guided_search`.

    `initial_samples`: low-discrepancy samples evaluated before the first fit (at least dimension + 1).
    `top_k`: blocks refined per round.
    `explore_weight`: weight of the uncertainty in the block score `g_hat - w * u`.
    `max_evaluations`: true-evaluation budget.
    `blocks_per_axis`: initial partition of the domain.
    `local_iterations`: sweeps of coordinate descent on `g_hat` in the best block.
    `sampler`: `"halton"` or `"sobol"`.
    `workers`: threads for the initial evaluations (`None` reads `METAFIX_THREADS`).
    """
    initial_samples: int = 10
    top_k: int = 3
    explore_weight: float = 0.5
    max_evaluations: int = 1000
    blocks_per_axis: int = 4
    local_iterations: int = 50
    sampler: str = "halton"
    seed: int = 0
    workers: int = None

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"`top_k` must be at least 1, got {self.top_k!r}")
        if self.explore_weight < 0.0:
            raise ValueError(f"`explore_weight` must be nonnegative, got {self.explore_weight!r}")
        if self.blocks_per_axis < 1 or self.local_iterations < 1:
            raise ValueError("`blocks_per_axis` and `local_iterations` must be at least 1")
        if self.sampler not in ("halton", "sobol"):
            raise ValueError(f"`sampler` must be 'halton' or 'sobol', got {self.sampler!r}")


def low_discrepancy_points(domain, count, sampler="halton", seed=0):
    """`count` scrambled Halton or Sobol points scaled into `domain`, shape `(count, dim)`."""
    rng = make_rng(seed)
    if sampler == "halton":
        engine = qmc.Halton(d=domain.dim, scramble=True, seed=rng)
    else:
        engine = qmc.Sobol(d=domain.dim, scramble=True, seed=rng)
    with warnings.catch_warnings():
        # Sobol balance is only guaranteed for powers of two; any count is fine here.
        warnings.simplefilter("ignore", UserWarning)
        unit_points = engine.random(count)
    return qmc.scale(unit_points, domain.lo, domain.hi)


def _representative_points(block):
    return np.vstack([block.center[None, :], block.corners()])


def _coordinate_descent(g, x0, box, iterations):
    """Minimize `g` over `box` by coordinate steps, halving the step when no axis improves."""
    x = box.clamp(x0)
    gx = g(x)
    step = box.widths / 4.0
    floor = box.widths * 1e-12
    for _ in range(iterations):
        improved = False
        for i in range(len(x)):
            for direction in (1.0, -1.0):
                y = x.copy()
                y[i] += direction * step[i]
                y = box.clamp(y)
                gy = g(y)
                if gy < gx:
                    x, gx = y, gy
                    improved = True
                    break
        if not improved:
            step = step / 2.0
            if np.all(step < floor):
                break
    return x, gx


def surrogate_guided_search(F, domain, epsilon, cfg=None, callback=None):
    """Find `x` in `domain` with `||F(x) - x|| < epsilon`, steering the search by a surrogate of `F`.

    Each round:

      1. fit an interpolating surrogate `f_hat` to all true samples so far;
      2. score the blocks of the current partition by
         `min(g_hat - explore_weight * u)` over their center and corners, where
         `g_hat(x) = ||f_hat(x) - x||` and `u` is the surrogate uncertainty;
      3. bisect the `top_k` best blocks and score their children;
      4. minimize `g_hat` by coordinate descent, starting from the best
         representative point of the best block and staying within that block
         grown by half its width on each side;
      5. evaluate `F` at the minimizer. Accept it if the true residual is below
         `epsilon`; otherwise add it to the samples (exactly one new sample per
         round) and go again.

    The first round is preceded by `cfg.initial_samples` true evaluations at
    low-discrepancy points.

    `callback(round, samples, candidate, residual)`, if given, is called after
    each verification.

    Raises `BudgetExhausted` (carrying the best verified point so far) when
    `cfg.max_evaluations` true evaluations are used up, and `RangeError` if `F`
    leaves the domain.
    """
    cfg = cfg or SurrogateSearchConfig()
    if not epsilon > 0.0:
        raise ValueError(f"`epsilon` must be positive, got {epsilon!r}")
    if cfg.initial_samples < domain.dim + 1:
        raise ValueError(f"need at least {domain.dim + 1} initial samples in dimension {domain.dim}, "
                         f"got {cfg.initial_samples}")
    if cfg.max_evaluations < cfg.initial_samples + 1:
        raise ValueError(f"`max_evaluations` must exceed `initial_samples`, got {cfg.max_evaluations}")
    if domain.dim > MAX_SUBDIVISION_DIM:
        raise SizeError(f"subdivision search supports dimension <= {MAX_SUBDIVISION_DIM}, got {domain.dim}")

    evaluate = _Evaluator(F, domain, cfg.max_evaluations, "surrogate")
    X = low_discrepancy_points(domain, cfg.initial_samples, cfg.sampler, cfg.seed)
    images = parallel_map(lambda x: as_vector(F(np.array(x)), "F(x)"), X, workers=cfg.workers)
    FX = np.array([evaluate.record(x, fx)[0] for x, fx in zip(X, images)])

    frontier = [SearchBlock(b, math.inf, 0.0, 0) for b in _grid_blocks(domain, cfg.blocks_per_axis)]
    rounds = 0
    while True:
        rounds += 1
        evaluate.iterations = rounds
        model = SurrogateModel(X, FX)

        def g_hat(x):
            return euclidean(model.predict(x) - x)

        def rescore(block):
            points = _representative_points(block.bounds)
            g = np.linalg.norm(model.predict(points) - points, axis=1)
            u = model.uncertainty(points)
            scores = g - cfg.explore_weight * u
            i = int(np.argmin(scores))
            return SearchBlock(block.bounds, float(scores[i]), float(u[i]), block.depth), points[i]

        scored = [rescore(b) for b in frontier]
        order = sorted(range(len(scored)),
                       key=lambda i: (scored[i][0].predicted_g, -scored[i][0].bounds.volume, i))
        refine = set(order[:cfg.top_k])
        new_frontier = []
        for i, (block, start) in enumerate(scored):
            if i not in refine:
                new_frontier.append((block, start))
                continue
            for child in block.bounds.bisect():
                new_frontier.append(rescore(SearchBlock(child, math.inf, 0.0, block.depth + 1)))
        frontier = [b for b, _ in new_frontier]
        best_block, start = min(new_frontier, key=lambda bs: (bs[0].predicted_g, -bs[0].bounds.volume))

        bounds = best_block.bounds
        grown = DomainBox(tuple(domain.clamp(bounds.lo_array - bounds.widths / 2.0)),
                          tuple(domain.clamp(bounds.hi_array + bounds.widths / 2.0)))
        candidate, _ = _coordinate_descent(g_hat, start, grown, cfg.local_iterations)

        if evaluate.evaluations >= cfg.max_evaluations:
            raise evaluate.exhausted()
        fx, r = evaluate.record(candidate, F(candidate.copy()))
        if callback is not None:
            callback(rounds, len(X), candidate, r)
        if r < epsilon:
            logger.debug(f"surrogate search: residual {r:.3g} after {evaluate.evaluations} evaluations, "
                         f"{rounds} rounds")
            return _result(candidate, r, rounds, evaluate.evaluations, None, "surrogate")
        X = np.vstack([X, candidate])
        FX = np.vstack([FX, fx])
