# -*- coding: utf-8; -*-
"""Exception types for `metafix`.

Everything raised on purpose by this library derives from `MetafixError`.
Errors about bad input values also derive from `ValueError`, so code that
does not care about the specifics can catch that instead.

The numerical failures (`NonConvergence`, `Divergence`, `BudgetExhausted`)
share the base `NumericalFailure`; the command-line harness maps that base
to exit code 2.
"""

__all__ = ["MetafixError",
           "DimensionError", "GridError", "SizeError", "DistributionError",
           "RangeError", "HistoryError", "ModeError", "SamplingError",
           "SurrogateError", "ConfigError",
           "NumericalFailure", "NonConvergence", "Divergence", "BudgetExhausted"]


class MetafixError(Exception):
    """Base class for errors specific to `metafix`."""


class DimensionError(MetafixError, ValueError):
    """Vector, metric or state layouts do not match."""


class GridError(MetafixError, ValueError):
    """Two distributions (or a distribution and a kernel) live on different grids."""


class SizeError(MetafixError, ValueError):
    """A problem exceeds a configured size cap (grid cells, subdivision dimension, sweep cells)."""


class DistributionError(MetafixError, ValueError):
    """A probability vector has negative entries, or its sum is too far from 1 to renormalize."""


class RangeError(MetafixError, ValueError):
    """A value lies outside its admissible range.

    Raised e.g. when a map passed to a fixed-point search is not a self-map
    of the search domain, or when a satisfaction value is outside [0, 1].
    """


class HistoryError(MetafixError, ValueError):
    """A goal history has too few snapshots for the requested check."""


class ModeError(MetafixError, ValueError):
    """An operation was requested for a metagoal variant it does not apply to."""


class SamplingError(MetafixError):
    """Every sampled pair was degenerate, so no ratio could be estimated."""


class SurrogateError(MetafixError):
    """The surrogate model could not be fitted, even after repairing duplicate samples."""


class ConfigError(MetafixError, ValueError):
    """A scenario configuration is invalid.

    `problems` lists every violated constraint, one human-readable line each.
    """
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        msg = "invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(msg)


class NumericalFailure(MetafixError):
    """Base class for solver failures.

    `point` is the last (or best) iterate, `residual` its true-map residual.
    """
    def __init__(self, message, *, point=None, residual=None, iterations=None, evaluations=None):
        super().__init__(message)
        self.point = point
        self.residual = residual
        self.iterations = iterations
        self.evaluations = evaluations


class NonConvergence(NumericalFailure):
    """The iteration limit was reached before the tolerance.

    For the Markov power iteration, `last_iterates` holds the final two
    distributions; for periodic kernels they differ by a constant amount.
    """
    def __init__(self, message, *, last_iterates=None, **kwargs):
        super().__init__(message, **kwargs)
        self.last_iterates = last_iterates


class Divergence(NumericalFailure):
    """The residual grew by more than the divergence factor over its initial value."""


class BudgetExhausted(NumericalFailure):
    """The true-evaluation budget ran out.

    `best` is the best candidate found so far (as a `FixedPointResult`), if any.
    """
    def __init__(self, message, *, best=None, **kwargs):
        super().__init__(message, **kwargs)
        self.best = best
