# -*- coding: utf-8; -*-
"""General utilities: seeded streams, thread pool, vector helpers, formatting."""

__all__ = ["thread_count", "parallel_map",
           "make_rng", "child_seed",
           "as_vector", "euclidean", "unit",
           "format_vector", "format_float"]

from concurrent.futures import ThreadPoolExecutor
import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

THREADS_ENVVAR = "METAFIX_THREADS"


def thread_count(default=1):
    """Return the worker thread cap from the environment variable `METAFIX_THREADS`.

    Unset, empty or unparseable values fall back to `default`. Values below 1 are raised to 1.
    """
    raw = os.environ.get(THREADS_ENVVAR, "").strip()
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        logger.warning(f"ignoring {THREADS_ENVVAR}={raw!r}, expected an integer")
        return default
    return max(1, n)


def parallel_map(function, items, workers=None):
    """Map `function` over `items`, returning results in item order.

    `workers=None` reads `METAFIX_THREADS`. With one worker, runs inline.
    The output never depends on scheduling, so every item must carry its
    own random stream.
    """
    items = list(items)
    workers = thread_count() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(function, items))


# --------------------------------------------------------------------------------
# Seeded streams.
#
# Every stream is derived from a `SeedSequence` whose entropy is an integer
# tuple, so that e.g. cell 7 of a kernel build always gets the same stream
# no matter what other cells exist or in which order they are processed.

def child_seed(seed, *path):
    """Return a `SeedSequence` for the entropy tuple `(seed, *path)`."""
    entropy = [int(seed)] + [int(p) for p in path]
    if any(e < 0 for e in entropy):
        raise ValueError(f"seeds must be nonnegative, got {entropy}")
    return np.random.SeedSequence(entropy)


def make_rng(seed, *path):
    """Return a `numpy.random.Generator` for the entropy tuple `(seed, *path)`."""
    return np.random.default_rng(child_seed(seed, *path))


# --------------------------------------------------------------------------------

def as_vector(x, name="x"):
    """Convert `x` to a 1-D float array. Scalars become 1-vectors."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"`{name}` must be a vector, got shape {arr.shape}")
    return arr


def euclidean(x):
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def unit(x):
    """Return `x / ||x||`, or the zero vector if `x` is zero."""
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    if n == 0.0:
        return np.zeros_like(x)
    return x / n


def format_float(x, digits=6):
    """Format a float compactly, spelling out infinities."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}g}"


def format_vector(v, digits=6):
    """Format a vector as `(a, b, ...)`."""
    return "(" + ", ".join(format_float(float(x), digits) for x in v) + ")"
