# -*- coding: utf-8; -*-
"""Built-in test maps for the fixed-point solvers.

Each entry bundles the map, its domain, a default start point for iteration,
and the fixed point when it is known in closed form. All 2-D maps are
continuous self-maps of the unit square.
"""

__all__ = ["TestMap", "get_map", "map_names", "square_suite"]

from dataclasses import dataclass
import math

import numpy as np

from .goalspace import DomainBox

MIDPOINT_ANCHOR = (0.3, 0.7)
ROTATION_PIVOT = (0.4, 0.55)
ROTATION_ANGLE = math.pi / 3
LOGISTIC_RATE = 2.88
LOGISTIC_OFFSET = 0.05


@dataclass(frozen=True)
class TestMap:
    __test__ = False  # not a pytest class

    name: str
    function: object
    domain: DomainBox
    start: tuple
    fixed_point: tuple = None

    def __call__(self, x):
        return self.function(np.asarray(x, dtype=float))


def _identity(x):
    return x.copy()


def _midpoint(x):
    return 0.5 * (x + np.array(MIDPOINT_ANCHOR))


def _rotation(x):
    c, s = math.cos(ROTATION_ANGLE), math.sin(ROTATION_ANGLE)
    R = np.array([[c, -s], [s, c]])
    p = np.array(ROTATION_PIVOT)
    return np.clip(p + 0.5 * R @ (x - p), 0.0, 1.0)


def _logistic(x):
    return np.clip(LOGISTIC_OFFSET + LOGISTIC_RATE * x * (1.0 - x), 0.0, 1.0)


def _logistic_fixed_point():
    # positive root of r x^2 + (1 - r) x - offset = 0
    r, b = LOGISTIC_RATE, LOGISTIC_OFFSET
    return ((r - 1.0) + math.sqrt((r - 1.0) ** 2 + 4.0 * r * b)) / (2.0 * r)


_unit_square = DomainBox.unit(2)
_xl = _logistic_fixed_point()

_maps = {m.name: m for m in [
    TestMap("cos1d", np.cos, DomainBox((0.0,), (1.0,)), (0.0,)),
    TestMap("halve1d", lambda x: 0.5 * x, DomainBox((-1.0,), (1.0,)), (1.0,), (0.0,)),
    # no fixed point, and not a self-map of its box
    TestMap("shift1d", lambda x: x + 1.0, DomainBox((0.0,), (1.0,)), (0.0,)),
    TestMap("identity2d", _identity, _unit_square, (0.25, 0.75)),
    TestMap("midpoint2d", _midpoint, _unit_square, (0.0, 0.0), MIDPOINT_ANCHOR),
    TestMap("rotation2d", _rotation, _unit_square, (1.0, 1.0), ROTATION_PIVOT),
    TestMap("logistic2d", _logistic, _unit_square, (0.5, 0.5), (_xl, _xl)),
]}


def map_names():
    return sorted(_maps)


def get_map(name):
    """Look up a built-in test map by name. Raises `KeyError` for unknown names."""
    try:
        return _maps[name]
    except KeyError:
        raise KeyError(f"unknown test map {name!r}; available: {', '.join(map_names())}")


def square_suite():
    """The four continuous self-maps of the unit square."""
    return [_maps[name] for name in ("identity2d", "midpoint2d", "rotation2d", "logistic2d")]
