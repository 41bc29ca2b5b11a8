# -*- coding: utf-8; -*-
"""Base objectives: what the simulated agent pursues at the base level.

Each objective has a value `J(x, t) >= 0` with optimum 0, the optimum
location `x*(t)` nearest to a given point, and a satisfaction
`exp(-J(x, t))` in `(0, 1]`.
"""

__all__ = ["Objective", "QuadraticWell", "MovingWell", "Bimodal", "make_objective", "OBJECTIVES"]

from dataclasses import dataclass
import math

import numpy as np

from .goalspace import DomainBox


class Objective:
    """Base class for objectives over a `DomainBox`."""
    box: DomainBox
    width: float

    def centers(self, t):
        """The well centers at time `t`, shape `(k, dim)`."""
        raise NotImplementedError

    def value(self, x, t=0):
        x = np.asarray(x, dtype=float)
        d2 = np.sum((self.centers(t) - x) ** 2, axis=1).min()
        return float(d2 / self.width ** 2)

    def optimum(self, x, t=0):
        """The optimum nearest to `x` at time `t`."""
        x = np.asarray(x, dtype=float)
        c = self.centers(t)
        return c[int(np.argmin(np.sum((c - x) ** 2, axis=1)))].copy()

    def satisfaction(self, x, t=0):
        return math.exp(-self.value(x, t))


@dataclass(frozen=True)
class QuadraticWell(Objective):
    box: DomainBox
    center: tuple
    width: float = 0.25

    def centers(self, t):
        return self.box.clamp(np.array(self.center, dtype=float))[None, :]


@dataclass(frozen=True)
class MovingWell(Objective):
    """A well whose center moves with constant velocity, reflected at the box walls."""
    box: DomainBox
    center: tuple
    velocity: tuple
    width: float = 0.25

    def centers(self, t):
        lo, span = self.box.lo_array, self.box.widths
        raw = np.array(self.center, dtype=float) + t * np.array(self.velocity, dtype=float) - lo
        # reflect: fold the coordinate into [0, 2 span), then mirror the upper half
        folded = np.mod(raw, 2.0 * span)
        return (lo + np.where(folded > span, 2.0 * span - folded, folded))[None, :]


@dataclass(frozen=True)
class Bimodal(Objective):
    """Two wells; the nearer one counts."""
    box: DomainBox
    centers_: tuple
    width: float = 0.25

    def centers(self, t):
        return self.box.clamp(np.array(self.centers_, dtype=float))


OBJECTIVES = ("quadratic-well", "moving-well", "bimodal")


def make_objective(kind, box, center=None, width=0.25, velocity=None, centers=None):
    """Build an objective from its configuration identifier and parameters."""
    center = tuple(center) if center is not None else tuple(box.center)
    if kind == "quadratic-well":
        return QuadraticWell(box, center, width)
    if kind == "moving-well":
        velocity = tuple(velocity) if velocity is not None else (0.0,) * box.dim
        return MovingWell(box, center, velocity, width)
    if kind == "bimodal":
        if centers is None:
            lo, hi = box.lo_array, box.hi_array
            centers = (tuple(lo + 0.25 * (hi - lo)), tuple(lo + 0.75 * (hi - lo)))
        return Bimodal(box, tuple(tuple(c) for c in centers), width)
    raise ValueError(f"unknown objective {kind!r}; expected one of {OBJECTIVES}")
