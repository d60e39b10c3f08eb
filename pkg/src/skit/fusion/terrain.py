"""Analytic height fields: a flat base plus optional Gaussian ridges."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Ridge:
    """A straight ridge with a Gaussian cross-section.

    ``x0, y0`` is a point on the crest line, ``heading`` its direction in
    radians, ``sigma`` the cross-section width in meters.
    """

    x0: float
    y0: float
    heading: float
    height: float
    sigma: float

    def __call__(self, x, y):
        nx, ny = -math.sin(self.heading), math.cos(self.heading)
        d = (np.asarray(x) - self.x0) * nx + (np.asarray(y) - self.y0) * ny
        return self.height * np.exp(-0.5 * (d / self.sigma) ** 2)


@dataclass(frozen=True)
class Terrain:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    base: float = 0.0
    ridges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("empty terrain extent")
        object.__setattr__(self, "ridges", tuple(self.ridges))

    def height(self, x, y):
        h = np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(self.base))
        for r in self.ridges:
            h = h + r(x, y)
        return h if h.shape else float(h)

    def contains(self, x, y) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max
