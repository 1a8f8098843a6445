"""Empirical-type step processes ``scale * (F(x) - D(x))``.

``F`` counts sample points (each of mass ``1/N``) and ``D`` is a continuous
non-decreasing drift.  Between two consecutive jumps ``F`` is constant and
``D`` monotone, so suprema over the continuum are attained as one-sided
limits at jump points or at the domain ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gamma import check_order, gamma_cdf


@dataclass(frozen=True)
class GammaCDF:
    """Drift ``H_k``."""

    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", check_order(self.k))

    def __call__(self, x):
        return gamma_cdf(self.k, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Identity:
    """Uniform drift ``D(s) = s`` on ``[0, 1)``."""

    def __call__(self, x):
        return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class StepProcess:
    """Right-continuous step function minus a smooth drift.

    Parameters
    ----------
    jump_points : array_like
        Sample points; sorted on construction.
    drift : callable
        Vectorised non-decreasing drift with ``drift(0) == 0``; its limit at
        the right end of the domain is taken to be 1.
    scale : float
        Multiplier, usually ``sqrt(N)``.
    mass : float, optional
        Mass carried by each jump, ``1 / len(jump_points)`` by default.
    domain_end : float
        Right end of the domain: ``inf`` for ``[0, inf)`` and 1 for ``[0, 1)``.
    """

    jump_points: np.ndarray
    drift: Callable = field(default_factory=Identity)
    scale: float = 1.0
    mass: float | None = None
    domain_end: float = np.inf

    def __post_init__(self):
        pts = np.sort(np.asarray(self.jump_points, dtype=float).ravel())
        pts.setflags(write=False)
        object.__setattr__(self, "jump_points", pts)
        if self.mass is None:
            object.__setattr__(self, "mass", 1.0 / pts.size if pts.size else 0.0)

    @property
    def n_points(self) -> int:
        return self.jump_points.size

    def count(self, x, side="right"):
        """Number of jump points ``<= x`` (``side='right'``) or ``< x`` (``'left'``)."""
        return np.searchsorted(self.jump_points, np.asarray(x, dtype=float), side=side)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * (self.mass * self.count(x, "right") - self.drift(x))

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * (self.mass * self.count(x, "left") - self.drift(x))

    def end_value(self) -> float:
        """Limit of the process at the right end of its domain."""
        inside = np.count_nonzero(self.jump_points < self.domain_end)
        return self.scale * (self.mass * inside - 1.0)

    def sup_norm(self) -> float:
        """Exact ``sup |process|`` over the whole domain."""
        pts = np.unique(self.jump_points)
        cands = [abs(self.end_value()), abs(float(self(0.0)))]
        if pts.size:
            drift = self.drift(pts)
            hi = self.mass * self.count(pts, "right") - drift
            lo = self.mass * self.count(pts, "left") - drift
            cands.append(self.scale * max(np.max(np.abs(hi)), np.max(np.abs(lo))))
        return float(max(cands))

    def scaled(self, factor: float) -> "StepProcess":
        """The same process multiplied by ``factor``."""
        return StepProcess(self.jump_points, self.drift, self.scale * factor, self.mass, self.domain_end)
