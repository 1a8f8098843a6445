r"""Brownian bridges and the Shorack process of parameter k.

A k-Shorack process is the centred Gaussian process with covariance

.. math::

    \min(H_k(x), H_k(y)) - H_k(x) H_k(y) - \psi(x)\psi(y)/k .

It is built from a bridge ``B`` as

.. math::

    W(x) = B(H_k(x)) - \frac{\psi(x)}{k} \int_0^\infty B(H_k(t))\,dt ,

using ``Cov(B(H_k(x)), I) = psi(x)`` and ``Var(I) = k`` for the integral
``I``.  W is linear in the bridge values, so the map bridge -> W is
assembled once per grid as a matrix and applied to batches of bridges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, ResolutionError
from .gamma import check_order, gamma_cdf, gamma_pdf, gamma_quantile, gamma_sf, psi, quantile_upper_bracket
from .rng import RngStream

DEFAULT_GRID_POINTS = 4096
MAX_PROB_STEP = 1.0 / 256


@dataclass(frozen=True, eq=False)
class BridgePath:
    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class ShorackPath:
    k: int
    x_grid: np.ndarray
    values: np.ndarray
    integral_term: float
    meta: dict = field(default_factory=dict)


def _check_grid(grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise DomainError("grid must be a 1-d array with at least two points")
    if g[0] != 0.0 or g[-1] != 1.0:
        raise DomainError("grid must start at 0 and end at 1")
    if np.any(np.diff(g) <= 0):
        raise DomainError("grid must be strictly increasing")
    return g


def _bridge_from_normals(grid, z):
    dw = np.sqrt(np.diff(grid)) * z
    w = np.concatenate((np.zeros(z.shape[:-1] + (1,)), np.cumsum(dw, axis=-1)), axis=-1)
    b = w - grid * w[..., -1:]
    b[..., -1] = 0.0
    return b


def sample_brownian_bridge(rng: RngStream, grid) -> BridgePath:
    """Exact finite-dimensional draw of a Brownian bridge on ``grid``."""
    g = _check_grid(grid)
    z = rng.generator().standard_normal(g.size - 1)
    return BridgePath(g, _bridge_from_normals(g, z))


def sample_brownian_bridges(rng: RngStream, grid, size: int) -> np.ndarray:
    """``size`` independent bridges on ``grid`` as a ``(size, len(grid))`` array."""
    g = _check_grid(grid)
    z = rng.generator().standard_normal((size, g.size - 1))
    return _bridge_from_normals(g, z)


def refine_bridge(bridge: BridgePath, new_points, rng: RngStream) -> BridgePath:
    """Insert points into a bridge path by exact conditional sampling.

    The existing values are kept, so a coarse and a refined path share their
    randomness (common random numbers).
    """
    new = np.setdiff1d(np.asarray(new_points, dtype=float), bridge.grid)
    if new.size == 0:
        return bridge
    if new[0] <= 0.0 or new[-1] >= 1.0:
        raise DomainError("new points must lie strictly inside (0, 1)")
    gen = rng.generator()
    grid, vals = bridge.grid, bridge.values
    # Markov property: condition each insertion on its current neighbours,
    # one insertion per gap and round
    pending = new
    while pending.size:
        slot = np.searchsorted(grid, pending)
        first = np.concatenate(([True], slot[1:] != slot[:-1]))
        s = pending[first]
        j = slot[first]
        sl, sr = grid[j - 1], grid[j]
        bl, br = vals[j - 1], vals[j]
        w = (s - sl) / (sr - sl)
        mean = bl + w * (br - bl)
        var = (s - sl) * (sr - s) / (sr - sl)
        drawn = mean + np.sqrt(var) * gen.standard_normal(s.size)
        grid = np.insert(grid, j, s)
        vals = np.insert(vals, j, drawn)
        pending = pending[~first]
    return BridgePath(grid, vals)


def shorack_grid(k: int, n_points: int = DEFAULT_GRID_POINTS, include=()) -> np.ndarray:
    """Abscissae on ``[0, T]``, ``T = k + 40 sqrt(k) + 40``, for quadrature.

    Point density is proportional to ``0.98 h_k**(1/3) / c + 0.02 / T``:
    the ``h_k**(1/3)`` part minimises the variance of the trapezoid error
    of the bridge integral, the uniform part keeps the tail covered.
    """
    k = check_order(k)
    top = quantile_upper_bracket(k)
    fine = np.linspace(0.0, top, 64 * n_points + 1)
    w = gamma_pdf(k, fine) ** (1.0 / 3.0)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(fine))))
    cum = 0.98 * cum / cum[-1] + 0.02 * fine / top
    x = np.interp(np.linspace(0.0, 1.0, n_points), cum, fine)
    x[0], x[-1] = 0.0, top
    extra = np.asarray(include, dtype=float)
    if np.any(extra < 0) or np.any(extra > top):
        raise DomainError(f"included points must lie in [0, {top}]")
    return np.unique(np.concatenate((x, extra)))


def bridge_grid_for(k: int, x_grid) -> np.ndarray:
    """Probability grid ``H_k(x_grid)`` closed with 0 and 1 (duplicates dropped)."""
    s = gamma_cdf(k, np.asarray(x_grid, dtype=float))
    return np.unique(np.concatenate(([0.0], s[s < 1.0], [1.0])))


def _tail_bound(k, top):
    # E|int_T^inf B(H(t)) dt| <= int_T^inf sqrt(1 - H(t)) dt
    t = np.linspace(top, top + 100.0 + 10.0 * math.sqrt(k), 4001)
    return float(trapezoid(np.sqrt(gamma_sf(k, t)), t))


@lru_cache(maxsize=16)
def _operator(k, grid_bytes, x_bytes):
    grid = np.frombuffer(grid_bytes)
    x_grid = np.frombuffer(x_bytes)
    top = quantile_upper_bracket(k)
    inner = grid < 1.0
    xs = gamma_quantile(k, grid[inner])
    keep = xs < top
    nodes = np.concatenate((xs[keep], [top]))
    idx = np.flatnonzero(inner)[keep]
    probs = grid[idx]
    if np.any(np.diff(probs) > MAX_PROB_STEP) or gamma_cdf(k, top) - probs[-1] > MAX_PROB_STEP:
        raise ResolutionError(f"bridge grid has H_k-increments above {MAX_PROB_STEP}")
    # trapezoid weights; B(H(T)) is interpolated between the last node and B(1) = 0
    dx = np.diff(nodes)
    tw = np.zeros(nodes.size)
    tw[:-1] += 0.5 * dx
    tw[1:] += 0.5 * dx
    weights = np.zeros(grid.size)
    np.add.at(weights, idx, tw[:-1])
    s_top = gamma_cdf(k, top)
    j = np.searchsorted(grid, s_top, side="right")
    lam = 0.0 if j >= grid.size else (s_top - grid[j - 1]) / (grid[j] - grid[j - 1])
    weights[j - 1] += tw[-1] * (1.0 - lam)
    if j < grid.size:
        weights[j] += tw[-1] * lam
    # linear interpolation of the bridge at H(x)
    s_x = gamma_cdf(k, x_grid)
    interp = np.zeros((x_grid.size, grid.size))
    pos = np.clip(np.searchsorted(grid, s_x, side="right"), 1, grid.size - 1)
    frac = (s_x - grid[pos - 1]) / (grid[pos] - grid[pos - 1])
    rows = np.arange(x_grid.size)
    interp[rows, pos - 1] += 1.0 - frac
    interp[rows, pos] += frac
    op = interp - np.outer(psi(k, x_grid) / k, weights)
    op.setflags(write=False)
    weights.setflags(write=False)
    return op, weights, _tail_bound(k, top)


def shorack_operator(k: int, grid, x_grid):
    """Matrix ``A`` and quadrature weights ``w`` with ``W = A @ B``, ``I = w @ B``."""
    k = check_order(k)
    g = _check_grid(grid)
    x = np.ascontiguousarray(x_grid, dtype=float)
    if x.ndim != 1 or np.any(x < 0):
        raise DomainError("x_grid must be a 1-d array of non-negative reals")
    op, weights, tail = _operator(k, np.ascontiguousarray(g).tobytes(), x.tobytes())
    return op, weights, tail


def shorack_from_bridge(bridge: BridgePath, k: int, x_grid) -> ShorackPath:
    """Shorack path ``W(x) = B(H_k(x)) - psi(x)/k * I`` on ``x_grid``.

    ``I`` is the trapezoid rule for ``int_0^T B(H_k(t)) dt`` on the x-image
    of the bridge grid, with ``T = k + 40 sqrt(k) + 40``; ``meta['tail_bound']``
    bounds the expected size of the neglected tail.
    """
    op, weights, tail = shorack_operator(k, bridge.grid, x_grid)
    values = op @ bridge.values
    return ShorackPath(k=check_order(k), x_grid=np.asarray(x_grid, dtype=float), values=values,
                       integral_term=float(weights @ bridge.values),
                       meta={"tail_bound": tail, "truncation": quantile_upper_bracket(k)})


def sample_shorack(rng: RngStream, k: int, x_points, n_grid: int = DEFAULT_GRID_POINTS) -> ShorackPath:
    """Draw one Shorack path observed at ``x_points``."""
    xg = shorack_grid(k, n_grid, include=x_points)
    bridge = sample_brownian_bridge(rng, bridge_grid_for(k, xg))
    return shorack_from_bridge(bridge, k, np.asarray(x_points, dtype=float))


def sample_shorack_batch(rng: RngStream, k: int, x_points, size: int, n_grid: int = DEFAULT_GRID_POINTS):
    """``size`` Shorack paths at ``x_points``; returns ``(values, integrals)``."""
    xg = shorack_grid(k, n_grid, include=x_points)
    grid = bridge_grid_for(k, xg)
    op, weights, _ = shorack_operator(k, grid, np.asarray(x_points, dtype=float))
    b = sample_brownian_bridges(rng, grid, size)
    return b @ op.T, b @ weights


def shorack_covariance(k: int, x, y):
    """``min(H(x), H(y)) - H(x) H(y) - psi(x) psi(y) / k``, elementwise."""
    k = check_order(k)
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if np.any(xa < 0) or np.any(ya < 0):
        raise DomainError("covariance arguments must be non-negative")
    lo, hi = np.minimum(xa, ya), np.maximum(xa, ya)
    # min(Hx, Hy) - Hx Hy = H(lo) (1 - H(hi)); the survival function avoids cancellation in the tail
    res = gamma_cdf(k, lo) * gamma_sf(k, hi) - psi(k, xa) * psi(k, ya) / k
    res = np.asarray(res, dtype=float)
    return float(res) if res.ndim == 0 else res
