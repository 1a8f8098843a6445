"""Dyadic quantile coupling of a uniform empirical process with a Brownian bridge.

The unit interval is split top-down into dyadic cells.  At every cell one
standard normal ``Z`` drives both the bridge midpoint displacement and the
number of sample points falling into the left half, the latter through the
binomial quantile transform ``Bin(count, 1/2)^{-1}(Phi(Z))``.  Large ``Z``
means a high bridge midpoint and many points on the left, which keeps
``sqrt(N) (F_N - id)`` and the bridge close at every dyadic node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import bdtr, bdtrc, ndtr

from .errors import CapacityError, DomainError
from .gaussian import BridgePath
from .rng import RngStream

MEMORY_BUDGET_BYTES = 2 * 1024**3
_EPS = float(np.finfo(float).eps)


def binomial_quantile(n: int, p: float, u: float) -> int:
    """Smallest ``m`` with ``P(Bin(n, p) <= m) >= u``.

    Accumulates the pmf term by term from ``m = 0``, each term formed in log
    space.  Linear in the answer, so meant for moderate ``n``; the coupling
    itself uses the vectorised :func:`binomial_quantile_half`.
    """
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    if u == 0.0 or n == 0:
        return 0
    if p == 0.0:
        return 0
    if p == 1.0 or u == 1.0:
        return n
    log_p, log_q = math.log(p), math.log1p(-p)
    lg_n = math.lgamma(n + 1.0)

    def pmf(m):
        return math.exp(lg_n - math.lgamma(m + 1.0) - math.lgamma(n - m + 1.0) + m * log_p + (n - m) * log_q)

    # a term's relative error is about eps times the magnitude of its exponent; the slack
    # covers that plus the summation so that exact ties resolve to the smaller m
    term_err = 4.0 * _EPS * (1.0 + lg_n + n * max(-log_p, -log_q))
    if u <= 0.5:
        cdf = 0.0
        for m in range(n + 1):
            cdf += pmf(m)
            if cdf >= u * (1.0 - term_err - (m + 1) * _EPS):
                return m
        return n
    # above the median compare the upper tail with 1 - u, which is exact there
    target = 1.0 - u
    tail = 0.0
    for m in range(n, 0, -1):
        tail += pmf(m)
        if tail > target * (1.0 + term_err + (n - m + 1) * _EPS):
            return m
    return 0


def binomial_quantile_half(counts, u) -> np.ndarray:
    """Vectorised ``binomial_quantile(counts, 1/2, u)``.

    Starts from the normal approximation and steps by one until the
    defining inequalities hold, with the CDF taken from ``scipy.special.bdtr``
    below the median and the survival function ``bdtrc`` above it.
    """
    n = np.asarray(counts, dtype=np.int64)
    u = np.asarray(u, dtype=float)
    upper = u > 0.5
    lo_target = u * (1.0 - 64.0 * _EPS)
    hi_target = (1.0 - u) * (1.0 + 64.0 * _EPS)

    def reaches(m):
        # P(Bin(n, 1/2) <= m) >= u, up to a few ulps of slack so exact ties hold
        m = np.clip(m, 0, n)
        return np.where(upper, bdtrc(m, n, 0.5) <= hi_target, bdtr(m, n, 0.5) >= lo_target)

    z = np.clip(np.sqrt(2.0) * _erfinv_safe(2.0 * u - 1.0), -40.0, 40.0)
    m = np.clip(np.floor(0.5 * n + 0.5 * np.sqrt(n) * z), 0, n).astype(np.int64)
    for _ in range(10_000):
        down = (m > 0) & reaches(m - 1)
        if not np.any(down):
            break
        m = m - down
    for _ in range(10_000):
        up = (m < n) & ~reaches(m)
        if not np.any(up):
            break
        m = m + up
    return np.where(u <= 0.0, 0, np.where(u >= 1.0, n, m))


def _erfinv_safe(y):
    from scipy.special import erfinv

    return erfinv(np.clip(y, -1.0 + 1e-16, 1.0 - 1e-16))


@dataclass(frozen=True, eq=False)
class CoupledPair:
    """Sorted uniforms and a bridge on the dyadic grid of ``depth`` levels."""

    uniforms: np.ndarray
    bridge: BridgePath
    depth: int
    leaf_counts: np.ndarray

    @property
    def n_points(self) -> int:
        return self.uniforms.size


def default_depth(N: int) -> int:
    return max(4, math.ceil(math.log2(max(N, 1))))


def dyadic_coupling(rng: RngStream, N: int, depth: int | None = None, *, normals=None) -> CoupledPair:
    """Couple ``N`` uniforms with a Brownian bridge through dyadic splitting.

    Parameters
    ----------
    rng : RngStream
        Source of the node normals and of the within-leaf positions.
    N : int
        Sample size.
    depth : int, optional
        Number of dyadic levels ``L``; defaults to ``max(4, ceil(log2 N))``.
    normals : array_like, optional
        The ``2**L - 1`` node normals in breadth-first order, for tests.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    L = default_depth(N) if depth is None else int(depth)
    if L < 1 or L > 40:
        raise DomainError(f"depth must lie in [1, 40], got {L}")
    need = 8 * (N + 2 * 2**L)
    if need > MEMORY_BUDGET_BYTES:
        raise CapacityError(f"coupling needs about {need} bytes, budget is {MEMORY_BUDGET_BYTES}")
    gen = rng.generator()
    if normals is None:
        normals = gen.standard_normal(2**L - 1)
    else:
        normals = np.asarray(normals, dtype=float)
        if normals.shape != (2**L - 1,):
            raise DomainError(f"normals must have shape ({2**L - 1},)")
    counts = np.array([N], dtype=np.int64)
    values = np.zeros(2)  # bridge at the cell boundaries of the current level
    offset = 0
    for level in range(L):
        width = 2.0**-level
        z = normals[offset: offset + counts.size]
        offset += counts.size
        mid = 0.5 * (values[:-1] + values[1:]) + 0.5 * math.sqrt(width) * z
        left = binomial_quantile_half(counts, ndtr(z))
        nxt = np.empty(2 * counts.size, dtype=np.int64)
        nxt[0::2] = left
        nxt[1::2] = counts - left
        counts = nxt
        merged = np.empty(2 * values.size - 1)
        merged[0::2] = values
        merged[1::2] = mid
        values = merged
    n_leaves = counts.size
    leaf = np.repeat(np.arange(n_leaves), counts)
    uniforms = np.sort((leaf + gen.random(N)) / n_leaves)
    values[0] = values[-1] = 0.0
    grid = np.arange(n_leaves + 1) / n_leaves
    return CoupledPair(uniforms, BridgePath(grid, values), L, counts)


def empirical_minus_bridge(uniforms, bridge: BridgePath, s, side="right"):
    """``sqrt(N) (F_N(s) - s) - B(s)`` with ``B`` linearly interpolated."""
    u = np.asarray(uniforms, dtype=float)
    s = np.asarray(s, dtype=float)
    f = np.searchsorted(u, s, side=side) / u.size
    return math.sqrt(u.size) * (f - s) - np.interp(s, bridge.grid, bridge.values)


def coupling_distance(pair: CoupledPair) -> float:
    """Exact ``sup_{0 <= s <= 1} |sqrt(N)(F_N(s) - s) - B(s)|``.

    Between consecutive uniforms and grid nodes the difference is linear, so
    the supremum is a one-sided limit at one of those points.
    """
    cand = np.concatenate((pair.uniforms, pair.bridge.grid))
    right = empirical_minus_bridge(pair.uniforms, pair.bridge, cand, "right")
    left = empirical_minus_bridge(pair.uniforms, pair.bridge, cand, "left")
    return float(max(np.max(np.abs(right)), np.max(np.abs(left))))
