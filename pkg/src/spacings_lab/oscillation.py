r"""Oscillation moduli of step-minus-identity processes on ``[0, 1)``.

For ``R(s) = scale * (F(s) - s)`` with ``F`` the (right-continuous) mass
function of sorted points ``V``

.. math::

    \kappa(d, R) = \sup_{0 \le h \le d}\ \sup_{0 \le s < 1 - h} |R(s + h) - R(s)|,
    \qquad
    \kappa'(d, R) = \sup_{c_1 d < u - t < c_2 d} \frac{|R(u) - R(t)|}{\sqrt{u - t}} .

Increments over a window ``(s, s + h]`` equal ``scale * (mass * count - h)``.
For a fixed captured set of points the increment is monotone in ``h``, so
both suprema reduce to finitely many windows whose ends sit at sample points
(one-sided), at ``0`` or ``1-`` or at the width limits.  Suprema over open
constraints are reported as their closed-boundary limits.

Also here: the rate sequences ``a_N``, ``a_N°``, ``q_N``, ``b`` and
finite-sample surrogates of the window conditions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .gamma import check_order, shorack_constant
from .process import Identity, StepProcess

STUTE_THRESHOLDS = {"s1_min_Nd": 100.0, "s2_max_log_ratio": 0.1, "s3_min_log_ratio": 3.0, "s4_min_q_over_a": 3.0}
S5_DELTA = 2.5


@dataclass(frozen=True)
class WindowSpec:
    d: float
    c1: float
    c2: float

    def __post_init__(self):
        if not 0.0 < self.d < 1.0:
            raise DomainError(f"d must lie in (0, 1), got {self.d!r}")
        if not 0.0 < self.c1 <= self.c2:
            raise DomainError(f"need 0 < c1 <= c2, got c1={self.c1!r}, c2={self.c2!r}")


class KappaResult(NamedTuple):
    value: float
    witness: tuple  # (s, h): window (s, s + h], one-sided limits at sample points


def _check_reduced(process: StepProcess):
    if not isinstance(process.drift, Identity) or process.domain_end != 1.0:
        raise DomainError("oscillation moduli need an identity-drift process on [0, 1)")
    v = process.jump_points
    if v.size and (v[0] < 0.0 or v[-1] >= 1.0):
        raise DomainError("jump points must lie in [0, 1)")
    return v


def _window_max(values, right_end, skip=0):
    """Max and argmax of ``values[i + skip : right_end[i] + 1]`` for every ``i``.

    ``right_end`` must be non-decreasing.  Monotone-deque sweep from the
    right; empty windows give ``-inf`` and argmax ``-1``.
    """
    n = values.size
    best = np.full(n, -np.inf)
    arg = np.full(n, -1, dtype=np.int64)
    dq = deque()
    nxt = n - 1
    for i in range(n - 1, -1, -1):
        while nxt >= i + skip:
            while dq and values[dq[-1]] <= values[nxt]:
                dq.pop()
            dq.append(nxt)
            nxt -= 1
        while dq and dq[0] > right_end[i]:
            dq.popleft()
        if dq:
            best[i] = values[dq[0]]
            arg[i] = dq[0]
    return best, arg


def kappa(process: StepProcess, d: float) -> KappaResult:
    """Exact oscillation modulus ``kappa(d, R)`` with an attaining window.

    Positive increments: a window shrinks onto a run of points
    ``V_i..V_j`` with ``V_j - V_i <= d``, giving ``(j-i+1) mass - (V_j - V_i)``.
    Negative increments: either a full-width window ``(s, s+d]`` starting at
    ``0`` or just at a point, or an empty-interior gap ``(E_a, E_b)`` of width
    at most ``d`` between consecutive entries of ``[0, V, 1]``.
    """
    if not 0.0 < d < 1.0:
        raise DomainError(f"d must lie in (0, 1), got {d!r}")
    v = _check_reduced(process)
    m = process.mass
    n = v.size
    best, witness = 0.0, (0.0, 0.0)

    if n:
        # positive part: max_j in [i, r(i)] of ((j+1) m - V_j) - (i m - V_i)
        idx = np.arange(n)
        g = (idx + 1) * m - v
        right = np.searchsorted(v, v + d, side="right") - 1
        top, arg = _window_max(g, right)
        val = top - (idx * m - v)
        i = int(np.argmax(val))
        if val[i] > best:
            best, witness = float(val[i]), (float(v[i]), float(v[arg[i]] - v[i]))

    # negative part (i): full windows (s, s + d] with s in {0} u {V_a < 1 - d}
    starts = np.concatenate(([0.0], v[v < 1.0 - d]))
    cnt = np.searchsorted(v, starts + d, side="right") - np.searchsorted(v, starts, side="right")
    val = d - m * cnt
    a = int(np.argmax(val))
    if val[a] > best:
        best, witness = float(val[a]), (float(starts[a]), float(d))

    # negative part (ii): gaps (E_a, E_b) of width <= d holding b - a - 1 points
    ext = np.concatenate(([0.0], v, [1.0]))
    pos = np.arange(ext.size)
    f = ext - pos * m
    right = np.searchsorted(ext, ext + d, side="right") - 1
    top, arg = _window_max(f, right, skip=1)
    val = top - f + m
    a = int(np.argmax(val))
    if val[a] > best:
        best, witness = float(val[a]), (float(ext[a]), float(ext[arg[a]] - ext[a]))

    return KappaResult(float(process.scale * best), witness)


def _sided_values(process: StepProcess, points):
    """``(R(p), R(p-))`` at ``points``; ``R(1-)`` is used for ``p = 1``."""
    right = process(points)
    left = process.left_limit(points)
    right = np.where(points >= 1.0, left, right)
    left = np.where(points <= 0.0, right, left)
    return right, left


def kappa_prime(process: StepProcess, spec: WindowSpec, *, chunk: int = 1 << 20) -> float:
    """Exact normalised modulus ``kappa'(d, R)`` for widths in ``[c1 d, c2 d]``.

    For a fixed captured set ``|count m - w| / sqrt(w)`` is monotone on each
    side of ``w = count m``, so the supremum sits at a pair of vertices
    (points, ``0`` or ``1-``, either side) or at a width limit ``c1 d`` /
    ``c2 d`` with one end at a vertex.
    """
    v = _check_reduced(process)
    lo_w, hi_w = spec.c1 * spec.d, spec.c2 * spec.d
    nodes = np.unique(np.concatenate(([0.0], v, [1.0])))
    r_right, r_left = _sided_values(process, nodes)
    best = 0.0

    # vertex pairs
    first = np.searchsorted(nodes, nodes + lo_w, side="left")
    last = np.searchsorted(nodes, nodes + hi_w, side="right")
    lens = np.maximum(last - first, 0)
    a_all = np.repeat(np.arange(nodes.size), lens)
    start = np.cumsum(lens) - lens
    b_all = first[a_all] + (np.arange(a_all.size) - start[a_all])
    for s in range(0, a_all.size, chunk):
        a, b = a_all[s: s + chunk], b_all[s: s + chunk]
        w = nodes[b] - nodes[a]
        ok = w > 0
        a, b, w = a[ok], b[ok], w[ok]
        if not a.size:
            continue
        root = np.sqrt(w)
        for ta in (r_right[a], r_left[a]):
            for ub in (r_right[b], r_left[b]):
                best = max(best, float(np.max(np.abs(ub - ta) / root)))

    # width limits anchored at a vertex on either end
    for w in {lo_w, hi_w}:
        if w >= 1.0:
            continue
        t = nodes[nodes + w < 1.0]
        if t.size:
            diff_r = process(t + w) - process(t)
            diff_l = process.left_limit(t + w) - _sided_values(process, t)[1]
            best = max(best, float(np.max(np.abs(diff_r))) / math.sqrt(w),
                       float(np.max(np.abs(diff_l))) / math.sqrt(w))
        u = nodes[nodes - w >= 0.0]
        if u.size:
            ur, ul = _sided_values(process, u)
            tl = np.where(u - w <= 0.0, process(u - w), process.left_limit(u - w))
            diff_r = ur - process(u - w)
            diff_l = ul - tl
            best = max(best, float(np.max(np.abs(diff_r))) / math.sqrt(w),
                       float(np.max(np.abs(diff_l))) / math.sqrt(w))
    return best


@dataclass(frozen=True)
class RateSequences:
    N: int
    d: float
    a_N: float
    a_N_strong: float
    q_N: float
    b: float


def rate_values(N: int, d: float) -> RateSequences:
    """Closed-form rate sequences at sample size ``N`` and width ``d``.

    ``b(d)`` is NaN when ``log log (1/d)`` is not positive (``d >= 1/e``).
    """
    if not isinstance(N, (int, np.integer)) or N < 16:
        raise DomainError(f"N must be an integer >= 16, got {N!r}")
    if not 0.0 < d < 1.0:
        raise DomainError(f"d must lie in (0, 1), got {d!r}")
    ln = math.log(N)
    lln = math.log(ln)
    a_n = math.sqrt(ln) * (2.0 * lln) ** 0.25 * N**-0.25
    a_strong = ln**0.75 * N**-0.25
    q = math.sqrt(2.0 * d * math.log(1.0 / d))
    inner = math.log(math.log(1.0 / d)) if d < 1.0 / math.e else float("nan")
    b = math.sqrt(2.0 * d * inner) if inner > 0 else float("nan")
    return RateSequences(int(N), float(d), a_n, a_strong, q, b)


def shift_scale(N: int, k: int) -> float:
    """``(2 log log(N k) / N)**(1/2) * K(k)``, the scale of random shifts ``mu - 1``."""
    k = check_order(k)
    if N * k < 16:
        raise DomainError("need N k >= 16")
    return math.sqrt(2.0 * math.log(math.log(N * k)) / N) * shorack_constant(k)


@dataclass(frozen=True)
class StuteCheck:
    s1: bool
    s2: bool
    s3: bool
    s4: bool
    s5: bool
    s5_literal: bool
    values: dict
    thresholds: dict = field(default_factory=lambda: dict(STUTE_THRESHOLDS, s5_delta=S5_DELTA))

    @property
    def all_s1_s4(self) -> bool:
        return self.s1 and self.s2 and self.s3 and self.s4


def _s5_bound(k, delta):
    # k**(k(delta-2)) exp(-k**delta / 2), in log space
    return k * (delta - 2.0) * math.log(k) - 0.5 * k**delta


def stute_conditions_check(N: int, d: float, k: int) -> StuteCheck:
    """Finite-``N`` surrogates of the window-width conditions.

    s1: ``N d >= 100``; s2: ``log(1/d) / (N d) <= 0.1``;
    s3: ``log(1/d) / log log N >= 3``; s4: ``q_N / a_N >= 3``;
    s5: ``d < k**(k(delta-2)) exp(-k**delta / 2)`` with ``delta = 2.5``,
    taken as satisfied for ``k <= 2``; ``s5_literal`` is the plain inequality.
    """
    k = check_order(k)
    rates = rate_values(N, d)
    t = STUTE_THRESHOLDS
    nd = N * d
    log_ratio_2 = math.log(1.0 / d) / nd
    log_ratio_3 = math.log(1.0 / d) / math.log(math.log(N))
    q_over_a = rates.q_N / rates.a_N
    log_bound = _s5_bound(k, S5_DELTA)
    s5_literal = math.log(d) < log_bound
    return StuteCheck(
        s1=nd >= t["s1_min_Nd"],
        s2=log_ratio_2 <= t["s2_max_log_ratio"],
        s3=log_ratio_3 >= t["s3_min_log_ratio"],
        s4=q_over_a >= t["s4_min_q_over_a"],
        s5=True if k <= 2 else s5_literal,
        s5_literal=s5_literal,
        values={"Nd": nd, "log_ratio_s2": log_ratio_2, "log_ratio_s3": log_ratio_3,
                "q_over_a": q_over_a, "s5_log_bound": log_bound},
    )


class MwsWindow(NamedTuple):
    d: float
    bound: float


def mws_window(N: int, alpha: float, c: float) -> MwsWindow:
    """Width ``alpha (log N)**(-c)`` and the lim-sup bound ``(1 + c)**(1/2)`` for ``kappa / q_N``."""
    if not isinstance(N, (int, np.integer)) or N < 16:
        raise DomainError(f"N must be an integer >= 16, got {N!r}")
    if not alpha > 0 or not c > 0:
        raise DomainError("alpha and c must be positive")
    d = alpha * math.log(N) ** -c
    if d >= 1.0:
        raise DomainError(f"window width {d} >= 1; alpha too large for N={N}")
    return MwsWindow(d, math.sqrt(1.0 + c))
