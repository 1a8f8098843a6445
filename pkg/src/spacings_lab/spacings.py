r"""Uniform k-spacings, their empirical processes and the remainder terms.

Two samplers are provided.  :func:`sample_uniform_spacings` follows the
definition directly (sorted uniforms, gaps between every k-th order
statistic).  :func:`sample_exponential_spacings` uses the representation by
block sums ``Y_i`` of unit exponentials normalised by their total
``S_{n+1}``, with ``n + 1 = kN`` so the two laws coincide exactly.

For an exponential sample, with ``mu = S_{n+1} / (Nk)`` and ``xi`` the
empirical distribution function of the ``Y_i``,

.. math::

    \beta^*(x) = \sqrt N (\xi(\mu x) - H_k(x))
              = \Lambda(x) + R_1(x) + R_2(x),

    \Lambda(x) = \sqrt N (\xi(x) - H_k(x)),\quad
    R_1(x) = \sqrt N (H_k(\mu x) - H_k(x)),\quad
    R_2(x) = \Lambda(\mu x) - \Lambda(x).

:func:`remainder_decomposition` evaluates the sup-norms of these pieces
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, DomainError, RepresentationError
from .gamma import check_order, gamma_cdf, psi, quantile_upper_bracket, shorack_constant
from .process import GammaCDF, Identity, StepProcess
from .rng import RngStream

MAX_VARIATES = 2**40


@dataclass(frozen=True, eq=False)
class SpacingsSample:
    """N scaled k-spacings ``N k D_i`` (sorted) and, for the exponential
    representation, the block sums ``y`` in generation order, their total
    ``s_total`` and ``mu = s_total / (N k)``."""

    k: int
    N: int
    n: int
    scaled: np.ndarray
    y: np.ndarray | None = None
    s_total: float | None = None
    mu: float | None = None

    @property
    def representation(self) -> str:
        return "uniform" if self.y is None else "exponential"

    def require_exponential(self):
        if self.y is None:
            raise RepresentationError("operation needs the exponential representation (block sums y)")
        if self.n + 1 != self.k * self.N:
            raise RepresentationError("operation needs n + 1 == k N")


def _frozen(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def sample_uniform_spacings(rng: RngStream, n: int, k: int, *, uniforms=None) -> SpacingsSample:
    """Draw ``n`` uniforms and form the non-overlapping k-spacings.

    ``uniforms`` overrides the random draw (any order); it is a test hook.
    """
    k = check_order(k)
    if n < k:
        raise DomainError(f"need n >= k, got n={n}, k={k}")
    if uniforms is None:
        u = rng.generator().random(n)
    else:
        u = np.asarray(uniforms, dtype=float)
        if u.shape != (n,):
            raise DomainError("uniforms must have length n")
    full = np.concatenate(([0.0], np.sort(u), [1.0]))
    N = (n + 1) // k
    d = np.diff(full[np.arange(N + 1) * k])
    return SpacingsSample(k=k, N=N, n=n, scaled=_frozen(np.sort(N * k * d)))


def sample_exponential_spacings(rng: RngStream, N: int, k: int, *, exponentials=None) -> SpacingsSample:
    """Spacings through block sums of ``N k`` unit exponentials.

    ``exponentials`` overrides the random draw (length ``N k``); it is a test
    hook for analytic degenerate cases.
    """
    k = check_order(k)
    if N < 1:
        raise DomainError(f"need N >= 1, got {N}")
    if N * k > MAX_VARIATES:
        raise CapacityError(f"N k = {N * k} exceeds {MAX_VARIATES}")
    if exponentials is None:
        e = rng.generator().standard_exponential(N * k)
    else:
        e = np.asarray(exponentials, dtype=float)
        if e.shape != (N * k,):
            raise DomainError("exponentials must have length N k")
    y = e.reshape(N, k).sum(axis=1)
    s_total = float(e.sum())
    mu = s_total / (N * k)
    return SpacingsSample(k=k, N=N, n=N * k - 1, scaled=_frozen(np.sort(y / mu)), y=_frozen(y),
                          s_total=s_total, mu=mu)


def beta_process(sample: SpacingsSample) -> StepProcess:
    """Spacings empirical process ``sqrt(N) (F_N - H_k)``."""
    return StepProcess(sample.scaled, GammaCDF(sample.k), math.sqrt(sample.N))


def gc_statistic(sample: SpacingsSample) -> float:
    """``sup_x |F_N(x) - H_k(x)|``, exact."""
    x = sample.scaled
    N = x.size
    h = gamma_cdf(sample.k, x)
    i = np.arange(1, N + 1)
    return float(max(np.max(np.abs(i / N - h)), np.max(np.abs((i - 1) / N - h))))


def lambda_process(sample: SpacingsSample) -> StepProcess:
    """Empirical process of the block sums ``Y_i`` against ``H_k``."""
    if sample.y is None:
        raise RepresentationError("lambda_process needs block sums y")
    return StepProcess(sample.y, GammaCDF(sample.k), math.sqrt(sample.N))


def reduced_process(sample: SpacingsSample) -> StepProcess:
    """``alpha_N(s) = beta_N(H_k^{-1}(s))`` on ``[0, 1)``: jumps at ``H_k(scaled)``, identity drift."""
    v = gamma_cdf(sample.k, sample.scaled)
    return StepProcess(v, Identity(), math.sqrt(sample.N), domain_end=1.0)


def _stationary_point(k, mu):
    # d/dx [H(mu x) - H(x)] = 0  <=>  mu**k = exp((mu - 1) x)
    if mu == 1.0:
        return float(k)
    return k * math.log(mu) / (mu - 1.0)


def _r4_sup(k, mu):
    if mu == 1.0:
        return 0.0
    xs = _stationary_point(k, mu)
    return abs(gamma_cdf(k, mu * xs) - gamma_cdf(k, xs))


class _Candidates(NamedTuple):
    x: np.ndarray
    # counts of y <= x, y < x, y <= mu x, y < mu x
    a_le: np.ndarray
    a_lt: np.ndarray
    b_le: np.ndarray
    b_lt: np.ndarray


def _candidates(ys, mu, k):
    """Abscissae where ``xi(x)`` or ``xi(mu x)`` jump, plus the extremum of
    ``H(mu x) - H(x)``; counts at the jump that defines a candidate are taken
    by index so that floating rounding of ``mu * (y / mu)`` cannot shift them."""
    ss = np.searchsorted
    extra = np.array([0.0, _stationary_point(k, mu)])
    # family A: x = y_j
    a_x = ys
    a_le = ss(ys, ys, "right")
    a_lt = ss(ys, ys, "left")
    a_mu = mu * ys
    # family B: x = y_j / mu, so mu x = y_j
    b_x = ys / mu
    b_le = ss(ys, ys, "right")
    b_lt = ss(ys, ys, "left")
    x = np.concatenate((a_x, b_x, extra))
    cnt = [
        np.concatenate((a_le, ss(ys, b_x, "right"), ss(ys, extra, "right"))),
        np.concatenate((a_lt, ss(ys, b_x, "left"), ss(ys, extra, "left"))),
        np.concatenate((ss(ys, a_mu, "right"), b_le, ss(ys, mu * extra, "right"))),
        np.concatenate((ss(ys, a_mu, "left"), b_lt, ss(ys, mu * extra, "left"))),
    ]
    return _Candidates(x, *cnt)


def _r2_values(sample):
    ys = np.sort(sample.y)
    N, k, mu = ys.size, sample.k, sample.mu
    c = _candidates(ys, mu, k)
    h = gamma_cdf(k, c.x)
    hmu = gamma_cdf(k, mu * c.x)
    rt = math.sqrt(N)
    out = {}
    for side, a, b in (("right", c.a_le, c.b_le), ("left", c.a_lt, c.b_lt)):
        lam = rt * (a / N - h)
        r1 = rt * (hmu - h)
        r2 = rt * ((b - a) / N - (hmu - h))
        beta_star = rt * (b / N - h)
        out[side] = (lam, r1, r2, beta_star)
    return out


def sup_r2(sample: SpacingsSample) -> float:
    """``sup_x |Lambda(mu x) - Lambda(x)|``, exact."""
    sample.require_exponential()
    vals = _r2_values(sample)
    return float(max(np.max(np.abs(vals[s][2])) for s in vals))


def _sup_a1(k, mu, N):
    """Grid search plus vectorised zoom of ``|H(mu x) - H(x) - (mu-1) psi(x)|``."""
    if mu == 1.0:
        return 0.0
    top = quantile_upper_bracket(k) / min(mu, 1.0)

    def f(x):
        return np.abs(gamma_cdf(k, mu * x) - gamma_cdf(k, x) - (mu - 1.0) * psi(k, x))

    grid = np.linspace(0.0, top, 8001)
    vals = f(grid)
    best = float(np.max(vals))
    # zoom on the five largest grid values at once: sample each bracket on 33 points,
    # re-centre on the best with a half-width of one new step (16x shrink per round)
    idx = np.argsort(vals)[::-1][:5]
    lo = grid[np.maximum(idx - 1, 0)]
    hi = grid[np.minimum(idx + 1, grid.size - 1)]
    t = np.linspace(0.0, 1.0, 33)
    rows = np.arange(idx.size)
    for _ in range(12):
        pts = lo[:, None] + (hi - lo)[:, None] * t
        v = f(pts)
        j = np.argmax(v, axis=1)
        best = max(best, float(np.max(v)))
        centre, step = pts[rows, j], (hi - lo) / 32.0
        lo, hi = np.maximum(centre - step, lo), np.minimum(centre + step, hi)
        if np.all(hi - lo <= 1e-12 * max(1.0, top)):
            break
    return math.sqrt(N) * best


@dataclass(frozen=True)
class RemainderDecomposition:
    sup_lambda: float
    sup_R1: float
    sup_R2: float
    sup_A1: float
    sup_R4: float
    identity_residual: float
    mu: float
    N: int
    k: int


def remainder_decomposition(sample: SpacingsSample) -> RemainderDecomposition:
    """Sup-norms of ``Lambda``, ``R_1``, ``R_2``, ``A_1``, ``R_4`` and the
    residual of ``beta* = Lambda + R_1 + R_2``.

    ``A_1(x) = R_1(x) - sqrt(N) (mu - 1) psi(x)`` and
    ``R_4(x) = H_k(mu x) - H_k(x)``.  The sups of ``R_1`` and ``R_4`` use the
    closed-form extremum ``x* = k log(mu) / (mu - 1)``; ``A_1`` has no closed
    form and is maximised numerically.
    """
    sample.require_exponential()
    k, mu, N = sample.k, sample.mu, sample.N
    vals = _r2_values(sample)
    resid = 0.0
    r2 = 0.0
    for lam, r1, r2v, beta_star in vals.values():
        resid = max(resid, float(np.max(np.abs(beta_star - (lam + r1 + r2v)))))
        r2 = max(r2, float(np.max(np.abs(r2v))))
    r4 = _r4_sup(k, mu)
    return RemainderDecomposition(
        sup_lambda=lambda_process(sample).sup_norm(),
        sup_R1=math.sqrt(N) * r4,
        sup_R2=r2,
        sup_A1=_sup_a1(k, mu, N),
        sup_R4=r4,
        identity_residual=resid,
        mu=mu, N=N, k=k,
    )


class MeanValueCheck(NamedTuple):
    sup_r4: float
    bound: float
    holds: bool
    bound_inverse: float
    holds_inverse: bool


def mean_value_bound_check(sample: SpacingsSample) -> MeanValueCheck:
    """Compare ``sup_x |H_k(mu x) - H_k(x)|`` with ``|mu - 1| K(k)^2 sqrt(k)``
    times ``max(1, mu)`` (``bound``) and times ``max(1, 1/mu)``
    (``bound_inverse``).

    The mean value theorem only guarantees the second form: for ``mu < 1``
    the first is violated by a term of order ``(mu - 1)**2``.
    """
    sample.require_exponential()
    k, mu = sample.k, sample.mu
    r4 = _r4_sup(k, mu)
    base = abs(mu - 1.0) * shorack_constant(k) ** 2 * math.sqrt(k)
    b1 = base * max(1.0, mu)
    b2 = base * max(1.0, 1.0 / mu)
    return MeanValueCheck(r4, b1, r4 <= b1, b2, r4 <= b2)


class IntegralIdentity(NamedTuple):
    lhs: float
    rhs: float


def integral_identity(sample: SpacingsSample) -> IntegralIdentity:
    """``int_0^inf Lambda(x) dx = sqrt(N) (k - mean(Y))`` against ``-k sqrt(N) (mu - 1)``."""
    sample.require_exponential()
    rt = math.sqrt(sample.N)
    ybar = float(np.mean(sample.y))
    return IntegralIdentity(rt * (sample.k - ybar), -sample.k * rt * (sample.mu - 1.0))


def lil_statistic(sample: SpacingsSample) -> float:
    """``|mu - 1| (N k / (2 log log N k))**(1/2)``."""
    sample.require_exponential()
    nk = sample.N * sample.k
    if nk < 16:
        raise DomainError(f"need N k >= 16, got {nk}")
    return abs(sample.mu - 1.0) * math.sqrt(nk / (2.0 * math.log(math.log(nk))))
