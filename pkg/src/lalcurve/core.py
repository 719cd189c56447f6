"""Level-alpha limits on the beta-fraction of m future losses.

Given ``n`` calibration losses exchangeable with ``m`` future ones, the limit
``lambda = L^c_(k*)`` satisfies ``P[L_(ceil(m*beta)) > lambda] <= alpha``,
where ``k*`` is the first rank whose miscoverage ``a(k)`` does not exceed
``alpha``.  Three routes compute ``k*``:

* finite ``m``: ``a(k)`` from :func:`~lalcurve.combinatorics.tail_a_all`;
* ``m == 1``: the closed form ``ceil((n + 1) * (1 - alpha))``;
* ``m == inf``: ``a(k)`` replaced by its limit, a binomial upper tail.

The comparison ``a(k) <= alpha`` carries no slack.  When a floating point
``a(k)`` lands within round-off of ``alpha`` the decision is redone with exact
rationals, treating ``alpha`` as the exact binary value it holds.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .combinatorics import (
    _exact_tail,
    binomial_tail_all,
    exact_binomial_tail,
    tail_a_all,
)
from .sample import CalibrationSample, order_statistic

__all__ = [
    "INF",
    "LalOutcome",
    "LalQuery",
    "ceil_fraction",
    "k_star_finite",
    "k_star_infinite",
    "k_star_single",
    "lal",
    "miscoverage_profile",
    "select_k",
]

#: Token for an unbounded batch of future losses.
INF = math.inf

BatchSize = Union[int, float]

# exact tie-breaking is skipped above this many calibration points
_EXACT_RESOLVE_MAX_N = 5000
_SNAP = 1e-9


def _is_inf(m) -> bool:
    return isinstance(m, float) and m == math.inf


def check_batch_size(m) -> BatchSize:
    if _is_inf(m):
        return INF
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise TypeError(f"m must be a positive integer or INF, got {m!r}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return int(m)


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return beta


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


@dataclass(frozen=True)
class LalQuery:
    """Batch size ``m`` (int or :data:`INF`), fraction ``beta`` in (0, 1] and
    level ``alpha`` in (0, 1)."""

    m: BatchSize
    beta: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "m", check_batch_size(self.m))
        object.__setattr__(self, "beta", check_beta(self.beta))
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def infinite(self) -> bool:
        return _is_inf(self.m)


@dataclass(frozen=True)
class LalOutcome:
    """Result of :func:`lal`.

    ``exact_coverage`` is ``1 - a(k_star)``.  It is exact when the pooled
    losses have no ties and a lower bound otherwise (``ties`` is then set).
    For ``m = INF`` it is the limiting value.  ``ordinal`` is
    ``ceil(m * beta)``, or ``None`` for ``m = INF``.
    """

    k_star: int
    limit: float
    exact_coverage: float
    ordinal: Optional[int]
    n: int
    query: LalQuery
    ties: bool = False

    @property
    def miscoverage(self) -> float:
        return 1.0 - self.exact_coverage


def ceil_fraction(m: int, beta: float) -> int:
    """``ceil(m * beta)`` with products within 1e-9 of an integer snapped to it.

    >>> ceil_fraction(10, 0.3)
    3
    """
    m = check_batch_size(m)
    if _is_inf(m):
        raise ValueError("ceil_fraction needs a finite m")
    beta = check_beta(beta)
    t = m * beta
    r = round(t)
    k = int(r) if abs(t - r) < _SNAP else math.ceil(t)
    return min(max(k, 1), m)


def _tie_tolerance(n: int, m: BatchSize) -> float:
    # lgamma of the largest argument bounds the absolute log-space error
    big = n + (n if _is_inf(m) else m) + 2
    return 1e-12 + 16 * sys.float_info.epsilon * math.lgamma(big)


def select_k(
    tails: np.ndarray,
    alpha: float,
    exact: Optional[Callable[[int], Fraction]] = None,
    tol: float = 1e-12,
) -> int:
    """First rank ``k`` (1-based) with ``tails[k - 1] <= alpha``.

    ``tails`` must be nonincreasing and end in zero.  If ``exact`` is given,
    ranks whose float tail is within relative ``tol`` of ``alpha`` are decided
    by ``exact(k) <= Fraction(alpha)`` instead.
    """
    tails = np.asarray(tails)
    k = int(np.argmax(tails <= alpha)) + 1
    if exact is None:
        return k
    a = Fraction(alpha)

    def near(idx: int) -> bool:
        t = tails[idx - 1]
        return abs(t - alpha) <= tol * max(t, alpha)

    while k > 1 and near(k - 1) and exact(k - 1) <= a:
        k -= 1
    while k < len(tails) and near(k) and exact(k) > a:
        k += 1
    return k


def _finite_resolver(n: int, m: int, q: int) -> Optional[Callable[[int], Fraction]]:
    if n > _EXACT_RESOLVE_MAX_N:
        return None
    return lambda k: _exact_tail(k, n, m, q)


def _infinite_resolver(n: int, beta: float) -> Optional[Callable[[int], Fraction]]:
    if n > _EXACT_RESOLVE_MAX_N // 10:
        return None
    return lambda k: exact_binomial_tail(k, n, beta)


def miscoverage_profile(n: int, m: BatchSize, beta: float):
    """Tails ``a(1..n+1)``, the exact resolver and tie tolerance for ``(n, m, beta)``.

    Returns ``(tails, resolver, tol, ordinal)``; ``ordinal`` is ``None`` when
    ``m`` is infinite.
    """
    m = check_batch_size(m)
    beta = check_beta(beta)
    tol = _tie_tolerance(n, m)
    if _is_inf(m):
        return binomial_tail_all(n, beta), _infinite_resolver(n, beta), tol, None
    q = ceil_fraction(m, beta)
    return tail_a_all(n, m, q), _finite_resolver(n, m, q), tol, q


def k_star_finite(n: int, m: int, beta: float, alpha: float) -> int:
    """``min{k in 1..n+1 : a(k) <= alpha}`` for a finite batch size.

    >>> k_star_finite(4, 2, 1.0, 0.35)
    4
    """
    alpha = check_alpha(alpha)
    if _is_inf(check_batch_size(m)):
        raise ValueError("k_star_finite needs a finite m")
    tails, resolver, tol, _ = miscoverage_profile(n, m, beta)
    return select_k(tails, alpha, resolver, tol)


def k_star_single(n: int, alpha: float) -> int:
    """Closed form for one future loss: ``ceil((n + 1) * (1 - alpha))``.

    Evaluated in exact rational arithmetic on the binary value of ``alpha``
    so that it agrees with :func:`k_star_finite` at ``m = 1`` everywhere.
    """
    alpha = check_alpha(alpha)
    k = math.ceil((n + 1) * (1 - Fraction(alpha)))
    return min(max(k, 1), n + 1)


def k_star_infinite(n: int, beta: float, alpha: float) -> int:
    """``1 + BIN^{-1}(1 - alpha; n, beta)``, capped at ``n + 1``.

    Found as the first rank whose binomial upper tail is ``<= alpha``, which
    is the same rank but keeps precision for small ``alpha``.
    """
    alpha = check_alpha(alpha)
    tails, resolver, tol, _ = miscoverage_profile(n, INF, beta)
    return select_k(tails, alpha, resolver, tol)


def lal(sample: CalibrationSample, query: LalQuery) -> LalOutcome:
    """Level-alpha limit for ``sample`` under ``query``.

    Never fails for a valid input: when no calibration rank is large enough
    the limit is ``sample.support_max`` (``inf`` by default).

    >>> from lalcurve.sample import build_sample
    >>> out = lal(build_sample([1, 2, 3, 4]), LalQuery(m=2, beta=1.0, alpha=0.35))
    >>> out.k_star, out.limit
    (4, 4.0)
    """
    n = sample.n
    if query.infinite:
        tails, resolver, tol, q = miscoverage_profile(n, INF, query.beta)
        k = select_k(tails, query.alpha, resolver, tol)
    elif query.m == 1:
        q = 1
        k = k_star_single(n, query.alpha)
        tails = None
    else:
        tails, resolver, tol, q = miscoverage_profile(n, query.m, query.beta)
        k = select_k(tails, query.alpha, resolver, tol)
    if tails is None:
        miscov = (n + 1 - k) / (n + 1)
    else:
        miscov = float(tails[k - 1])
    return LalOutcome(
        k_star=k,
        limit=order_statistic(sample, k),
        exact_coverage=1.0 - miscov,
        ordinal=q,
        n=n,
        query=query,
        ties=sample.has_ties,
    )
