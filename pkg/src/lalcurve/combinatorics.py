"""Binomial-coefficient kernels for order-statistic tail probabilities.

Everything here is evaluated in natural-log space so that ratios such as
``C(n + m, m)`` never overflow, even for batch sizes around ``10**6``.  An
exact big-integer twin (:func:`exact_tail_a`) exists for testing and for
resolving comparisons that land within round-off of a threshold.

A binomial coefficient ``C(b, r)`` is taken to be zero whenever ``r < 0``,
``r > b`` or ``b < 0``; in log space that zero is ``-inf``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

__all__ = [
    "EXACT_CAP",
    "binomial_cdf",
    "binomial_quantile",
    "binomial_tail_all",
    "exact_binomial_tail",
    "exact_tail_a",
    "log_binomial",
    "log_binomial_array",
    "order_pmf",
    "tail_a",
    "tail_a_all",
]

#: Largest ``n + m`` accepted by :func:`exact_tail_a`.
EXACT_CAP = 500

# Below this ``b`` the coefficient is computed exactly and then logged.
_SMALL_B = 20
_LOG_COMB_TABLE = np.full((_SMALL_B + 1, _SMALL_B + 1), -np.inf)
for _b in range(_SMALL_B + 1):
    for _r in range(_b + 1):
        _LOG_COMB_TABLE[_b, _r] = math.log(math.comb(_b, _r))


def _check_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    return int(value)


def log_binomial(b: int, r: int) -> float:
    """Natural log of ``C(b, r)``; ``-inf`` outside ``0 <= r <= b``.

    >>> round(log_binomial(6, 2), 5)
    2.70805
    >>> log_binomial(5, -1)
    -inf
    """
    b = _check_int("b", b)
    r = _check_int("r", r)
    if b < 0 or r < 0 or r > b:
        return -math.inf
    if b <= _SMALL_B:
        return float(_LOG_COMB_TABLE[b, r])
    return math.lgamma(b + 1) - math.lgamma(r + 1) - math.lgamma(b - r + 1)


def log_binomial_array(b, r) -> np.ndarray:
    """Vectorised :func:`log_binomial` over broadcastable integer arrays."""
    b = np.asarray(b, dtype=np.int64)
    r = np.asarray(r, dtype=np.int64)
    b, r = np.broadcast_arrays(b, r)
    out = np.full(b.shape, -np.inf)
    valid = (b >= 0) & (r >= 0) & (r <= b)
    small = valid & (b <= _SMALL_B)
    large = valid & ~small
    out[small] = _LOG_COMB_TABLE[b[small], r[small]]
    bl = b[large].astype(float)
    rl = r[large].astype(float)
    out[large] = gammaln(bl + 1) - gammaln(rl + 1) - gammaln(bl - rl + 1)
    return out


def _check_nm(n: int, m: int) -> tuple[int, int]:
    n = _check_int("n", n)
    m = _check_int("m", m)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return n, m


def _log_pmf_terms(n: int, m: int, i: int) -> np.ndarray:
    """Log of P[L^c_(j) <= L_(i) < L^c_(j+1)] for j = 0..n."""
    j = np.arange(n + 1)
    return (
        log_binomial_array(n - j + m - i, n - j)
        + log_binomial_array(j + i - 1, j)
        - log_binomial(n + m, m)
    )


def order_pmf(n: int, m: int, i: int, j: int) -> float:
    """Probability that exactly ``j`` calibration losses lie below the
    ``i``-th smallest of ``m`` out-of-sample losses.

    With ``n + m`` exchangeable, almost surely distinct losses every split of
    the sorted pool into calibration / out-of-sample origin is equally likely,
    which gives::

        C(n - j + m - i, n - j) * C(j + i - 1, j) / C(n + m, m)

    Parameters
    ----------
    n, m : int
        Calibration and out-of-sample sizes, both ``>= 1``.
    i : int
        Out-of-sample rank, ``1 <= i <= m``.
    j : int
        Calibration interval index, ``0 <= j <= n``.  ``j = 0`` and ``j = n``
        use the support sentinels as the open interval ends.
    """
    n, m = _check_nm(n, m)
    i = _check_int("i", i)
    j = _check_int("j", j)
    if not 1 <= i <= m:
        raise ValueError(f"i must lie in 1..{m}, got {i}")
    if not 0 <= j <= n:
        raise ValueError(f"j must lie in 0..{n}, got {j}")
    log_p = log_binomial(n - j + m - i, n - j) + log_binomial(j + i - 1, j) - log_binomial(n + m, m)
    return min(1.0, math.exp(log_p))


def _suffix_log_sum(log_terms: np.ndarray) -> np.ndarray:
    # logaddexp keeps a running maximum, so tiny tails are not flushed to 0
    return np.logaddexp.accumulate(log_terms[::-1])[::-1]


def tail_a_all(n: int, m: int, q: int) -> np.ndarray:
    """Miscoverage ``a(k) = P[L_(q) > L^c_(k)]`` for every ``k = 1..n+1``.

    Returns an array of length ``n + 1`` whose entry ``k - 1`` is ``a(k)``.
    The last entry is exactly zero.  Entries are nonincreasing.
    """
    n, m = _check_nm(n, m)
    q = _check_int("q", q)
    if not 1 <= q <= m:
        raise ValueError(f"q must lie in 1..{m}, got {q}")
    log_terms = _log_pmf_terms(n, m, q)[1:]  # j = 1..n
    out = np.empty(n + 1)
    out[:n] = np.exp(_suffix_log_sum(log_terms))
    out[n] = 0.0
    return np.minimum(out, 1.0)


def tail_a(k: int, n: int, m: int, q: int) -> float:
    """Single entry ``a(k)`` of :func:`tail_a_all`."""
    n, m = _check_nm(n, m)
    k = _check_int("k", k)
    if not 1 <= k <= n + 1:
        raise ValueError(f"k must lie in 1..{n + 1}, got {k}")
    return float(tail_a_all(n, m, q)[k - 1])


def _comb0(b: int, r: int) -> int:
    if b < 0 or r < 0 or r > b:
        return 0
    return math.comb(b, r)


def _exact_tail(k: int, n: int, m: int, q: int) -> Fraction:
    num = sum(_comb0(n - j + m - q, n - j) * _comb0(j + q - 1, j) for j in range(k, n + 2))
    return Fraction(num, math.comb(n + m, m))


def exact_tail_a(k: int, n: int, m: int, q: int) -> Fraction:
    """``a(k)`` as an exact rational using arbitrary-precision integers.

    Limited to ``n + m <= EXACT_CAP`` to bound the cost.

    >>> exact_tail_a(1, 4, 2, 2)
    Fraction(14, 15)
    """
    n, m = _check_nm(n, m)
    k = _check_int("k", k)
    q = _check_int("q", q)
    if n + m > EXACT_CAP:
        raise ValueError(f"exact path is capped at n + m <= {EXACT_CAP}, got {n + m}")
    if not 1 <= k <= n + 1:
        raise ValueError(f"k must lie in 1..{n + 1}, got {k}")
    if not 1 <= q <= m:
        raise ValueError(f"q must lie in 1..{m}, got {q}")
    return _exact_tail(k, n, m, q)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return beta


def _binomial_log_pmf(n: int, beta: float) -> np.ndarray:
    """Log pmf of BIN(n, beta) on 0..n via the ratio recurrence."""
    k = np.arange(n)
    steps = np.log((n - k) / (k + 1)) + (math.log(beta) - math.log1p(-beta))
    log_pmf = np.empty(n + 1)
    log_pmf[0] = n * math.log1p(-beta)
    log_pmf[1:] = log_pmf[0] + np.cumsum(steps)
    return log_pmf


def binomial_cdf(n: int, beta: float) -> np.ndarray:
    """BIN-cdf(k; n, beta) for ``k = 0..n`` as an array."""
    n = _check_int("n", n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    beta = _check_beta(beta)
    if beta == 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    cdf = np.exp(np.logaddexp.accumulate(_binomial_log_pmf(n, beta)))
    cdf = np.minimum(cdf, 1.0)
    cdf[n] = 1.0
    return cdf


def binomial_tail_all(n: int, beta: float) -> np.ndarray:
    """Upper tails ``1 - BIN-cdf(k - 1; n, beta)`` for ``k = 1..n+1``.

    This is the large-batch limit of :func:`tail_a_all`.  Upper tails are
    summed directly, so small values keep their relative accuracy.
    """
    n = _check_int("n", n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    beta = _check_beta(beta)
    out = np.zeros(n + 1)
    if beta == 1.0:
        out[:n] = 1.0
        return out
    out[:n] = np.exp(_suffix_log_sum(_binomial_log_pmf(n, beta)[1:]))
    return np.minimum(out, 1.0)


def exact_binomial_tail(k: int, n: int, beta: float) -> Fraction:
    """Exact ``P[BIN(n, beta) >= k]`` with ``beta`` taken at its binary value."""
    b = Fraction(beta)
    return sum(
        (math.comb(n, j) * b**j * (1 - b) ** (n - j) for j in range(k, n + 1)),
        Fraction(0),
    )


def binomial_quantile(p: float, n: int, beta: float) -> int:
    """Smallest ``k`` in ``0..n`` with ``BIN-cdf(k; n, beta) >= p``.

    >>> binomial_quantile(0.95, 10, 1.0)
    10
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    cdf = binomial_cdf(n, beta)
    if p == 0.0:
        return 0
    return int(np.searchsorted(cdf, p, side="left"))
