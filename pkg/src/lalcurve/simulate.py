"""Verification harnesses.

* an exhaustive enumeration oracle over origin-set partitions of ``n + m``
  distinct placeholder losses;
* Monte Carlo coverage of the limit (miscoverage per ``alpha``);
* Monte Carlo ratio of the limit to the true ``(1 - alpha)``-quantile;
* loss generators, including the cubic-regression shift scenario.

Randomness
----------
All draws come from numpy's Philox counter-based generator.  Replicate ``r``
of a run seeded with ``seed`` uses the substream
``SeedSequence(seed, spawn_key=(0, r))``, so replicates are independent of
each other and of the order they are evaluated in.  Numerical quantiles use
the separate substream ``(1, 0)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .core import check_alpha, check_beta, k_star_finite, lal, LalQuery, ceil_fraction
from .combinatorics import _exact_tail
from .sample import build_sample

__all__ = [
    "ENUMERATION_CAP",
    "GENERATORS",
    "SHIFT_COEFFS",
    "CoverageRow",
    "RATIO_BAND",
    "RatioRow",
    "SimConfig",
    "coverage_mc",
    "draw_losses",
    "draw_shift_data",
    "enumeration_oracle",
    "oracle_exceedance",
    "oracle_order_pmf",
    "quantile_ratio_mc",
    "shift_comparison",
    "substream",
]

#: Largest ``n + m`` the enumeration oracle accepts (C(22, 11) = 705432).
ENUMERATION_CAP = 22

#: Quadratic ``theta0 + theta1 x + theta2 x^2`` fitted by least squares to a
#: seed-0 draw of 100 points with ``mu = 1, sigma = 0.5`` (substream (0, 0),
#: standard normals for ``x`` drawn before the noise).
SHIFT_COEFFS = (0.13141452763928846, -2.769318088932541, 2.6667807132245755)

GENERATORS = ("iid_normal_losses", "exponential_losses", "shift_scenario", "poisson_losses", "constant")

_QUANTILE_SAMPLES = 100_000


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


# ---------------------------------------------------------------- oracle


def _partitions(n: int, m: int):
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be >= 1, got n={n}, m={m}")
    if n + m > ENUMERATION_CAP:
        raise ValueError(f"enumeration is capped at n + m <= {ENUMERATION_CAP}, got {n + m}")
    pool = range(n + m)
    for chosen in itertools.combinations(pool, m):
        picked = set(chosen)
        future = sorted(chosen)
        calib = [-math.inf] + [v for v in pool if v not in picked] + [math.inf]
        yield calib, future


def oracle_order_pmf(n: int, m: int, i: int, j: int) -> Fraction:
    """Exact ``P[L^c_(j) <= L_(i) < L^c_(j+1)]`` by counting partitions."""
    if not 1 <= i <= m or not 0 <= j <= n:
        raise ValueError(f"need 1 <= i <= m and 0 <= j <= n, got i={i}, j={j}")
    hits = total = 0
    for calib, future in _partitions(n, m):
        total += 1
        hits += calib[j] <= future[i - 1] < calib[j + 1]
    return Fraction(hits, total)


def oracle_exceedance(n: int, m: int, q: int, k: int) -> Fraction:
    """Exact ``P[L_(q) > L^c_(k)]`` by counting partitions."""
    if not 1 <= q <= m or not 0 <= k <= n + 1:
        raise ValueError(f"need 1 <= q <= m and 0 <= k <= n + 1, got q={q}, k={k}")
    hits = total = 0
    for calib, future in _partitions(n, m):
        total += 1
        hits += future[q - 1] > calib[k]
    return Fraction(hits, total)


@dataclass(frozen=True)
class OracleCheck:
    n: int
    m: int
    beta: float
    alpha: float
    k_star: int
    enumerated: Fraction
    exact_a: Fraction

    @property
    def valid(self) -> bool:
        return self.enumerated <= Fraction(self.alpha)

    @property
    def exact(self) -> bool:
        return self.enumerated == self.exact_a


def enumeration_oracle(n: int, m: int, beta: float, alpha: float) -> OracleCheck:
    """Check the chosen rank for ``(n, m, beta, alpha)`` against enumeration."""
    k = k_star_finite(n, m, beta, alpha)
    q = ceil_fraction(m, beta)
    return OracleCheck(n, m, beta, alpha, k, oracle_exceedance(n, m, q, k), _exact_tail(k, n, m, q))


# ------------------------------------------------------------ generators


def draw_shift_data(rng: np.random.Generator, size: int, mu: float, sigma: float):
    """``X ~ N(mu, sigma^2)``, ``Y | X ~ N(X (X - 1) (X + 1), 1)``."""
    x = mu + sigma * rng.standard_normal(size)
    y = x * (x - 1.0) * (x + 1.0) + rng.standard_normal(size)
    return x, y


def _shift_losses(rng, size, mu, sigma, coeffs=SHIFT_COEFFS):
    x, y = draw_shift_data(rng, size, mu, sigma)
    t0, t1, t2 = coeffs
    return np.abs(y - (t0 + t1 * x + t2 * x * x))


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo configuration.

    ``generator`` is one of :data:`GENERATORS`.  ``mu``/``sigma`` parameterise
    ``shift_scenario``, ``rate`` the Poisson losses and ``c`` the constant
    generator.  ``seed`` is echoed verbatim into every report row.
    """

    generator: str = "iid_normal_losses"
    n: int = 30
    m: int = 1
    beta: float = 1.0
    alphas: tuple = (0.05, 0.1, 0.2, 0.3)
    replicates: int = 2000
    seed: int = 0
    mu: float = 1.0
    sigma: float = 0.5
    rate: float = 3.0
    c: float = 1.0
    n_grid: tuple = ()

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; choose from {GENERATORS}")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ValueError(f"replicates must be a positive integer, got {self.replicates!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"m must be a finite positive integer, got {self.m!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        check_beta(self.beta)
        object.__setattr__(self, "alphas", tuple(check_alpha(a) for a in self.alphas))
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))

    @property
    def continuous(self) -> bool:
        return self.generator in ("iid_normal_losses", "exponential_losses", "shift_scenario")

    def label(self) -> str:
        if self.generator == "shift_scenario":
            return f"shift_scenario(mu={self.mu!r},sigma={self.sigma!r})"
        if self.generator == "poisson_losses":
            return f"poisson_losses(rate={self.rate!r})"
        if self.generator == "constant":
            return f"constant(c={self.c!r})"
        return self.generator


def draw_losses(config: SimConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    g = config.generator
    if g == "iid_normal_losses":
        return rng.standard_normal(size)
    if g == "exponential_losses":
        return rng.standard_exponential(size)
    if g == "shift_scenario":
        return _shift_losses(rng, size, config.mu, config.sigma)
    if g == "poisson_losses":
        return rng.poisson(config.rate, size).astype(float)
    return np.full(size, float(config.c))


def true_quantile(config: SimConfig, p: float) -> float:
    """``F^{-1}(p)`` of the generator's loss distribution.

    Closed form where available; the shift scenario uses an empirical
    quantile of 10^5 draws from substream ``(1, 0)``.
    """
    g = config.generator
    if g == "iid_normal_losses":
        return float(stats.norm.ppf(p))
    if g == "exponential_losses":
        return float(-math.log1p(-p))
    if g == "poisson_losses":
        return float(stats.poisson.ppf(p, config.rate))
    if g == "constant":
        return float(config.c)
    draws = draw_losses(config, substream(config.seed, 1, 0), _QUANTILE_SAMPLES)
    return float(np.quantile(draws, p, method="inverted_cdf"))


# -------------------------------------------------------------- coverage


@dataclass(frozen=True)
class CoverageRow:
    generator: str
    seed: int
    n: int
    m: int
    beta: float
    alpha: float
    k_star: int
    replicates: int
    miscoverage: float
    std_error: float
    exact_miscoverage: float
    band_lower: float
    band_upper: float
    mean_limit: float


def _limits_and_exceedances(config: SimConfig, ks: Sequence[int], q: int, replicate: int):
    rng = substream(config.seed, 0, replicate)
    draws = draw_losses(config, rng, config.n + config.m)
    calib = np.sort(draws[: config.n])
    future = np.sort(draws[config.n :])
    padded = np.concatenate([calib, [math.inf]])
    limits = padded[np.asarray(ks) - 1]
    return limits, future[q - 1] > limits


def coverage_mc(config: SimConfig) -> list[CoverageRow]:
    """Empirical miscoverage ``P[L_(ceil(m beta)) > lambda]`` per ``alpha``.

    ``std_error`` is the binomial standard error of the empirical rate.
    For ``m = 1`` the two-sided band ``[alpha - 1/(n+1), alpha]`` is
    reported; for other ``m`` ``band_lower`` is NaN.
    """
    n, m = config.n, config.m
    q = ceil_fraction(m, config.beta)
    ks = [k_star_finite(n, m, config.beta, a) for a in config.alphas]
    hits = np.zeros(len(ks))
    limit_sum = np.zeros(len(ks))
    for r in range(config.replicates):
        limits, exceed = _limits_and_exceedances(config, ks, q, r)
        hits += exceed
        limit_sum += limits
    rows = []
    for idx, (alpha, k) in enumerate(zip(config.alphas, ks)):
        rate = hits[idx] / config.replicates
        rows.append(
            CoverageRow(
                generator=config.label(),
                seed=config.seed,
                n=n,
                m=m,
                beta=config.beta,
                alpha=alpha,
                k_star=k,
                replicates=config.replicates,
                miscoverage=float(rate),
                std_error=math.sqrt(rate * (1 - rate) / config.replicates),
                exact_miscoverage=float(_exact_tail(k, n, m, q)),
                band_lower=alpha - 1 / (n + 1) if m == 1 else math.nan,
                band_upper=alpha,
                mean_limit=float(limit_sum[idx] / config.replicates),
            )
        )
    return rows


# -------------------------------------------------------- quantile ratio


#: Accepted range for the largest-n mean ratio with exponential(1) losses,
#: alpha = 0.1, n in (20, 80, 320), 500 replicates.  Frozen after a pilot at
#: 5000 replicates, seeds 0..2: n = 320 gave 1.0084, 1.0075, 1.0089 (standard
#: error ~0.001, so ~0.0033 at 500 replicates); analytic value ~1.0075.
RATIO_BAND = (0.98, 1.15)


@dataclass(frozen=True)
class RatioRow:
    generator: str
    seed: int
    n: int
    alpha: float
    k_star: int
    replicates: int
    quantile: float
    mean_ratio: float
    std_error: float


def quantile_ratio_mc(config: SimConfig) -> list[RatioRow]:
    """Monte Carlo mean of ``lambda / F^{-1}(1 - alpha)`` for each ``n`` in
    ``config.n_grid`` (one future loss, first entry of ``config.alphas``)."""
    if config.m != 1:
        raise ValueError("quantile ratio study is defined for m = 1")
    if not config.n_grid:
        raise ValueError("n_grid is empty")
    alpha = config.alphas[0]
    target = true_quantile(config, 1 - alpha)
    if target == 0:
        raise ValueError("target quantile is zero; ratio undefined")
    rows = []
    for n in config.n_grid:
        cfg = SimConfig(**{**config.__dict__, "n": n})
        k = k_star_finite(n, 1, config.beta, alpha)
        ratios = np.empty(config.replicates)
        for r in range(config.replicates):
            limits, _ = _limits_and_exceedances(cfg, [k], 1, r)
            ratios[r] = limits[0] / target
        se = float(np.std(ratios, ddof=1) / math.sqrt(config.replicates)) if config.replicates > 1 else math.nan
        rows.append(
            RatioRow(
                generator=config.label(),
                seed=config.seed,
                n=n,
                alpha=alpha,
                k_star=k,
                replicates=config.replicates,
                quantile=target,
                mean_ratio=float(np.mean(ratios)),
                std_error=se,
            )
        )
    return rows


# ------------------------------------------------------ shift comparison


@dataclass(frozen=True)
class ShiftResult:
    seed: int
    limit_reference: float
    limit_shifted: float


def shift_comparison(
    seeds: Sequence[int],
    n: int = 30,
    alpha: float = 0.05,
    reference: tuple = (1.0, 0.5),
    shifted: tuple = (0.75, 0.75),
    replicates: int = 1,
) -> list[ShiftResult]:
    """Mean limit at ``alpha`` (``m = 1``) under two shift scenarios per seed.

    Both scenarios reuse the same standard-normal draws for a given seed and
    replicate, so the comparison isolates the change in ``(mu, sigma)``.
    """
    query = LalQuery(m=1, beta=1.0, alpha=alpha)
    results = []
    for seed in seeds:
        sums = [0.0, 0.0]
        for r in range(replicates):
            for idx, (mu, sigma) in enumerate((reference, shifted)):
                rng = substream(seed, 0, r)
                losses = _shift_losses(rng, n, mu, sigma)
                sums[idx] += lal(build_sample(losses, support_min=0.0), query).limit
        results.append(ShiftResult(seed, sums[0] / replicates, sums[1] / replicates))
    return results
