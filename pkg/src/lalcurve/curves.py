"""Exact LAL step curves and multi-sample comparison tables.

For fixed ``(m, beta)`` the limit as a function of ``alpha`` is a step
function with at most ``n + 1`` steps: it equals ``L^c_(k)`` for
``alpha in [a(k), a(k-1))`` and ``L^c_(1)`` for ``alpha >= a(1)``.  Curves are
therefore stored as their breakpoints and never as sampled grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import BatchSize, LalOutcome, LalQuery, lal, miscoverage_profile, select_k
from .sample import CalibrationSample, order_statistic

__all__ = ["CompareRow", "CompareTable", "LalCurve", "compare_table", "curve_breakpoints"]


@dataclass(frozen=True)
class LalCurve:
    """Breakpoints ``(alphas[k-1], limits[k-1])`` for ``k = 1..n+1``.

    ``alphas`` is ``a(k)`` (nonincreasing, last entry 0) and ``limits`` is
    ``L^c_(k)`` including the ``support_max`` sentinel at ``k = n + 1``.
    """

    m: BatchSize
    beta: float
    alphas: np.ndarray
    limits: np.ndarray
    ties: bool = False
    name: str = ""
    mean_loss: float = float("nan")
    _resolver: Optional[Callable] = None
    _tol: float = 1e-12

    @property
    def n(self) -> int:
        return len(self.alphas) - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, len(self.alphas) + 1)

    @property
    def coverages(self) -> np.ndarray:
        return 1.0 - self.alphas

    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(a), float(lim)) for a, lim in zip(self.alphas, self.limits)]

    def k_at(self, alpha: float) -> int:
        return select_k(self.alphas, alpha, self._resolver, self._tol)

    def evaluate(self, alpha: float) -> float:
        """Limit at level ``alpha`` read off the step curve."""
        return float(self.limits[self.k_at(alpha) - 1])


def curve_breakpoints(sample: CalibrationSample, m: BatchSize, beta: float, name: str = "") -> LalCurve:
    """Exact LAL curve of ``sample`` for batch size ``m`` and fraction ``beta``.

    >>> from lalcurve.sample import build_sample
    >>> curve_breakpoints(build_sample([7.0]), 1, 1.0).breakpoints()
    [(0.5, 7.0), (0.0, inf)]
    """
    n = sample.n
    tails, resolver, tol, _ = miscoverage_profile(n, m, beta)
    limits = np.array([order_statistic(sample, k) for k in range(1, n + 2)])
    return LalCurve(
        m=m,
        beta=float(beta),
        alphas=tails,
        limits=limits,
        ties=sample.has_ties,
        name=name,
        mean_loss=sample.mean(),
        _resolver=resolver,
        _tol=tol,
    )


@dataclass(frozen=True)
class CompareRow:
    alpha: float
    sample: str
    limit: float
    k: int
    exact_coverage: float
    mean_loss: float


@dataclass(frozen=True)
class CompareTable:
    """One row per ``(alpha, sample)`` pair.

    ``mean_loss`` is the plain calibration average of each sample.  It is a
    reference point only and carries no finite-sample guarantee.
    """

    m: BatchSize
    beta: float
    names: tuple
    alphas: tuple
    rows: tuple
    mean_loss: Mapping[str, float]

    def column(self, name: str, attr: str = "limit") -> list:
        return [getattr(r, attr) for r in self.rows if r.sample == name]


def compare_table(
    samples: Mapping[str, CalibrationSample],
    m: BatchSize,
    beta: float,
    alphas: Sequence[float],
) -> CompareTable:
    """Limits of several samples on a shared ``alpha`` grid.

    Raises ``ValueError`` with fewer than two samples.
    """
    if len(samples) < 2:
        raise ValueError(f"compare needs at least 2 samples, got {len(samples)}")
    names = tuple(samples)
    rows = []
    for alpha in alphas:
        query = LalQuery(m=m, beta=beta, alpha=alpha)
        for name in names:
            out: LalOutcome = lal(samples[name], query)
            rows.append(
                CompareRow(
                    alpha=float(alpha),
                    sample=name,
                    limit=out.limit,
                    k=out.k_star,
                    exact_coverage=out.exact_coverage,
                    mean_loss=samples[name].mean(),
                )
            )
    return CompareTable(
        m=m,
        beta=float(beta),
        names=names,
        alphas=tuple(float(a) for a in alphas),
        rows=tuple(rows),
        mean_loss={name: samples[name].mean() for name in names},
    )
