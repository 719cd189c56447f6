"""Calibration loss samples and their order statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = ["CalibrationSample", "build_sample", "order_statistic"]


@dataclass(frozen=True)
class CalibrationSample:
    """Sorted calibration losses plus the support bounds used as sentinels.

    ``values`` holds ``L^c_(1) <= ... <= L^c_(n)``.  Rank ``0`` maps to
    ``support_min`` and rank ``n + 1`` to ``support_max``; both default to
    infinity since the true support of a loss is rarely known.
    """

    values: np.ndarray
    support_min: float = -math.inf
    support_max: float = math.inf
    _has_ties: bool = field(default=False, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def has_ties(self) -> bool:
        return self._has_ties

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, CalibrationSample):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and self.support_min == other.support_min
            and self.support_max == other.support_max
        )

    __hash__ = None


def build_sample(
    raw: Iterable[float],
    support_min: float = -math.inf,
    support_max: float = math.inf,
) -> CalibrationSample:
    """Validate and sort raw losses into a :class:`CalibrationSample`.

    Raises
    ------
    ValueError
        On empty input, a NaN or infinite element (the message names its
        index), inverted support bounds, or a value outside them.
    """
    values = np.array(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("calibration sample is empty")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        idx = int(bad[0])
        raise ValueError(f"non-finite loss {values[idx]!r} at index {idx}")
    support_min = float(support_min)
    support_max = float(support_max)
    if math.isnan(support_min) or math.isnan(support_max):
        raise ValueError("support bounds must not be NaN")
    if support_min > support_max:
        raise ValueError(f"support_min {support_min} exceeds support_max {support_max}")
    values = np.sort(values, kind="stable")
    if values[0] < support_min:
        raise ValueError(f"loss {values[0]!r} lies below support_min {support_min}")
    if values[-1] > support_max:
        raise ValueError(f"loss {values[-1]!r} lies above support_max {support_max}")
    values.setflags(write=False)
    ties = bool(np.any(values[1:] == values[:-1]))
    return CalibrationSample(values, support_min, support_max, ties)


def order_statistic(sample: CalibrationSample, k: int) -> float:
    """The ``k``-th smallest loss, with ranks ``0`` and ``n + 1`` mapped to the
    support bounds.

    >>> s = build_sample([3.0, 1.0, 2.0])
    >>> order_statistic(s, 2), order_statistic(s, 4)
    (2.0, inf)
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"k must be an integer, got {k!r}")
    n = sample.n
    if not 0 <= k <= n + 1:
        raise ValueError(f"k must lie in 0..{n + 1}, got {k}")
    if k == 0:
        return sample.support_min
    if k == n + 1:
        return sample.support_max
    return float(sample.values[k - 1])
