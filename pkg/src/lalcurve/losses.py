"""Loss functions that map prediction records to real-valued losses.

Record types
------------
* :class:`RegressionRecord` ``(y, y_hat)`` for ``absolute``, ``squared``,
  ``overshoot`` and ``undershoot``.
* :class:`ClassificationRecord` ``(label, probs)`` for
  ``misclassification_prob`` and ``categorical_nll``.  Labels are 0-indexed.
* :class:`DensityRecord` ``(z,)`` for ``gaussian_nll``.

The Gaussian negative log-likelihood is ``-2 ln N(z; mu, Sigma)`` with the
``K ln(2 pi)`` constant dropped, i.e. ``(z - mu)' Sigma^-1 (z - mu) + ln|Sigma|``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "ClassificationRecord",
    "DensityRecord",
    "LossBatch",
    "LossKind",
    "LossSpec",
    "NLL_FLOOR",
    "RegressionRecord",
    "compute_loss",
    "compute_losses",
]

#: Probabilities below this are treated as this value by ``categorical_nll``.
NLL_FLOOR = 1e-300


class LossKind(str, enum.Enum):
    ABSOLUTE = "absolute"
    SQUARED = "squared"
    OVERSHOOT = "overshoot"
    UNDERSHOOT = "undershoot"
    MISCLASSIFICATION_PROB = "misclassification_prob"
    CATEGORICAL_NLL = "categorical_nll"
    GAUSSIAN_NLL = "gaussian_nll"


REGRESSION_KINDS = frozenset(
    {LossKind.ABSOLUTE, LossKind.SQUARED, LossKind.OVERSHOOT, LossKind.UNDERSHOOT}
)
CLASSIFICATION_KINDS = frozenset({LossKind.MISCLASSIFICATION_PROB, LossKind.CATEGORICAL_NLL})


@dataclass(frozen=True)
class RegressionRecord:
    y: float
    y_hat: float


@dataclass(frozen=True)
class ClassificationRecord:
    label: int
    probs: Sequence[float]


@dataclass(frozen=True)
class DensityRecord:
    z: Sequence[float]


@dataclass(frozen=True)
class LossSpec:
    """A loss kind plus, for ``gaussian_nll``, the fitted ``mean`` and ``cov``.

    The covariance is Cholesky-factorised once at construction; a matrix that
    is not symmetric positive definite raises ``ValueError``.
    """

    kind: LossKind
    mean: Optional[np.ndarray] = None
    cov: Optional[np.ndarray] = None
    _chol: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _logdet: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        kind = LossKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is not LossKind.GAUSSIAN_NLL:
            if self.mean is not None or self.cov is not None:
                raise ValueError(f"{kind.value} takes no mean/cov parameters")
            return
        if self.mean is None or self.cov is None:
            raise ValueError("gaussian_nll needs both mean and cov")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError(f"mean of length {d} needs a {d}x{d} covariance, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and cov must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
            raise ValueError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance is not positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_logdet", 2.0 * float(np.sum(np.log(np.diag(chol)))))

    @property
    def dim(self) -> Optional[int]:
        return None if self.mean is None else int(self.mean.shape[0])


@dataclass
class LossBatch:
    """Losses for a batch of records; ``saturated`` lists the indices whose
    ``categorical_nll`` hit the probability floor."""

    values: np.ndarray
    saturated: list = field(default_factory=list)


def _finite(name: str, x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


def _class_prob(record: ClassificationRecord) -> float:
    probs = np.asarray(record.probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a non-empty vector")
    if np.any(np.isnan(probs)) or np.any((probs < 0.0) | (probs > 1.0)):
        raise ValueError("class probabilities must lie in [0, 1]")
    label = record.label
    if isinstance(label, bool) or not isinstance(label, (int, np.integer)):
        raise TypeError(f"label must be an integer, got {label!r}")
    if not 0 <= label < probs.size:
        raise ValueError(f"label {label} out of range 0..{probs.size - 1}")
    return float(probs[label])


def _loss(spec: LossSpec, record) -> tuple[float, bool]:
    kind = spec.kind
    if kind in REGRESSION_KINDS:
        if not isinstance(record, RegressionRecord):
            raise TypeError(f"{kind.value} needs a RegressionRecord, got {type(record).__name__}")
        r = _finite("y", record.y) - _finite("y_hat", record.y_hat)
        if kind is LossKind.ABSOLUTE:
            return abs(r), False
        if kind is LossKind.SQUARED:
            return r * r, False
        if kind is LossKind.OVERSHOOT:
            return max(0.0, -r), False
        return max(0.0, r), False

    if kind in CLASSIFICATION_KINDS:
        if not isinstance(record, ClassificationRecord):
            raise TypeError(f"{kind.value} needs a ClassificationRecord, got {type(record).__name__}")
        p = _class_prob(record)
        if kind is LossKind.MISCLASSIFICATION_PROB:
            return 1.0 - p, False
        if p < NLL_FLOOR:
            return -math.log(NLL_FLOOR), True
        return -math.log(p), False

    if not isinstance(record, DensityRecord):
        raise TypeError(f"gaussian_nll needs a DensityRecord, got {type(record).__name__}")
    z = np.atleast_1d(np.asarray(record.z, dtype=float))
    if z.shape != spec.mean.shape:
        raise ValueError(f"z has shape {z.shape}, expected {spec.mean.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    w = solve_triangular(spec._chol, z - spec.mean, lower=True)
    return float(w @ w) + spec._logdet, False


def compute_loss(spec: LossSpec, record) -> float:
    """Loss of one record under ``spec``.

    >>> compute_loss(LossSpec("overshoot"), RegressionRecord(y=3, y_hat=5))
    2.0
    >>> compute_loss(LossSpec("misclassification_prob"),
    ...              ClassificationRecord(label=1, probs=(0.1, 0.7, 0.2)))  # doctest: +ELLIPSIS
    0.3...
    """
    return _loss(spec, record)[0]


def compute_losses(spec: LossSpec, records) -> LossBatch:
    values = []
    saturated = []
    for idx, record in enumerate(records):
        value, flag = _loss(spec, record)
        values.append(value)
        if flag:
            saturated.append(idx)
    return LossBatch(np.asarray(values, dtype=float), saturated)
