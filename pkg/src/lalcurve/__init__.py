"""Distribution-free level-alpha limits (LALs) on batches of future losses."""

__version__ = "0.1.0"

from .core import INF, LalOutcome, LalQuery, ceil_fraction, k_star_finite, lal
from .curves import CompareTable, LalCurve, compare_table, curve_breakpoints
from .losses import LossKind, LossSpec, compute_loss, compute_losses
from .sample import CalibrationSample, build_sample, order_statistic

__all__ = [
    "INF",
    "CalibrationSample",
    "CompareTable",
    "LalCurve",
    "LalOutcome",
    "LalQuery",
    "LossKind",
    "LossSpec",
    "build_sample",
    "ceil_fraction",
    "compare_table",
    "compute_loss",
    "compute_losses",
    "curve_breakpoints",
    "k_star_finite",
    "lal",
    "order_statistic",
]
