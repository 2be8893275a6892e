"""Trend fits for refinement and regularization sweeps."""

import logging
import math
from typing import Dict, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


def _positive_pairs(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"Fit needs matching samples, got {x.shape} and {y.shape}")
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0.0) & (y > 0.0)
    return x[keep], y[keep]


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit log y = slope·log x + intercept over the positive samples.

    Returns:
        (slope, intercept); NaNs when fewer than two usable samples remain
    """
    x, y = _positive_pairs(x, y)
    if x.size < 2:
        logger.warning(f"Log-log fit needs two positive samples, got {x.size}")
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def per_step_orders(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Observed order between consecutive refinement levels."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(y[:-1] / y[1:]) / np.log(x[:-1] / x[1:])


def richardson_order(coarse_gap: float, fine_gap: float, ratio: float = 2.0) -> float:
    """Self-convergence order from ‖u_h - u_{h/r}‖ and ‖u_{h/r} - u_{h/r²}‖."""
    if not (coarse_gap > 0.0 and fine_gap > 0.0):
        return math.nan
    return math.log(coarse_gap / fine_gap) / math.log(ratio)


def fit_power_constant(h: Sequence[float], errors: Sequence[float], order: float) -> float:
    """C in errors ≈ C·h^order with the order held fixed (least squares in log space)."""
    h, errors = _positive_pairs(h, errors)
    if h.size == 0:
        return 0.0
    return float(np.exp(np.mean(np.log(errors) - order * np.log(h))))


def trend_summary(x: Sequence[float], y: Sequence[float], expected: float) -> Dict[str, float]:
    """Log-log slope of y against x next to the expected slope."""
    slope, intercept = loglog_slope(x, y)
    return {
        "slope": slope,
        "intercept": intercept,
        "expected_slope": expected,
        "slope_error": abs(slope - expected) if math.isfinite(slope) else math.nan,
    }
