"""
Classical Runge-Kutta stepping with per-row step-doubling control.

Loewner flows are integrated one elementary step at a time with the drivers
frozen, so the vector fields handled here are autonomous. Rows of the state
array are independent evaluation points; rows that fail the error test are
refined on their own.
"""

from typing import Callable, Tuple

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-14
DEFAULT_MAX_DEPTH = 14


def rk4_step(field: Field, y: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of size h."""
    k1 = field(y)
    k2 = field(y + 0.5 * h * k1)
    k3 = field(y + 0.5 * h * k2)
    k4 = field(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _row_norm(values: np.ndarray) -> np.ndarray:
    magnitude = np.abs(values)
    if magnitude.ndim > 1:
        return magnitude.reshape(magnitude.shape[0], -1).max(axis=1)
    return magnitude


def adaptive_rk4(field: Field, y: np.ndarray, h: float,
                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                 max_depth: int = DEFAULT_MAX_DEPTH,
                 _depth: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate y' = field(y) over a step of length h.

    Each row is compared between one full step and two half steps; rows whose
    difference exceeds atol + rtol |y| are split again, up to max_depth times.

    Args:
        field: Autonomous vector field acting row-wise
        y: State, shape (m,) or (m, d)
        h: Step length (negative integrates backwards)
        rtol: Relative tolerance
        atol: Absolute tolerance
        max_depth: Maximum number of halvings

    Returns:
        (new state, boolean mask of rows that never met the tolerance)
    """
    y = np.asarray(y)
    failed = np.zeros(y.shape[0], dtype=bool)
    if h == 0 or y.shape[0] == 0:
        return y.copy(), failed

    with np.errstate(all="ignore"):
        full = rk4_step(field, y, h)
        half = rk4_step(field, rk4_step(field, y, 0.5 * h), 0.5 * h)
        error = _row_norm(half - full)
        ok = np.isfinite(error) & (error <= atol + rtol * _row_norm(half))

    result = half.copy()
    bad = ~ok
    if np.any(bad):
        if _depth >= max_depth:
            failed[bad] = True
        else:
            first, failed_first = adaptive_rk4(field, y[bad], 0.5 * h, rtol, atol, max_depth, _depth + 1)
            second, failed_second = adaptive_rk4(field, first, 0.5 * h, rtol, atol, max_depth, _depth + 1)
            result[bad] = second
            failed[bad] = failed_first | failed_second
    return result, failed
