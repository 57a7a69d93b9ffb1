import math
from enum import Enum

import numpy as np

from .exceptions import InputError


class Verdict(str, Enum):
    """Closed set of outcomes reported by experiments and diagnostics"""

    PASS = 'pass'
    FAIL = 'fail'
    FLAGGED = 'flagged'

    @classmethod
    def combine(cls, verdicts):
        """fail beats flagged beats pass"""
        verdicts = [cls(v) for v in verdicts]
        if cls.FAIL in verdicts:
            return cls.FAIL
        if cls.FLAGGED in verdicts:
            return cls.FLAGGED
        return cls.PASS


def as_points(x, name='x'):
    """
    Convert input to a float array, rejecting non-finite entries

    Args:
        x: Scalar or array-like of reals
        name: Argument name used in the error message

    Returns:
        numpy float64 array (0-d for scalar input)
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def unwrap_scalar(arr):
    """Return a Python float for 0-d arrays, the array otherwise"""
    if np.ndim(arr) == 0:
        return float(arr)
    return arr


def wrap(x):
    """
    Reduce reals to the circle [0, 1)

    np.mod can return exactly 1.0 for tiny negative inputs; those are folded
    back onto 0.
    """
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def circle_distance(x, y):
    """Circle distance min(|x - y|, 1 - |x - y|) after wrapping both points"""
    d = np.abs(wrap(x) - wrap(y))
    return np.minimum(d, 1.0 - d)


def cell_centers(n_cells):
    """Midpoints of the cells [j/N, (j+1)/N)"""
    return (np.arange(n_cells) + 0.5) / n_cells


def format_float(value):
    """
    Format a float for CSV output with 17 significant digits

    None becomes an empty field; integers and strings pass through.
    """
    if value is None:
        return ''
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return 'nan'
        return f"{float(value):.17g}"
    return str(value)
