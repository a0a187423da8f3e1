"""Convergence-rate fits on log-log scale."""

from typing import Sequence

import numpy as np

from nbapprox.errors import DomainError


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Least-squares slope of ln(y) against ln(x).

    Raises:
        DomainError: on mismatched lengths, fewer than two points or
            non-positive (or nan) entries
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("xs and ys must be one-dimensional and of equal length")
    if x.size < 2:
        raise DomainError("at least two points are needed for a slope")
    if not (np.all(x > 0) and np.all(y > 0)):
        raise DomainError("log-log fit needs strictly positive xs and ys")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
