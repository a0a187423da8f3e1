"""
Scalar special functions: log-gamma and the standard normal pdf, cdf and survival.

All functions accept a float or a numpy array and return the same kind. The
survival function is evaluated directly through ndtr(-z) so that deep right
tails keep full relative precision instead of cancelling in 1 - Phi(z).
"""

import math
from typing import Union

import numpy as np
from scipy import special

from nbapprox.errors import DomainError

ArrayLike = Union[float, np.ndarray]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _finish(value: np.ndarray, scalar: bool) -> ArrayLike:
    return float(value) if scalar else value


def log_gamma(x: ArrayLike) -> ArrayLike:
    """
    Natural logarithm of the gamma function for positive arguments.

    Args:
        x: Positive finite real or array of them

    Returns:
        ln Gamma(x), same shape as the input

    Raises:
        DomainError: if any entry is non-positive or non-finite
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return _finish(special.gammaln(arr), arr.ndim == 0)


def normal_pdf(z: ArrayLike) -> ArrayLike:
    """Standard normal density e^{-z^2/2} / sqrt(2 pi)."""
    arr = np.asarray(z, dtype=float)
    return _finish(INV_SQRT_2PI * np.exp(-0.5 * arr * arr), arr.ndim == 0)


def normal_cdf(z: ArrayLike) -> ArrayLike:
    """Standard normal CDF Phi(z)."""
    arr = np.asarray(z, dtype=float)
    return _finish(special.ndtr(arr), arr.ndim == 0)


def normal_survival(z: ArrayLike) -> ArrayLike:
    """Standard normal survival Psi(z) = P(Z > z), computed without 1 - Phi."""
    arr = np.asarray(z, dtype=float)
    return _finish(special.ndtr(-arr), arr.ndim == 0)


def normal_mass(z_lo: ArrayLike, z_hi: ArrayLike) -> ArrayLike:
    """
    P(z_lo < Z <= z_hi) for a standard normal Z.

    Differences are taken on the side of zero where both tails are small, so
    intervals far out in either tail keep their relative precision.
    """
    lo = np.asarray(z_lo, dtype=float)
    hi = np.asarray(z_hi, dtype=float)
    left = special.ndtr(hi) - special.ndtr(lo)
    right = special.ndtr(-lo) - special.ndtr(-hi)
    mass = np.where(lo >= 0.0, right, left)
    return _finish(np.maximum(mass, 0.0), lo.ndim == 0 and hi.ndim == 0)
