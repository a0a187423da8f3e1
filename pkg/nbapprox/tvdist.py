"""
Total variation distance between the jittered negative binomial law and the
matched normal law N(r p / q, r p / q^2).

The jittered law K + U, U ~ Uniform(-1/2, 1/2), has a step density equal to
P(k) on each cell [k - 1/2, k + 1/2). On a cell the normal density crosses
that level at most twice, at mean +- sd sqrt(-2 ln(P(k) sd sqrt(2 pi))), so
the cell integral of |step - normal| splits into at most three pieces, each
of which is a constant minus a normal CDF difference. No quadrature is
involved.

Mass outside the truncation window is accounted for separately and
reported in TVReport.tail_mass_bound.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from nbapprox.errors import DomainError
from nbapprox.exactdist import (
    DEFAULT_WIDTH,
    NBParams,
    effective_window,
    nb_log_pmf,
    nb_pmf_table,
    nb_survival,
)
from nbapprox.llt import BulkSpec, bulk_range
from nbapprox.montecarlo import RngStream, jitter
from nbapprox.specfn import INV_SQRT_2PI, normal_mass, normal_pdf

logger = logging.getLogger(__name__)

# Rounding allowance per cell for the closed-form cell integrals.
_CELL_ROUNDING = 1e-15

MIN_ROUNDTRIP_DRAWS = 10 ** 4


@dataclass(frozen=True)
class TVReport:
    """TV distance with its error accounting and the truncation window used."""

    tv: float
    quad_error_bound: float
    tail_mass_bound: float
    k_lo: int
    k_hi: int


@dataclass(frozen=True)
class RoundTripReport:
    """
    TV between NB(r, p) and the law of round(Normal(mean, sd^2)).

    tv is the analytic value; tv_monte_carlo is an unbiased estimate of it
    from `draws` normal variates pushed through the rounding kernel.
    """

    tv: float
    tv_monte_carlo: float
    draws: int


def jittered_density(params: NBParams, x: float) -> float:
    """Density of K + U at x: P(k) for the k nearest to x (ties round up), 0 below -1/2."""
    if x < -0.5:
        return 0.0
    return math.exp(nb_log_pmf(params, int(math.floor(x + 0.5))))


def _window(params: NBParams, width: float) -> Tuple[int, int, np.ndarray]:
    if not (width > 0):
        raise DomainError(f"width must be positive, got {width!r}")
    k_lo, k_hi = effective_window(params, width)
    pmf = nb_pmf_table(params, k_hi)
    return k_lo, k_hi, pmf


def _outside_mass(params: NBParams, k_lo: int, k_hi: int, pmf: np.ndarray) -> Tuple[float, float]:
    """
    Mass outside [k_lo - 1/2, k_hi + 1/2] as (exact, truncated).

    Below -1/2 the jittered law has no mass, so the normal mass there enters
    the distance exactly. Anywhere else both laws may have mass, and the sum
    of the two masses bounds what truncation leaves out.
    """
    z_lo = (k_lo - 0.5 - params.mean) / params.sd
    z_hi = (k_hi + 0.5 - params.mean) / params.sd
    normal_below = float(normal_mass(-np.inf, z_lo))
    truncated = float(normal_mass(z_hi, np.inf)) + nb_survival(params, k_hi + 1)
    if k_lo == 0:
        return normal_below, truncated
    return 0.0, truncated + normal_below + math.fsum(pmf[:k_lo].tolist())


def _cell_integrals(params: NBParams, ks: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Integral of |level_k - normal density| over each cell [k - 1/2, k + 1/2]."""
    mean, sd = params.mean, params.sd
    lo = ks - 0.5
    hi = ks + 0.5
    scaled = levels * sd / INV_SQRT_2PI
    with np.errstate(divide="ignore", invalid="ignore"):
        half_gap = sd * np.sqrt(-2.0 * np.log(scaled))
    # Level at or above the peak: the density stays below it on the whole cell.
    half_gap = np.where(scaled >= 1.0, 0.0, half_gap)
    left = np.clip(mean - half_gap, lo, hi)
    right = np.clip(mean + half_gap, lo, hi)

    def piece(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        mass = normal_mass((a - mean) / sd, (b - mean) / sd)
        return np.abs(mass - levels * (b - a))

    return piece(lo, left) + piece(left, right) + piece(right, hi)


def tv_jittered_vs_normal(params: NBParams, width: float = DEFAULT_WIDTH) -> TVReport:
    """
    TV distance between K + U and the matched normal law.

    Args:
        params: Distribution parameters
        width: Truncation window half-width in standard deviations

    Returns:
        TVReport; tails outside the window contribute half of the normal mass
        plus half of the NB mass found there
    """
    k_lo, k_hi, pmf = _window(params, width)
    ks = np.arange(k_lo, k_hi + 1, dtype=float)
    cells = _cell_integrals(params, ks, pmf[k_lo:])
    exact, truncated = _outside_mass(params, k_lo, k_hi, pmf)
    tv = 0.5 * math.fsum(cells.tolist()) + 0.5 * (exact + truncated)
    report = TVReport(
        tv=min(max(tv, 0.0), 1.0),
        quad_error_bound=len(ks) * _CELL_ROUNDING,
        tail_mass_bound=truncated,
        k_lo=k_lo,
        k_hi=k_hi,
    )
    logger.debug("TV r=%g p=%g window [%d, %d]: %.6g", params.r, params.p, k_lo, k_hi, report.tv)
    return report


def riemann_tv(params: NBParams, panels: int = 10 ** 4, width: float = DEFAULT_WIDTH) -> float:
    """Brute-force midpoint-rule TV with `panels` points per unit cell, same tail accounting."""
    if panels < 1:
        raise DomainError(f"panels must be positive, got {panels}")
    k_lo, k_hi, pmf = _window(params, width)
    offsets = (np.arange(panels) + 0.5) / panels - 0.5
    sums = []
    for k in range(k_lo, k_hi + 1):
        density = normal_pdf((k + offsets - params.mean) / params.sd) / params.sd
        sums.append(float(np.sum(np.abs(pmf[k] - density))) / panels)
    exact, truncated = _outside_mass(params, k_lo, k_hi, pmf)
    return 0.5 * math.fsum(sums) + 0.5 * (exact + truncated)


def kernel_jitter_T1(stream: RngStream, k: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """k + Uniform(-1/2, 1/2)."""
    return jitter(stream, k, centered=True)


def kernel_round_T2(z: Union[float, np.ndarray]) -> Union[int, np.ndarray]:
    """Nearest integer to z (halves round up), clamped below at 0."""
    rounded = np.maximum(np.floor(np.asarray(z, dtype=float) + 0.5), 0.0).astype(np.int64)
    return int(rounded) if rounded.ndim == 0 else rounded


def _rounded_normal_pmf(params: NBParams, js: np.ndarray) -> np.ndarray:
    """P(round(Z) = j) for Z ~ N(mean, sd^2), with all negative mass moved to 0."""
    z_lo = np.where(js <= 0, -np.inf, (js - 0.5 - params.mean) / params.sd)
    z_hi = (js + 0.5 - params.mean) / params.sd
    return np.asarray(normal_mass(z_lo, z_hi), dtype=float)


def kernel_roundtrip_tv(params: NBParams, draws: int, stream: RngStream) -> RoundTripReport:
    """
    TV between NB(r, p) and round(Normal(mean, sd^2)).

    The analytic value sums |P(j) - Q(j)| cell by cell. The Monte Carlo value
    draws Y = T2(Z) and averages max(0, 1 - P(Y) / Q(Y)), an unbiased estimate
    of the same distance.
    """
    if draws < MIN_ROUNDTRIP_DRAWS:
        raise DomainError(f"draws must be at least {MIN_ROUNDTRIP_DRAWS}, got {draws}")
    k_hi = effective_window(params)[1]
    js = np.arange(0, k_hi + 1)
    p_nb = nb_pmf_table(params, k_hi)
    q_round = _rounded_normal_pmf(params, js)
    normal_tail = float(normal_mass((k_hi + 0.5 - params.mean) / params.sd, np.inf))
    nb_tail = nb_survival(params, k_hi + 1)
    tv = 0.5 * math.fsum(np.abs(p_nb - q_round).tolist()) + 0.5 * (normal_tail + nb_tail)

    ys = kernel_round_T2(params.mean + params.sd * stream.standard_normal(draws))
    q_y = _rounded_normal_pmf(params, ys)
    p_y = np.exp(nb_log_pmf(params, ys))
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.where(q_y > 0, np.maximum(1.0 - p_y / q_y, 0.0), 0.0)
    tv_mc = math.fsum(excess.tolist()) / draws

    return RoundTripReport(tv=min(max(tv, 0.0), 1.0), tv_monte_carlo=tv_mc, draws=draws)


def bulk_complement_mass(params: NBParams, eta: float = 0.5) -> float:
    """NB mass outside the bulk B(eta); 1 when the bulk holds no integer."""
    k_lo, k_hi = bulk_range(params, BulkSpec(eta))
    if k_lo > k_hi:
        return 1.0
    below = math.fsum(nb_pmf_table(params, k_lo - 1).tolist()) if k_lo > 0 else 0.0
    return below + nb_survival(params, k_hi + 1)


def large_deviation_bound(r: float) -> float:
    """2 exp(-r^{1/3} / 100), the bound on the bulk complement used in the TV argument."""
    if not (r > 0):
        raise DomainError(f"r must be positive, got {r!r}")
    return 2.0 * math.exp(-r ** (1.0 / 3.0) / 100.0)
