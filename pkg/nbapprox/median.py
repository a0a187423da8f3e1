"""
Exact and asymptotic medians of jittered negative binomial and Poisson variables.

For an integer variable K and an independent U ~ Uniform(0, 1), the CDF of
K + U is piecewise linear:

    P(K + U <= t) = P(K <= floor(t)) {t} + P(K <= floor(t) - 1) (1 - {t}).

The median therefore has a closed form inside the cell [a, a + 1] where the
CDF of K first reaches 1/2, and no root finder is needed.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from nbapprox.errors import DomainError
from nbapprox.exactdist import (
    NBParams,
    PoissonParams,
    _compensated_cumsum,
    effective_window,
    nb_cdf,
    nb_pmf_table,
    poisson_cdf,
    poisson_pmf_table,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MedianReport:
    """
    Exact jittered median against its asymptotic prediction.

    residual = exact - asymptotic. integer_offset is the unjittered
    integer median minus the mean, reported alongside for comparison.
    """

    exact: float
    asymptotic: float
    residual: float
    params: Union[NBParams, PoissonParams]
    integer_offset: Optional[float] = None


def _solve_cells(pmf: np.ndarray) -> Tuple[int, float]:
    """
    Integer median and jittered median from a PMF table.

    Returns:
        (smallest a with cdf(a) >= 1/2, the t solving the jittered equation)
    """
    cdf = _compensated_cumsum(pmf)
    hits = np.flatnonzero(cdf >= 0.5)
    if hits.size == 0:
        raise DomainError("PMF table does not reach the median; widen the window")
    a = int(hits[0])
    below = float(cdf[a - 1]) if a > 0 else 0.0
    if below == 0.5:
        return a, float(a)
    return a, a + (0.5 - below) / float(pmf[a])


def _jittered_cdf(cdf_fn, t: float) -> float:
    if t < 0:
        return 0.0
    a = math.floor(t)
    frac = t - a
    return cdf_fn(a) * frac + cdf_fn(a - 1) * (1.0 - frac)


def jittered_cdf_nb(params: NBParams, t: float) -> float:
    """P(K + U <= t) for K ~ NB(r, p) and U ~ Uniform(0, 1)."""
    return _jittered_cdf(lambda k: nb_cdf(params, k), t)


def jittered_cdf_poisson(params: PoissonParams, t: float) -> float:
    """P(N + U <= t) for N ~ Poisson(lambda) and U ~ Uniform(0, 1)."""
    return _jittered_cdf(lambda k: poisson_cdf(params, k), t)


def exact_jittered_median_nb(params: NBParams) -> float:
    """Median of K + U solved cell by cell from the exact CDF."""
    pmf = nb_pmf_table(params, effective_window(params)[1])
    return _solve_cells(pmf)[1]


def asymptotic_jittered_median_nb(params: NBParams) -> float:
    """r p / q + 1/2 - (1 + p) / (6 q)."""
    return params.mean + 0.5 - (1 + params.p) / (6 * params.q)


def exact_jittered_median_poisson(params: PoissonParams) -> float:
    """Median of N + U solved cell by cell from the exact CDF."""
    pmf = poisson_pmf_table(params, effective_window(params)[1])
    return _solve_cells(pmf)[1]


def asymptotic_jittered_median_poisson(params: PoissonParams) -> float:
    """lambda + 1/3."""
    return params.lam + 1.0 / 3.0


def _check_grid(grid: Sequence[float], name: str) -> List[float]:
    values = [float(v) for v in grid]
    if not values:
        raise DomainError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError(f"{name} must be strictly ascending")
    return values


def median_scan(p: float, r_grid: Sequence[float]) -> List[MedianReport]:
    """
    Jittered and integer medians of NB(r, p) for every r in the grid.

    Args:
        p: Success probability in (0, 1)
        r_grid: Non-empty ascending list of positive r values

    Returns:
        One MedianReport per r, in grid order
    """
    reports = []
    for r in _check_grid(r_grid, "r_grid"):
        params = NBParams(r, p)
        pmf = nb_pmf_table(params, effective_window(params)[1])
        integer_median, exact = _solve_cells(pmf)
        asymptotic = asymptotic_jittered_median_nb(params)
        reports.append(MedianReport(
            exact=exact,
            asymptotic=asymptotic,
            residual=exact - asymptotic,
            params=params,
            integer_offset=integer_median - params.mean,
        ))
    logger.info("Median scan at p=%g over %d values of r", p, len(reports))
    return reports


def poisson_median_scan(lambda_grid: Sequence[float]) -> List[MedianReport]:
    """Jittered and integer Poisson medians for every lambda in the grid."""
    reports = []
    for lam in _check_grid(lambda_grid, "lambda_grid"):
        params = PoissonParams(lam)
        pmf = poisson_pmf_table(params, effective_window(params)[1])
        integer_median, exact = _solve_cells(pmf)
        asymptotic = asymptotic_jittered_median_poisson(params)
        reports.append(MedianReport(
            exact=exact,
            asymptotic=asymptotic,
            residual=exact - asymptotic,
            params=params,
            integer_offset=integer_median - lam,
        ))
    logger.info("Poisson median scan over %d values of lambda", len(reports))
    return reports
