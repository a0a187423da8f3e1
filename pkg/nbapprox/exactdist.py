"""
Exact negative binomial and Poisson computations.

These are the oracles every approximation in the package is checked against:
log-PMFs through log-gamma, PMF tables through the forward recurrence, CDFs by
compensated summation, integer medians and central moments.

The negative binomial law NB(r, p) has PMF
    P(k) = Gamma(r + k) / (Gamma(r) k!) * q^r p^k,   k = 0, 1, 2, ...
with q = 1 - p, mean r p / q and variance r p / q^2.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from nbapprox.errors import DomainError
from nbapprox.specfn import log_gamma

logger = logging.getLogger(__name__)

IntLike = Union[int, np.ndarray]

DEFAULT_WIDTH = 40.0

# Table entries below this come from the log-PMF instead of the recurrence.
_UNDERFLOW = 1e-280

# Direct tail summation stops once a term is this small relative to the tail.
_TAIL_RTOL = 1e-17


@dataclass(frozen=True)
class NBParams:
    """Negative binomial parameters (r, p)."""

    r: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise DomainError(f"r must be a positive real, got {self.r!r}")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def mean(self) -> float:
        return self.r * self.p / self.q

    @property
    def variance(self) -> float:
        return self.r * self.p / (self.q * self.q)

    @property
    def sd(self) -> float:
        return math.sqrt(self.r * self.p) / self.q


@dataclass(frozen=True)
class PoissonParams:
    """Poisson parameter lambda (stored as ``lam``)."""

    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be a positive real, got {self.lam!r}")

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def sd(self) -> float:
        return math.sqrt(self.lam)


def _check_counts(k: IntLike) -> np.ndarray:
    arr = np.asarray(k)
    if arr.dtype.kind not in "iu":
        if not np.all(np.floor(arr) == arr):
            raise DomainError(f"k must be integer valued, got {k!r}")
    if np.any(arr < 0):
        raise DomainError(f"k must be non-negative, got {k!r}")
    return arr.astype(float)


def _compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """Running sums with Neumaier compensation."""
    out = np.empty(len(values))
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values.tolist()):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i] = total + comp
    return out


def _anchored_table(k_top: int, mode: int, step: Callable[[int], float],
                    log_pmf: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    PMF values 0..k_top by running the recurrence outward from the mode.

    The bulk is scaled to unit mass, so no single exp(log-PMF) value sets the
    scale of the whole table. k_top must reach past the mass of the law.
    Entries below the guard relative to the mode come from log_pmf.
    """
    table = np.empty(k_top + 1)
    mode = min(max(mode, 0), k_top)
    table[mode] = 1.0
    lo, hi = 0, k_top

    value = 1.0
    for k in range(mode + 1, k_top + 1):
        value *= step(k - 1)
        if value < _UNDERFLOW:
            hi = k - 1
            break
        table[k] = value
    value = 1.0
    for k in range(mode - 1, -1, -1):
        value /= step(k)
        if value < _UNDERFLOW:
            lo = k + 1
            break
        table[k] = value

    bulk = table[lo:hi + 1]
    bulk /= math.fsum(bulk.tolist())
    if lo > 0:
        table[:lo] = np.exp(log_pmf(np.arange(lo)))
    if hi < k_top:
        table[hi + 1:] = np.exp(log_pmf(np.arange(hi + 1, k_top + 1)))
    return table


def _recurrence_table(k_hi: int, first: float, step: Callable[[int], float],
                      log_pmf: Callable[[np.ndarray], np.ndarray],
                      mode: int, horizon: int) -> np.ndarray:
    """
    PMF values 0..k_hi of a unimodal law from P(k+1) = P(k) step(k).

    When P(0) = first underflows, the table is anchored at the mode instead
    and normalised over 0..max(k_hi, horizon).
    """
    if first < _UNDERFLOW:
        return _anchored_table(max(k_hi, horizon), mode, step, log_pmf)[:k_hi + 1]
    table = np.empty(k_hi + 1)
    value = first
    for k in range(k_hi + 1):
        if value < _UNDERFLOW:
            # Past the mode: everything further out is below the guard too.
            table[k:] = np.exp(log_pmf(np.arange(k, k_hi + 1)))
            break
        table[k] = value
        value *= step(k)
    return table


def effective_window(params: Union[NBParams, PoissonParams],
                     width: float = DEFAULT_WIDTH) -> Tuple[int, int]:
    """
    Truncation window [k_lo, k_hi] outside of which the mass is negligible.

    The upper end carries an extra ``width`` cells so that laws with a small
    mean (geometric-like tails) are also covered.
    """
    k_lo = max(0, math.floor(params.mean - width * params.sd))
    k_hi = math.ceil(params.mean + width * params.sd + width)
    return k_lo, k_hi


# ---------------------------------------------------------------------------
# Negative binomial
# ---------------------------------------------------------------------------

def nb_log_pmf(params: NBParams, k: IntLike) -> Union[float, np.ndarray]:
    """
    Log of the negative binomial PMF.

    Args:
        params: Distribution parameters
        k: Non-negative integer or integer array

    Returns:
        ln P(k) = lnG(r+k) - lnG(r) - lnG(k+1) + r ln q + k ln p
    """
    kk = _check_counts(k)
    r, p = params.r, params.p
    value = (log_gamma(r + kk) - log_gamma(r) - log_gamma(kk + 1.0)
             + r * math.log1p(-p) + kk * math.log(p))
    return float(value) if np.ndim(value) == 0 else value


def nb_pmf_table(params: NBParams, k_hi: int) -> np.ndarray:
    """
    P(0), ..., P(k_hi) by the forward recurrence P(k+1) = P(k) p (r+k)/(k+1).

    When q^r underflows (large r) the recurrence starts at the mode and the
    table is normalised over the truncation window; values far below the
    mode come from the log-PMF.
    """
    if k_hi < 0:
        return np.empty(0)
    r, p = params.r, params.p
    return _recurrence_table(int(k_hi), params.q ** r,
                             lambda k: p * (r + k) / (k + 1),
                             lambda ks: nb_log_pmf(params, ks),
                             mode=max(0, math.floor((r - 1.0) * p / params.q)),
                             horizon=effective_window(params)[1])


def nb_cdf_table(params: NBParams, k_hi: int) -> np.ndarray:
    """Cumulative probabilities P(K <= k) for k = 0..k_hi, capped at 1."""
    return np.minimum(_compensated_cumsum(nb_pmf_table(params, k_hi)), 1.0)


def nb_cdf(params: NBParams, k: int) -> float:
    """P(K <= k); 0 for k < 0 and exactly 1 beyond the truncation horizon."""
    if k < 0:
        return 0.0
    if k >= effective_window(params)[1]:
        return 1.0
    return float(nb_cdf_table(params, int(k))[-1])


def nb_survival(params: NBParams, a: int) -> float:
    """
    P(K >= a); 1 for a <= 0.

    Uses 1 - cdf(a-1) while that CDF is at most 1/2 and sums the upper tail
    directly otherwise, so small tails keep their relative precision.
    """
    if a <= 0:
        return 1.0
    below = nb_cdf(params, a - 1)
    if below <= 0.5:
        return 1.0 - below

    r, p = params.r, params.p
    k = int(a)
    term = math.exp(nb_log_pmf(params, k))
    total = 0.0
    comp = 0.0
    while term > 0.0:
        t = total + term
        comp += (total - t) + term if abs(total) >= term else (term - t) + total
        total = t
        ratio = p * (r + k) / (k + 1)
        term *= ratio
        k += 1
        if ratio < 1.0 and term < _TAIL_RTOL * (total + comp):
            break
    return float(total + comp)


def nb_integer_median(params: NBParams) -> int:
    """Smallest k with P(K <= k) >= 1/2."""
    cdf = nb_cdf_table(params, effective_window(params)[1])
    return int(np.argmax(cdf >= 0.5))


def nb_central_moment(params: NBParams, order: int) -> float:
    """
    Central moment E[(K - mean)^order] for order in {2, 3, 4, 6}.

    Closed forms come from the cumulants kappa_n = r * k_n(p) of NB(r, p),
    k_2 = p/q^2, k_3 = p(1+p)/q^3, k_4 = p(1+4p+p^2)/q^4,
    k_6 = p(1+26p+66p^2+26p^3+p^4)/q^6, combined through
    mu_4 = kappa_4 + 3 kappa_2^2 and
    mu_6 = kappa_6 + 15 kappa_4 kappa_2 + 10 kappa_3^2 + 15 kappa_2^3.
    """
    r, p, q = params.r, params.p, params.q
    k2 = r * p / q ** 2
    k3 = r * p * (1 + p) / q ** 3
    if order == 2:
        return k2
    if order == 3:
        return k3
    k4 = r * p * (1 + 4 * p + p * p) / q ** 4
    if order == 4:
        return k4 + 3.0 * k2 * k2
    if order == 6:
        k6 = r * p * (1 + 26 * p + 66 * p ** 2 + 26 * p ** 3 + p ** 4) / q ** 6
        return k6 + 15.0 * k4 * k2 + 10.0 * k3 * k3 + 15.0 * k2 ** 3
    raise DomainError(f"unsupported moment order {order}; expected one of 2, 3, 4, 6")


def nb_truncated_moment(params: NBParams, order: int, k_lo: int, k_hi: int) -> float:
    """
    Sum over k in [k_lo, k_hi] of (k - mean)^order P(k).

    Indices below 0 are dropped; an upper limit past mean + 60 sd is cut there,
    where the remaining mass is far below double precision.
    """
    if k_lo > k_hi:
        raise DomainError(f"k_lo must not exceed k_hi, got [{k_lo}, {k_hi}]")
    lo = max(0, int(k_lo))
    hi = min(int(k_hi), max(lo, effective_window(params, width=60.0)[1]))
    if hi < lo:
        return 0.0
    ks = np.arange(lo, hi + 1)
    weights = np.exp(nb_log_pmf(params, ks))
    return math.fsum(((ks - params.mean) ** order * weights).tolist())


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------

def poisson_log_pmf(params: PoissonParams, k: IntLike) -> Union[float, np.ndarray]:
    """ln(e^{-lambda} lambda^k / k!)."""
    kk = _check_counts(k)
    value = -params.lam + kk * math.log(params.lam) - log_gamma(kk + 1.0)
    return float(value) if np.ndim(value) == 0 else value


def poisson_pmf_table(params: PoissonParams, k_hi: int) -> np.ndarray:
    """Poisson PMF for k = 0..k_hi by recurrence, anchored at the mode when e^{-lambda} underflows."""
    if k_hi < 0:
        return np.empty(0)
    lam = params.lam
    return _recurrence_table(int(k_hi), math.exp(-lam),
                             lambda k: lam / (k + 1),
                             lambda ks: poisson_log_pmf(params, ks),
                             mode=math.floor(lam),
                             horizon=effective_window(params)[1])


def poisson_cdf(params: PoissonParams, k: int) -> float:
    """P(N <= k) by compensated summation."""
    if k < 0:
        return 0.0
    if k >= effective_window(params)[1]:
        return 1.0
    return float(min(_compensated_cumsum(poisson_pmf_table(params, int(k)))[-1], 1.0))


def poisson_survival(params: PoissonParams, a: int) -> float:
    """P(N >= a), with direct tail summation past the median."""
    if a <= 0:
        return 1.0
    below = poisson_cdf(params, a - 1)
    if below <= 0.5:
        return 1.0 - below
    k_hi = effective_window(params)[1]
    if a > k_hi:
        return 0.0
    terms = np.exp(poisson_log_pmf(params, np.arange(a, k_hi + 1)))
    return math.fsum(terms.tolist())


def poisson_integer_median(params: PoissonParams) -> int:
    """Smallest k with P(N <= k) >= 1/2."""
    table = poisson_pmf_table(params, effective_window(params)[1])
    cdf = _compensated_cumsum(table)
    return int(np.argmax(cdf >= 0.5))
