"""
Local limit expansions of the negative binomial PMF around the matched Gaussian.

The reference density is q / sqrt(r p) * phi(delta_k) with the standardized
coordinate delta_k = (k - r p / q) / (sqrt(r p) / q). Both expansions below are
valid uniformly on the bulk

    B(eta) = { k : |delta_k / sqrt(r p)| <= eta * r^{-1/3} }.

They are evaluated everywhere; callers that rely on the uniform error bound
check membership with in_bulk.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from nbapprox.errors import DomainError
from nbapprox.exactdist import NBParams, nb_log_pmf

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Points computed exactly on the bulk boundary must not fall out by rounding.
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class BulkSpec:
    """Bulk width parameter eta in (0, 1)."""

    eta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise DomainError(f"eta must lie in (0, 1), got {self.eta!r}")


@dataclass(frozen=True)
class ExpansionResult:
    """
    Value of an asymptotic expansion together with its pieces.

    value = base + term_half + term_one, where base is 0 for the log form and
    1 for the ratio form. remainder_scale is the nominal size of the omitted
    terms and is never added to value.
    """

    value: float
    term_half: float
    term_one: float
    remainder_scale: float


def delta_k(params: NBParams, k: float) -> float:
    """Standardized coordinate (k - mean) / sd; k may be any real."""
    return (k - params.mean) / params.sd


def in_bulk(params: NBParams, spec: BulkSpec, k: float) -> bool:
    """True iff |delta_k / sqrt(r p)| <= eta * r^{-1/3} (boundary included)."""
    scaled = abs(delta_k(params, k)) / math.sqrt(params.r * params.p)
    return scaled <= spec.eta * params.r ** (-1.0 / 3.0) * (1.0 + _BOUNDARY_RTOL)


def bulk_range(params: NBParams, spec: BulkSpec,
               delta_cap: Optional[float] = None) -> Tuple[int, int]:
    """
    Integer bounds (k_lo, k_hi) of the bulk, optionally narrowed to |delta| <= delta_cap.

    The range is empty when k_lo > k_hi.
    """
    half_width = spec.eta * params.r ** (-1.0 / 3.0) * math.sqrt(params.r * params.p)
    if delta_cap is not None:
        half_width = min(half_width, delta_cap)
    k_lo = max(0, math.ceil(params.mean - half_width * params.sd))
    k_hi = math.floor(params.mean + half_width * params.sd)
    # Guard against rounding at the boundary.
    while k_lo <= k_hi and not in_bulk(params, spec, k_lo):
        k_lo += 1
    while k_hi >= k_lo and not in_bulk(params, spec, k_hi):
        k_hi -= 1
    return k_lo, k_hi


def _term_half(p: float, rp: float, d: float) -> float:
    return ((1 + p) * d ** 3 / 6 - (1 + p) * d / 2) / math.sqrt(rp)


def llt_log_ratio(params: NBParams, k: int, spec: BulkSpec = BulkSpec()) -> ExpansionResult:
    """
    Expansion of ln(P(k) / (q phi(delta_k) / sqrt(r p))) to order (r p)^{-1}.

    The expansion has no constant term: exponentiating it must reproduce the
    ratio form, whose leading term is 1.
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    p = params.p
    rp = params.r * p
    d = delta_k(params, k)
    half = _term_half(p, rp, d)
    one = (-(1 + p + p * p) * d ** 4 / 12
           + (p * p + 1) * d ** 2 / 4
           - (p * p + params.q) / 12) / rp
    scale = (1 + abs(d) ** 5) / (params.r ** 1.5 * spec.eta ** 4)
    return ExpansionResult(value=half + one, term_half=half, term_one=one,
                           remainder_scale=scale)


def llt_ratio(params: NBParams, k: int, spec: BulkSpec = BulkSpec()) -> ExpansionResult:
    """Expansion of P(k) / (q phi(delta_k) / sqrt(r p)) to order (r p)^{-1}."""
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    p = params.p
    rp = params.r * p
    d = delta_k(params, k)
    half = _term_half(p, rp, d)
    one = ((1 + p) ** 2 * d ** 6 / 72
           - (2 + 3 * p + 2 * p * p) * d ** 4 / 12
           + (3 + 2 * p + 3 * p * p) * d ** 2 / 8
           - (p * p + params.q) / 12) / rp
    scale = (1 + abs(d) ** 9) / (params.r ** 1.5 * spec.eta ** 4)
    return ExpansionResult(value=1.0 + half + one, term_half=half, term_one=one,
                           remainder_scale=scale)


def exact_log_ratio(params: NBParams, k: int) -> float:
    """ln(P(k) / (q phi(delta_k) / sqrt(r p))) from the exact log-PMF."""
    d = delta_k(params, k)
    log_reference = (math.log(params.q) - 0.5 * math.log(params.r * params.p)
                     - _HALF_LOG_2PI - 0.5 * d * d)
    return nb_log_pmf(params, k) - log_reference


def max_bulk_ratio_error(params: NBParams, spec: BulkSpec = BulkSpec(),
                         delta_cap: Optional[float] = None) -> float:
    """
    Largest |exact ratio - llt_ratio.value| over bulk k.

    Returns nan when the (possibly capped) bulk holds no integer.
    """
    k_lo, k_hi = bulk_range(params, spec, delta_cap)
    if k_lo > k_hi:
        return float("nan")
    errors = [abs(math.exp(exact_log_ratio(params, k)) - llt_ratio(params, k, spec).value)
              for k in range(k_lo, k_hi + 1)]
    return float(np.max(errors))
