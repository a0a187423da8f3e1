"""
Random variates, estimators of p and the bias/RMSE simulation harness.

Every draw comes from an RngStream, a counter-based Philox generator keyed by
(seed, stream_id). The experiment gives each (r, replication) pair its own
stream, so results do not depend on execution order or on the number of
worker processes.

Samplers are exact rejection/inversion methods run as vectorised numpy
loops: Marsaglia-Tsang for the gamma law, sequential-search inversion and
PTRS (transformed rejection with squeeze) for the Poisson law, and the
gamma-Poisson mixture for the negative binomial law.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from nbapprox.errors import DegenerateSampleError, DomainError
from nbapprox.exactdist import NBParams
from nbapprox.metrics import DEGENERATE_SAMPLES, REPLICATIONS
from nbapprox.specfn import log_gamma

logger = logging.getLogger(__name__)

Size = Optional[int]
Draw = Union[float, int, np.ndarray]

_UINT64_MAX = 2 ** 64 - 1

# Poisson means up to this value use inversion, larger ones use PTRS.
_INVERSION_LIMIT = 10.0


class RngStream:
    """
    Reproducible random stream identified by (seed, stream_id).

    Identical pairs replay identical sequences; distinct stream ids map to
    distinct Philox keys through SeedSequence spawn keys.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not (0 <= int(value) <= _UINT64_MAX):
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def open_uniform(self, n: int) -> np.ndarray:
        """n draws from Uniform(0, 1) with both ends excluded."""
        u = self.generator.random(n)
        zeros = np.flatnonzero(u == 0.0)
        while zeros.size:
            u[zeros] = self.generator.random(zeros.size)
            zeros = zeros[u[zeros] == 0.0]
        return u

    def standard_normal(self, n: int) -> np.ndarray:
        return self.generator.standard_normal(n)


def _count(size: Size) -> int:
    if size is None:
        return 1
    if int(size) < 0:
        raise DomainError(f"size must be non-negative, got {size!r}")
    return int(size)


def _finish(values: np.ndarray, size: Size) -> Draw:
    if size is None:
        return values[0].item()
    return values


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

def _marsaglia_tsang(stream: RngStream, shape: float, n: int) -> np.ndarray:
    """Gamma(shape, 1) draws for shape >= 1."""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        x = stream.standard_normal(pending.size)
        u = stream.open_uniform(pending.size)
        v = (1.0 + c * x) ** 3
        positive = v > 0
        log_v = np.log(np.where(positive, v, 1.0))
        squeeze = u < 1.0 - 0.0331 * x ** 4
        accept = positive & (squeeze | (np.log(u) < 0.5 * x * x + d * (1.0 - v + log_v)))
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    return out


def sample_gamma(stream: RngStream, shape: float, scale: float, size: Size = None) -> Draw:
    """
    Gamma(shape, scale) variates.

    Shapes below one are boosted: G(a) = G(a + 1) U^{1/a}.

    Args:
        stream: Source of randomness
        shape: Positive shape parameter
        scale: Positive scale parameter
        size: None for a single float, otherwise the length of the returned array
    """
    if not (shape > 0 and scale > 0):
        raise DomainError(f"shape and scale must be positive, got ({shape!r}, {scale!r})")
    n = _count(size)
    if shape >= 1.0:
        values = _marsaglia_tsang(stream, shape, n)
    else:
        values = _marsaglia_tsang(stream, shape + 1.0, n)
        values *= stream.open_uniform(n) ** (1.0 / shape)
    return _finish(values * scale, size)


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------

def _poisson_inversion(stream: RngStream, lam: np.ndarray) -> np.ndarray:
    u = stream.open_uniform(lam.size)
    out = np.zeros(lam.size, dtype=np.int64)
    term = np.exp(-lam)
    cdf = term.copy()
    active = u > cdf
    k = 0
    # Past this point the remaining mass is below double precision.
    k_cap = int(np.max(lam, initial=0.0) + 40.0 * math.sqrt(np.max(lam, initial=0.0)) + 40.0)
    while active.any() and k < k_cap:
        k += 1
        out[active] = k
        term = term * lam / k
        cdf = cdf + term
        active &= u > cdf
    return out


def _poisson_ptrs(stream: RngStream, lam: np.ndarray) -> np.ndarray:
    """Transformed rejection with squeeze; every entry of lam must exceed 10."""
    slam = np.sqrt(lam)
    log_lam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    log_inv_alpha = np.log(1.1239 + 1.1328 / (b - 3.4))
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.empty(lam.size, dtype=np.int64)
    pending = np.arange(lam.size)
    while pending.size:
        u = stream.generator.random(pending.size) - 0.5
        v = stream.generator.random(pending.size)
        us = 0.5 - np.abs(u)
        pa, pb, pl = a[pending], b[pending], lam[pending]
        k = np.floor((2.0 * pa / us + pb) * u + pl + 0.43)

        accept = (us >= 0.07) & (v <= vr[pending])
        reject = (k < 0) | ((us < 0.013) & (v > us))
        check = ~accept & ~reject
        if check.any():
            idx = np.flatnonzero(check)
            kc = k[idx]
            lhs = (np.log(v[idx]) + log_inv_alpha[pending[idx]]
                   - np.log(pa[idx] / (us[idx] * us[idx]) + pb[idx]))
            rhs = -pl[idx] + kc * log_lam[pending[idx]] - log_gamma(kc + 1.0)
            accept[idx] = lhs <= rhs
        out[pending[accept]] = k[accept].astype(np.int64)
        pending = pending[~accept]
    return out


def _poisson_array(stream: RngStream, lam: np.ndarray) -> np.ndarray:
    """One Poisson draw per entry of lam (entries >= 0)."""
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.size, dtype=np.int64)
    small = lam <= _INVERSION_LIMIT
    if small.any():
        out[small] = _poisson_inversion(stream, lam[small])
    if (~small).any():
        out[~small] = _poisson_ptrs(stream, lam[~small])
    return out


def sample_poisson(stream: RngStream, lam: float, size: Size = None) -> Draw:
    """Poisson(lam) variates; inversion for lam <= 10, PTRS above."""
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be a positive real, got {lam!r}")
    return _finish(_poisson_array(stream, np.full(_count(size), float(lam))), size)


def sample_nb(stream: RngStream, params: NBParams, size: Size = None) -> Draw:
    """NB(r, p) variates: Lambda ~ Gamma(r, p/q), then K | Lambda ~ Poisson(Lambda)."""
    n = _count(size)
    rates = sample_gamma(stream, params.r, params.p / params.q, size=n)
    return _finish(_poisson_array(stream, rates), size)


def jitter(stream: RngStream, k: Union[int, np.ndarray], centered: bool = False) -> Draw:
    """
    k + U with U ~ Uniform(0, 1), or Uniform(-1/2, 1/2) when centered.

    k may be a scalar or an integer array; the result has the same shape.
    """
    arr = np.asarray(k, dtype=float)
    u = stream.open_uniform(arr.size).reshape(arr.shape)
    if centered:
        u = u - 0.5
    out = arr + u
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    """Estimator output; in_range is False when value falls outside (0, 1)."""

    value: float
    in_range: bool


def sample_median(xs: Sequence[float]) -> float:
    """Middle order statistic; the lower of the two middle ones for even lengths."""
    arr = np.asarray(xs, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("sample_median needs at least one observation")
    idx = (arr.size - 1) // 2
    return float(np.partition(arr, idx)[idx])


def robust_estimate_p(xs: Sequence[float], r: float) -> Estimate:
    """
    Median-based estimator (m - 1/3) / (m - 2/3 + r) for jittered NB data.

    Raises:
        DegenerateSampleError: if the denominator is not positive
    """
    m = sample_median(xs)
    denominator = m - 2.0 / 3.0 + r
    if denominator <= 0:
        raise DegenerateSampleError(
            f"robust estimator undefined: median {m!r} gives denominator {denominator!r}")
    value = (m - 1.0 / 3.0) / denominator
    return Estimate(value=value, in_range=0.0 < value < 1.0)


def ml_estimate_p(xs: Sequence[float], n: int, r: float) -> float:
    """Moment/ML estimator 1 / (1 + r n / sum(xs))."""
    total = math.fsum(np.asarray(xs, dtype=float).ravel().tolist())
    if total <= 0:
        raise DegenerateSampleError(f"ML estimator undefined for sample sum {total!r}")
    return 1.0 / (1.0 + r * n / total)


def robust_estimate_lambda(xs: Sequence[float]) -> float:
    """Poisson mean from jittered data: sample median - 1/3."""
    return sample_median(xs) - 1.0 / 3.0


# ---------------------------------------------------------------------------
# Bias / RMSE experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """
    Estimator experiment settings.

    jitter_ml selects whether the ML estimator sees the jittered values
    (default) or the raw counts. workers > 1 spreads the r grid over a
    process pool.
    """

    n: int
    reps: int
    p: float
    r_grid: Tuple[float, ...]
    seed: int
    jitter_ml: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "r_grid", tuple(float(r) for r in self.r_grid))
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if self.reps < 1:
            raise DomainError(f"reps must be at least 1, got {self.reps}")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")
        if not self.r_grid:
            raise DomainError("r_grid must not be empty")
        if any(r <= 0 for r in self.r_grid):
            raise DomainError("r_grid entries must be positive")
        if any(b <= a for a, b in zip(self.r_grid, self.r_grid[1:])):
            raise DomainError("r_grid must be strictly ascending")
        if not (0 <= self.seed <= _UINT64_MAX):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.workers < 1:
            raise DomainError(f"workers must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class SimRow:
    r: float
    bias_robust: float
    bias_ml: float
    rmse_robust: float
    rmse_ml: float
    rmse_ratio: float
    degenerate_count: int


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    rows: List[SimRow] = field(default_factory=list)


def stream_id(r_index: int, rep: int) -> int:
    """Stream id owned by replication rep at grid position r_index."""
    return (r_index << 32) | rep


def _bias_rmse(estimates: List[float], p: float) -> Tuple[float, float]:
    if not estimates:
        return float("nan"), float("nan")
    errors = np.asarray(estimates) - p
    return float(np.mean(errors)), float(np.sqrt(np.mean(errors * errors)))


def _simulate_r(cfg: SimConfig, r_index: int, r: float) -> SimRow:
    params = NBParams(r, cfg.p)
    robust: List[float] = []
    ml: List[float] = []
    degenerate = 0
    for rep in range(cfg.reps):
        stream = RngStream(cfg.seed, stream_id(r_index, rep))
        counts = sample_nb(stream, params, size=cfg.n)
        xs = jitter(stream, counts)
        try:
            p_robust = robust_estimate_p(xs, r).value
            p_ml = ml_estimate_p(xs if cfg.jitter_ml else counts, cfg.n, r)
        except DegenerateSampleError as e:
            degenerate += 1
            logger.debug("r=%g rep=%d skipped: %s", r, rep, e)
            continue
        robust.append(p_robust)
        ml.append(p_ml)

    bias_robust, rmse_robust = _bias_rmse(robust, cfg.p)
    bias_ml, rmse_ml = _bias_rmse(ml, cfg.p)
    ratio = rmse_robust / rmse_ml if rmse_ml > 0 else float("nan")
    return SimRow(r=r, bias_robust=bias_robust, bias_ml=bias_ml,
                  rmse_robust=rmse_robust, rmse_ml=rmse_ml,
                  rmse_ratio=ratio, degenerate_count=degenerate)


def run_bias_rmse_experiment(cfg: SimConfig) -> SimReport:
    """
    Bias and RMSE of the robust and ML estimators of p over the r grid.

    Each (r, rep) dataset holds cfg.n jittered NB(r, p) draws. Datasets on
    which an estimator is undefined are counted in degenerate_count and left
    out of the statistics.

    Returns:
        SimReport with one row per r in grid order
    """
    logger.info("Estimator experiment: p=%g n=%d reps=%d over %d values of r",
                cfg.p, cfg.n, cfg.reps, len(cfg.r_grid))
    indices = range(len(cfg.r_grid))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_simulate_r, repeat(cfg), indices, cfg.r_grid))
    else:
        rows = [_simulate_r(cfg, i, r) for i, r in zip(indices, cfg.r_grid)]

    for row in rows:
        REPLICATIONS.inc(cfg.reps)
        if row.degenerate_count:
            DEGENERATE_SAMPLES.inc(row.degenerate_count)
            logger.warning("r=%g: %d degenerate datasets excluded", row.r, row.degenerate_count)
    return SimReport(config=cfg, rows=rows)
