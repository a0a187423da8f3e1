import math

import numpy as np
import pytest

from nbapprox.errors import DomainError
from nbapprox.exactdist import NBParams, effective_window, nb_pmf_table
from nbapprox.montecarlo import RngStream
from nbapprox.rates import loglog_slope
from nbapprox.tvdist import (
    bulk_complement_mass,
    jittered_density,
    kernel_jitter_T1,
    kernel_round_T2,
    kernel_roundtrip_tv,
    large_deviation_bound,
    riemann_tv,
    tv_jittered_vs_normal,
)

SEED = 31337
R_GRID = [16, 64, 256, 1024]


def test_jittered_density_is_a_step_function():
    params = NBParams(6.0, 0.5)
    table = nb_pmf_table(params, 20)
    assert jittered_density(params, 3.0) == pytest.approx(table[3])
    assert jittered_density(params, 3.49) == pytest.approx(table[3])
    assert jittered_density(params, 3.5) == pytest.approx(table[4])
    assert jittered_density(params, -0.5) == pytest.approx(table[0])
    assert jittered_density(params, -0.75) == 0.0


def test_jittered_density_integrates_to_pmf_sum():
    params = NBParams(6.0, 0.5)
    k_hi = effective_window(params)[1]
    # One midpoint per unit cell integrates a step function exactly.
    total = math.fsum(jittered_density(params, k) for k in range(0, k_hi + 1))
    assert total == pytest.approx(math.fsum(nb_pmf_table(params, k_hi).tolist()), abs=1e-12)


def test_tv_report_fields():
    report = tv_jittered_vs_normal(NBParams(64.0, 0.5))
    assert 0.0 <= report.tv <= 1.0
    assert report.tail_mass_bound < 1e-12
    assert report.quad_error_bound > 0.0
    assert report.k_lo <= 64 <= report.k_hi


@pytest.mark.parametrize("r, p", [(64.0, 0.5), (16.0, 0.25), (40.0, 0.75)])
def test_tv_matches_riemann_oracle(r, p):
    params = NBParams(r, p)
    assert tv_jittered_vs_normal(params).tv == pytest.approx(riemann_tv(params), abs=1e-6)


def test_tv_known_value():
    # tv * sqrt(r) is close to 0.27 at p = 1/2
    assert tv_jittered_vs_normal(NBParams(64.0, 0.5)).tv == pytest.approx(0.0342, abs=5e-4)


def test_tv_is_insensitive_to_wider_window():
    params = NBParams(64.0, 0.5)
    default = tv_jittered_vs_normal(params)
    wide = tv_jittered_vs_normal(params, width=60.0)
    assert abs(default.tv - wide.tv) <= default.quad_error_bound + default.tail_mass_bound + 1e-15


def test_narrow_window_moves_mass_to_tails():
    report = tv_jittered_vs_normal(NBParams(64.0, 0.5), width=2.0)
    assert report.tail_mass_bound > 1e-3
    assert 0.0 <= report.tv <= 1.0


def test_tv_rejects_bad_width():
    with pytest.raises(DomainError):
        tv_jittered_vs_normal(NBParams(64.0, 0.5), width=0.0)
    with pytest.raises(DomainError):
        riemann_tv(NBParams(64.0, 0.5), panels=0)


def test_tv_rate(p_value):
    tvs = [tv_jittered_vs_normal(NBParams(r, p_value)).tv for r in R_GRID]
    assert all(b < a for a, b in zip(tvs, tvs[1:]))
    assert -0.6 <= loglog_slope(R_GRID, tvs) <= -0.4


def test_tv_ratio_over_fourfold_r():
    ratio = tv_jittered_vs_normal(NBParams(1024.0, 0.5)).tv / tv_jittered_vs_normal(NBParams(256.0, 0.5)).tv
    assert ratio == pytest.approx(0.5, rel=0.15)


@pytest.mark.parametrize("z, expected", [(3.4, 3), (-2.7, 0), (2.5, 3), (0.49, 0), (7.0, 7)])
def test_round_kernel(z, expected):
    assert kernel_round_T2(z) == expected


def test_jitter_then_round_is_identity():
    stream = RngStream(SEED, 0)
    ks = np.arange(10 ** 5) % 1000
    zs = kernel_jitter_T1(stream, ks)
    assert np.all((zs > ks - 0.5) & (zs < ks + 0.5))
    np.testing.assert_array_equal(kernel_round_T2(zs), ks)
    assert abs(np.mean(zs - ks)) < 4 * math.sqrt(1 / 12 / 10 ** 5)


def test_roundtrip_tv_monte_carlo_agrees():
    draws = 10 ** 5
    report = kernel_roundtrip_tv(NBParams(64.0, 0.5), draws, RngStream(SEED, 1))
    assert 0.0 <= report.tv <= 1.0
    assert report.draws == draws
    assert abs(report.tv_monte_carlo - report.tv) < 3 * math.sqrt(1 / draws)


def test_roundtrip_tv_decreases_with_r():
    tvs = [kernel_roundtrip_tv(NBParams(r, 0.5), 10 ** 4, RngStream(SEED, 2)).tv for r in (64, 256, 1024)]
    assert tvs[0] > tvs[1] > tvs[2]


def test_roundtrip_needs_enough_draws():
    with pytest.raises(DomainError):
        kernel_roundtrip_tv(NBParams(64.0, 0.5), 100, RngStream(SEED, 3))


def test_bulk_complement_within_large_deviation_bound():
    for r in R_GRID:
        mass = bulk_complement_mass(NBParams(r, 0.5))
        assert 0.0 < mass < 1.0
        assert mass <= large_deviation_bound(r)
    # The bulk widens like r^{1/6} in standard deviations, so its complement shrinks.
    assert bulk_complement_mass(NBParams(10 ** 5, 0.5)) < bulk_complement_mass(NBParams(16, 0.5))


def test_large_deviation_bound_values():
    assert large_deviation_bound(1000.0) == pytest.approx(2 * math.exp(-0.1))
    with pytest.raises(DomainError):
        large_deviation_bound(0.0)
