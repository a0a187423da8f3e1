import math
from fractions import Fraction

import pytest

from nbapprox.correction import (
    CorrectionVariant,
    c_star,
    classical_cdf,
    corrected_cdf,
    corrected_survival,
    max_bulk_cdf_error,
    poisson_c_star,
    poisson_corrected_cdf,
)
from nbapprox.errors import DomainError
from nbapprox.exactdist import NBParams, PoissonParams, nb_cdf, poisson_cdf
from nbapprox.llt import BulkSpec, bulk_range
from nbapprox.rates import loglog_slope

DELTA_CAP = 0.75


@pytest.mark.parametrize("variant", list(CorrectionVariant))
def test_c_star_at_centre(variant):
    # a - 1/2 equals the mean, so delta_tilde = 0
    half = c_star(NBParams(10.5, 0.5), 11, variant)
    assert half.delta_tilde == pytest.approx(0.0, abs=1e-15)
    assert half.c_star == pytest.approx(0.0, abs=1e-12)
    quarter = c_star(NBParams(31.5, 0.25), 11, variant)
    assert quarter.c_star == pytest.approx(0.5 - 1.25 / 4.5, abs=1e-12)
    assert quarter.c_star == pytest.approx(0.2222, abs=1e-4)


def test_variants_differ_away_from_centre():
    params = NBParams(100.0, 0.5)
    edgeworth = c_star(params, 120, CorrectionVariant.EDGEWORTH).c_star
    tabulated = c_star(params, 120, CorrectionVariant.TABULATED).c_star
    assert edgeworth != pytest.approx(tabulated, abs=1e-6)


def test_survival_and_cdf_are_complementary():
    params = NBParams(50.0, 0.4)
    for a in range(20, 50, 4):
        total = corrected_survival(params, a) + corrected_cdf(params, a - 1)
        assert total == pytest.approx(1.0, abs=1e-14)


def test_boundary_arguments():
    params = NBParams(5.0, 0.5)
    assert 0.0 < corrected_cdf(params, -1) < 1.0
    with pytest.raises(DomainError):
        corrected_cdf(params, -2)
    with pytest.raises(DomainError):
        corrected_survival(params, -1)


def test_corrected_cdf_close_to_exact():
    params = NBParams(400.0, 0.5)
    for a in (390, 400, 410):
        assert corrected_cdf(params, a) == pytest.approx(nb_cdf(params, a), abs=1e-5)


def test_corrected_beats_classical(p_value):
    params = NBParams(400.0, p_value)
    corrected = max_bulk_cdf_error(params, BulkSpec(), "corrected", DELTA_CAP)
    classical = max_bulk_cdf_error(params, BulkSpec(), "classical", DELTA_CAP)
    assert corrected < classical


def test_classical_cdf_is_half_integer_shift():
    params = NBParams(20.0, 0.5)
    assert classical_cdf(params, 20) == pytest.approx(0.5 + 0.5 * math.erf(0.5 / params.sd / math.sqrt(2)))


def test_corrected_cdf_rate(p_value):
    rs = [100, 400, 1600]
    errors = [max_bulk_cdf_error(NBParams(r, p_value), BulkSpec(), "corrected", DELTA_CAP) for r in rs]
    assert -1.75 <= loglog_slope(rs, errors) <= -1.25


def test_tabulated_coefficients_lose_accuracy():
    params = NBParams(1600.0, 0.5)
    edgeworth = max_bulk_cdf_error(params, BulkSpec(), "corrected", DELTA_CAP, CorrectionVariant.EDGEWORTH)
    tabulated = max_bulk_cdf_error(params, BulkSpec(), "corrected", DELTA_CAP, CorrectionVariant.TABULATED)
    assert edgeworth < tabulated


def test_bulk_error_argument_checks():
    with pytest.raises(DomainError):
        max_bulk_cdf_error(NBParams(100.0, 0.5), method="midpoint")
    assert math.isnan(max_bulk_cdf_error(NBParams(100.5, 0.5), delta_cap=1e-3))


def test_poisson_correction():
    params = PoissonParams(400.0)
    assert poisson_c_star(params, 400) == pytest.approx(1.0 / 3.0)
    corrected = max(abs(poisson_corrected_cdf(params, a) - poisson_cdf(params, a))
                    for a in range(380, 421))
    classical = max(abs(0.5 + 0.5 * math.erf((a + 0.5 - 400.0) / 20.0 / math.sqrt(2))
                        - poisson_cdf(params, a)) for a in range(380, 421))
    assert corrected < classical


@pytest.mark.parametrize("variant, a3, a1", [
    (CorrectionVariant.TABULATED, Fraction(-69, 4 * 72), Fraction(-3, 72)),
    (CorrectionVariant.EDGEWORTH, Fraction(-33, 4 * 72), Fraction(3, 144)),
])
def test_c_star_off_centre(variant, a3, a1):
    # r = 100, p = 1/2: sd^2 = 200, a = mean + 3 gives delta_tilde^2 = 1/32 and
    # delta_tilde / (q sqrt(r p)) = 1/20.
    expected = Fraction(1, 2) + Fraction(1, 2) * (Fraction(1, 32) - 1) + Fraction(1, 20) * (a3 / 32 + a1)
    point = c_star(NBParams(100.0, 0.5), 103, variant)
    assert point.delta_tilde == pytest.approx(math.sqrt(1 / 32), rel=1e-14)
    assert point.c_star == pytest.approx(float(expected), abs=1e-14)


def test_corrected_survival_decreases_across_bulk(p_value):
    params = NBParams(400.0, p_value)
    k_lo, k_hi = bulk_range(params, BulkSpec())
    values = [corrected_survival(params, a) for a in range(k_lo, k_hi + 1)]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("r", [50.0, 100.0, 200.0, 1600.0])
def test_corrected_beats_classical_over_r(r, p_value):
    params = NBParams(r, p_value)
    corrected = max_bulk_cdf_error(params, BulkSpec(), "corrected", DELTA_CAP)
    classical = max_bulk_cdf_error(params, BulkSpec(), "classical", DELTA_CAP)
    assert corrected <= classical
