"""Numerics checks for the incomplete-gamma kernel.

The ground truth for the chi-square upper tail is direct numerical
integration of the density; log-gamma is cross-checked against the
standard library.
"""

from __future__ import annotations

import math

import pytest
from scipy import integrate

from incore.gammainc import (
    chi_square_sf,
    log_gamma,
    regularized_lower_gamma,
    regularized_upper_gamma,
)

CHI2_GRID = [0.01, 0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 12.0, 20.0, 35.0]


def chi_square_density(x: float, df: int) -> float:
    k = df / 2.0
    return x ** (k - 1.0) * math.exp(-x / 2.0) / (2.0**k * math.gamma(k))


def integrated_sf(chi2: float, df: int) -> float:
    # relative tolerance: the deep tail values are as small as 1e-8
    value, _ = integrate.quad(
        chi_square_density, chi2, math.inf, args=(df,),
        epsabs=0.0, epsrel=1e-11, limit=200,
    )
    return value


@pytest.mark.parametrize("x", [0.001, 0.1, 0.5, 0.999, 1.0, 1.5, 2.0, 3.3, 10.0, 35.0, 123.4])
def test_log_gamma_matches_stdlib(x):
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)


def test_log_gamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        log_gamma(0.0)
    with pytest.raises(ValueError):
        log_gamma(-1.0)


def test_upper_gamma_at_zero_is_one():
    for a in (0.5, 1.0, 3.0, 35.0):
        assert regularized_upper_gamma(a, 0.0) == 1.0


def test_upper_and_lower_sum_to_one():
    for a in (0.5, 2.0, 7.5):
        for x in (0.1, 1.0, 5.0, 30.0):
            total = regularized_upper_gamma(a, x) + regularized_lower_gamma(a, x)
            assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("df", [1, 2, 3, 4, 5, 6])
def test_sf_matches_direct_integration(df):
    for chi2 in CHI2_GRID:
        expected = integrated_sf(chi2, df)
        actual = chi_square_sf(chi2, df)
        assert actual == pytest.approx(expected, rel=1e-6), (chi2, df)


def test_sf_monotone_decreasing_in_statistic():
    values = [chi_square_sf(chi2, 4) for chi2 in CHI2_GRID]
    assert values == sorted(values, reverse=True)


def test_sf_domain_errors():
    with pytest.raises(ValueError):
        chi_square_sf(-1.0, 3)
    with pytest.raises(ValueError):
        chi_square_sf(1.0, 0)


def test_sf_large_df_region():
    # Exercises both the series branch (chi2/2 < df/2 + 1) and the
    # continued fraction branch on either side of the mean.
    assert chi_square_sf(60.0, 70) == pytest.approx(integrated_sf(60.0, 70), rel=1e-6)
    assert chi_square_sf(110.0, 70) == pytest.approx(integrated_sf(110.0, 70), rel=1e-6)
