import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpratio.confidence import (
    CIMethod,
    ConfidenceInterval,
    ProportionPair,
    classic_bounds,
    classic_ci,
    conservative_ci,
    laplace_noise_variance,
    private_asymptotic_ci,
    ratio_bounds,
)
from dpratio.errors import DegenerateDataError, DomainError
from dpratio.estimators import CountTable
from dpratio.numerics import RngHandle

Z975 = 1.959963984540054


def test_classic_example():
    ci = classic_ci(CountTable(100, 100, 200, 200), 0.95)
    assert ci.lower == pytest.approx(math.exp(-Z975 * 0.1), abs=1e-12)
    assert ci.upper == pytest.approx(math.exp(Z975 * 0.1), abs=1e-12)
    assert ci.lower == pytest.approx(0.8220, abs=1e-4)
    assert ci.upper == pytest.approx(1.2164, abs=2e-4)
    assert ci.method is CIMethod.CLASSIC and ci.level == 0.95


def test_classic_collapses_at_full_counts():
    ci = classic_ci(CountTable(50, 80, 50, 80), 0.9)
    assert ci.lower == ci.upper == pytest.approx(1.0)


def test_classic_rejects_zero_counts():
    with pytest.raises(DomainError):
        classic_ci(CountTable(0, 10, 20, 20), 0.95)


def test_classic_coverage_monte_carlo():
    rng = RngHandle(42, 0)
    x = rng.binomial(200, 0.5, 10_000)
    y = rng.binomial(200, 0.5, 10_000)
    lo, hi = classic_bounds(x, y, 200, 200, 0.95)
    assert np.mean((lo <= 1.0) & (1.0 <= hi)) == pytest.approx(0.95, abs=0.01)


def test_asymptotic_example():
    ci = private_asymptotic_ci(ProportionPair(100, 100, 200, 200), 0.95)
    assert ci.lower == pytest.approx(1 - Z975 * 0.1, abs=1e-12)
    assert ci.upper == pytest.approx(1 + Z975 * 0.1, abs=1e-12)
    assert (round(ci.lower, 4), round(ci.upper, 4)) == (0.8040, 1.1960)


def test_asymptotic_ignores_noise_variance():
    a = private_asymptotic_ci(ProportionPair(80, 100, 200, 200, 0.0), 0.9)
    b = private_asymptotic_ci(ProportionPair(80, 100, 200, 200, 50.0), 0.9)
    assert a == b


def test_nonpositive_counts_need_clamping():
    with pytest.raises(DomainError, match="clamp"):
        private_asymptotic_ci(ProportionPair(100, 0, 200, 200), 0.95)
    with pytest.raises(DomainError, match="clamp"):
        conservative_ci(ProportionPair(-2, 10, 200, 200, 3.0), 0.95)


def test_negative_radicand_is_degenerate():
    with pytest.raises(DegenerateDataError):
        private_asymptotic_ci(ProportionPair(300, 200, 200, 200), 0.95)


def test_conservative_reduces_to_asymptotic():
    pp = ProportionPair(70, 90, 200, 200, 0.0)
    a = private_asymptotic_ci(pp, 0.95)
    c = conservative_ci(pp, 0.95)
    assert (a.lower, a.upper) == (c.lower, c.upper)
    assert c.method is CIMethod.CONSERVATIVE_GAUSSIAN
    assert conservative_ci(pp, 0.95, noise="laplace").method is CIMethod.CONSERVATIVE_LAPLACE


def test_truncation_flag():
    pp = ProportionPair(5, 50, 200, 200, 400.0)
    raw = conservative_ci(pp, 0.95)
    assert raw.lower < 0
    assert conservative_ci(pp, 0.95, truncate=True).lower == 0.0


def test_laplace_plug_in_variance():
    assert laplace_noise_variance(0.5) == 32.0


def test_interval_and_pair_validation():
    with pytest.raises(DomainError):
        ConfidenceInterval(2.0, 1.0, 0.95, CIMethod.CLASSIC)
    with pytest.raises(DomainError):
        ConfidenceInterval(0.0, 1.0, 1.0, CIMethod.CLASSIC)
    with pytest.raises(DomainError):
        ProportionPair(1, 1, 0, 5)
    with pytest.raises(DomainError):
        ProportionPair(1, 1, 5, 5, -1.0)
    with pytest.raises(DomainError):
        private_asymptotic_ci(ProportionPair(10, 10, 50, 50), 0.0)


def test_vectorised_bounds_flag_degenerate_entries():
    lo, hi = ratio_bounds(np.array([10.0, 0.0, 300.0]), np.array([10.0, 10.0, 200.0]), 200, 200, 0.95)
    assert np.isfinite(lo[0]) and np.isnan(lo[1]) and np.isnan(lo[2])
    lo, hi = classic_bounds(np.array([0, 5]), np.array([5, 5]), 20, 20, 0.95)
    assert np.isnan(lo[0]) and hi[1] > 1 > lo[1]


counts = st.floats(min_value=1.0, max_value=200.0)


@settings(max_examples=200)
@given(counts, counts, st.floats(0.0, 500.0), st.floats(0.0, 500.0), st.floats(0.5, 0.999))
def test_conservative_width_grows_with_variance(x, y, s1, s2, level):
    lo_var, hi_var = sorted((s1, s2))
    a = conservative_ci(ProportionPair(x, y, 200, 200, lo_var), level)
    b = conservative_ci(ProportionPair(x, y, 200, 200, hi_var), level)
    assert b.width >= a.width - 1e-12
    assert b.width >= private_asymptotic_ci(ProportionPair(x, y, 200, 200), level).width - 1e-12


@settings(max_examples=200)
@given(st.integers(1, 200), st.integers(1, 200), st.floats(0.5, 0.999))
def test_intervals_contain_point_estimate(x, y, level):
    t = CountTable(x, y, 200, 200)
    assert classic_ci(t, level).contains(t.ratio * 1.0)
    pp = ProportionPair(x, y, 200, 200, 10.0)
    assert private_asymptotic_ci(pp, level).contains(pp.ratio)
    assert conservative_ci(pp, level).contains(pp.ratio)
