import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpratio.errors import DegenerateScaleError, DomainError, OutOfValidityError
from dpratio.mechanisms import (
    PrivacyBudget,
    Sensitivity,
    apply_noise,
    balle_delta,
    calibrate_gaussian_balle,
    calibrate_gaussian_dwork,
    laplace_noise,
    laplace_scale,
)
from dpratio.numerics import GaussianDist, LaplaceDist


def test_budget_validation():
    with pytest.raises(DomainError):
        PrivacyBudget(0.0)
    with pytest.raises(DomainError):
        PrivacyBudget(float("inf"))
    with pytest.raises(DomainError):
        PrivacyBudget(1.0, 1.0)
    assert PrivacyBudget(1.0).is_pure
    assert PrivacyBudget(1.0, 0.2).split(2) == PrivacyBudget(0.5, 0.1)


def test_sensitivity_rejects_negative():
    with pytest.raises(DomainError):
        Sensitivity(-1.0)


@pytest.mark.parametrize("eps,s,b", [(1, 1, 1), (0.5, 1, 2), (2, 0.5, 0.25)])
def test_laplace_scale_examples(eps, s, b):
    assert laplace_scale(PrivacyBudget(eps), Sensitivity(s)) == b
    assert laplace_noise(PrivacyBudget(eps), s) == LaplaceDist(0.0, b)


def test_laplace_scale_zero_sensitivity():
    with pytest.raises(DegenerateScaleError):
        laplace_scale(PrivacyBudget(1), 0.0)


@settings(max_examples=50)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.1, 10))
def test_laplace_scale_homogeneity(eps, s, k):
    b = laplace_scale(PrivacyBudget(eps), s)
    assert laplace_scale(PrivacyBudget(eps), k * s) == pytest.approx(k * b, rel=1e-12)
    assert laplace_scale(PrivacyBudget(k * eps), s) == pytest.approx(b / k, rel=1e-12)


def test_dwork_example():
    g = calibrate_gaussian_dwork(PrivacyBudget(0.5, 1e-4), 1.0)
    assert g.sigma**2 == pytest.approx(2 * math.log(12500) / 0.25, rel=1e-12)
    assert g.sigma == pytest.approx(8.6872, abs=1e-4)
    assert calibrate_gaussian_dwork(PrivacyBudget(0.5, 1e-4), 2.0).sigma == pytest.approx(2 * g.sigma)


def test_dwork_validity_range():
    with pytest.raises(OutOfValidityError):
        calibrate_gaussian_dwork(PrivacyBudget(1.0, 1e-4), 1.0)
    with pytest.raises(OutOfValidityError):
        calibrate_gaussian_dwork(PrivacyBudget(0.5, 0.0), 1.0)
    # delta 1.25 is rejected by the budget itself
    with pytest.raises(DomainError):
        calibrate_gaussian_dwork(PrivacyBudget(0.5, 1.25), 1.0)
    with pytest.raises(DegenerateScaleError):
        calibrate_gaussian_dwork(PrivacyBudget(0.5, 1e-4), 0.0)


def test_balle_tighter_and_minimal():
    budget = PrivacyBudget(0.5, 1e-4)
    sigma = calibrate_gaussian_balle(budget, 1.0).sigma
    assert sigma < calibrate_gaussian_dwork(budget, 1.0).sigma
    assert balle_delta(0.5, 1.0, sigma) <= 1e-4
    assert balle_delta(0.5, 1.0, 0.9 * sigma) > 1e-4
    assert balle_delta(0.5, 1.0, sigma * (1 - 10 * 1e-9)) > 1e-4


def test_balle_monotone_in_delta():
    loose = calibrate_gaussian_balle(PrivacyBudget(0.7, 1e-2), 1.0).sigma
    tight = calibrate_gaussian_balle(PrivacyBudget(0.7, 1e-4), 1.0).sigma
    assert tight > loose


def test_balle_large_epsilon():
    sigma = calibrate_gaussian_balle(PrivacyBudget(5.0, 1e-6), 1.0).sigma
    assert balle_delta(5.0, 1.0, sigma) <= 1e-6 < balle_delta(5.0, 1.0, 0.99 * sigma)


def test_balle_errors():
    with pytest.raises(DomainError):
        calibrate_gaussian_balle(PrivacyBudget(0.5, 0.0), 1.0)
    with pytest.raises(DegenerateScaleError):
        calibrate_gaussian_balle(PrivacyBudget(0.5, 1e-3), 0.0)


def test_balle_dominates_dwork_grid():
    for eps in np.linspace(0.05, 0.95, 10):
        for delta in np.geomspace(1e-8, 1e-1, 10):
            for s in (0.5, 1.0, 2.0):
                budget = PrivacyBudget(float(eps), float(delta))
                assert calibrate_gaussian_balle(budget, s).sigma <= calibrate_gaussian_dwork(budget, s).sigma


def test_apply_noise_zero_stream(scripted):
    assert apply_noise(scripted(), 7.0, LaplaceDist(0, 2)) == 7.0
    assert apply_noise(scripted([1.5]), 7.0, GaussianDist(0, 2)) == 8.5
    with pytest.raises(DomainError):
        apply_noise(scripted(), 7.0, LaplaceDist(1, 2))


def test_apply_noise_mean(rng):
    draws = apply_noise(rng, 7.0, LaplaceDist(0, 2), size=10**6)
    assert abs(draws.mean() - 7.0) < 0.01
