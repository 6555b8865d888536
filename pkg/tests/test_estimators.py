import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpratio.errors import DomainError, InvalidDebiasError, PreconditionError
from dpratio.estimators import (
    LOG2,
    CountTable,
    Method,
    debias_factor,
    estimate,
    laplace_noised_counts,
    local_sensitivity_ratio,
    max_ls_at_distance,
    naive_relative_risk,
    noised_log,
    propose_test_release,
    ptr_distance_to_unsafe,
    ptr_threshold,
    smooth_sensitivity_estimate,
    smooth_sensitivity_ratio,
    smoothing_parameter,
)
from dpratio.mechanisms import PrivacyBudget

PURE = PrivacyBudget(1.0)
APPROX = PrivacyBudget(1.0, 1 / 150)
T = CountTable(100, 50, 150, 150)


# -- independent oracles -----------------------------------------------------


def brute_local_sensitivity(x, y, n_x, n_y):
    """Largest |X/Y - X'/Y'| over one-record moves (one count changes by one)."""
    base = x / y
    best = 0.0
    for dx, dy in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        nx_, ny_ = x + dx, y + dy
        if 0 <= nx_ <= n_x and 1 <= ny_ <= n_y:
            best = max(best, abs(base - nx_ / ny_))
    return best


def brute_max_ls(x, y, n_x, n_y, m):
    """Max brute-force LS over tables reachable in at most m record changes, y' >= 2."""
    best = 0.0
    for dx, dy in itertools.product(range(-m, m + 1), repeat=2):
        if abs(dx) + abs(dy) > m:
            continue
        xx, yy = x + dx, y + dy
        if 0 <= xx <= n_x and 2 <= yy <= n_y:
            best = max(best, brute_local_sensitivity(xx, yy, n_x, n_y))
    return best


def scan_smooth_sensitivity(t, eps, delta):
    beta = eps / (2 * math.log(2 / delta))
    best = 0.0
    for m in range(t.n_x + t.n_y + 1):
        ym = t.y - m
        if ym <= 1:
            ls = min(t.n_x, t.x + m - t.y + 1) / 2
        elif t.x < ym:
            ls = 1 / ym
        else:
            ls = t.x / (ym * (ym - 1))
        best = max(best, math.exp(-beta * m) * ls)
    return best


# -- CountTable --------------------------------------------------------------


def test_count_table_invariants():
    with pytest.raises(DomainError):
        CountTable(5, 1, 4, 10)
    with pytest.raises(DomainError):
        CountTable(0, 1, 0, 10)
    assert CountTable(3, 4, 10, 10).n == 20
    with pytest.raises(DomainError):
        CountTable(0, 5, 10, 10).require_positive()


# -- noised counts -----------------------------------------------------------


def test_noised_counts_zero_noise(scripted):
    r = scripted()
    est = laplace_noised_counts(r, T, PURE)
    assert est.value == 2.0 and est.method is Method.NOISED_COUNTS
    assert (est.x_tilde, est.y_tilde) == (100.0, 50.0)
    assert est.budget_spent == PURE
    assert r.draws == 2


def test_noised_counts_maxed_clamps(scripted):
    est = laplace_noised_counts(scripted([0.0, -53.0]), T, PURE, max_denominator=True)
    assert est.y_tilde == -3.0
    assert est.value == 100.0


def test_noised_counts_scale(rng):
    est = laplace_noised_counts(rng, T, PrivacyBudget(0.5), size=200_000)
    # Lap(2 / epsilon) per count: variance 2 * 4^2
    assert np.var(est.x_tilde - 100) == pytest.approx(32.0, rel=0.02)


def test_noised_counts_requires_pure_and_positive(scripted):
    with pytest.raises(PreconditionError):
        laplace_noised_counts(scripted(), T, APPROX)
    with pytest.raises(DomainError):
        laplace_noised_counts(scripted(), CountTable(0, 5, 10, 10), PURE)


# -- naive -------------------------------------------------------------------


def test_naive_zero_noise(scripted):
    r = scripted()
    est = naive_relative_risk(r, T, PURE)
    assert est.value == 2.0 and est.x_tilde is None and r.draws == 1


def test_naive_accuracy_monte_carlo(rng):
    vals = naive_relative_risk(rng, T, PURE, size=10**6).value
    assert np.mean(np.abs(vals - 2.0) > 0.1) == pytest.approx(math.exp(-0.2 / 150), abs=0.005)
    assert np.std(vals) == pytest.approx(math.sqrt(2) * 75, rel=0.02)


# -- noised log --------------------------------------------------------------


def test_noised_log_zero_noise(scripted):
    r = scripted()
    assert noised_log(r, T, PURE).value == 2.0
    assert r.draws == 1


def test_debias_factor():
    assert debias_factor(2 * LOG2) == pytest.approx(0.75)
    with pytest.raises(InvalidDebiasError):
        debias_factor(LOG2)
    with pytest.raises(InvalidDebiasError):
        noised_log(None, T, PrivacyBudget(0.5), debias=True)


@pytest.mark.parametrize("t,eps", [(CountTable(100, 50, 150, 150), 2.0), (CountTable(60, 60, 150, 150), 1.5)])
def test_debiased_noised_log_is_unbiased(t, eps):
    vals = noised_log(_rng(1), t, PrivacyBudget(eps), debias=True, size=2_000_000).value
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - t.ratio) < 3 * se


def _rng(stream):
    from dpratio.numerics import RngHandle

    return RngHandle(77, stream)


# -- local and smooth sensitivity --------------------------------------------


@pytest.mark.parametrize("x,y,want", [(40, 100, 0.01), (100, 50, 100 / 2450), (100, 100, 100 / 9900)])
def test_local_sensitivity_examples(x, y, want):
    t = CountTable(x, y, 150, 150)
    assert local_sensitivity_ratio(t) == pytest.approx(want, rel=1e-12)
    assert local_sensitivity_ratio(t) == pytest.approx(brute_local_sensitivity(x, y, 150, 150), rel=1e-12)


def test_local_sensitivity_needs_y_two():
    with pytest.raises(DomainError):
        local_sensitivity_ratio(CountTable(3, 1, 10, 10))


def test_max_ls_examples():
    assert max_ls_at_distance(T, 0) == pytest.approx(100 / 2450)
    assert max_ls_at_distance(T, 18) == pytest.approx(100 / (32 * 31))
    assert max_ls_at_distance(T, 60) == 55.5
    with pytest.raises(DomainError):
        max_ls_at_distance(T, -1)


@pytest.mark.parametrize("x,y", [(100, 50), (20, 40), (30, 30), (5, 12)])
def test_max_ls_matches_brute_force_in_case_two(x, y):
    # while y - m >= 2 the closed form is the max over tables at distance <= m
    for m in range(0, y - 2):
        got = max_ls_at_distance(CountTable(x, y, 150, 150), m)
        assert got == pytest.approx(brute_max_ls(x, y, 150, 150, m), rel=1e-12), m


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 120), st.integers(1, 120))
def test_max_ls_nondecreasing(y, x):
    # x = 0 is excluded: estimators reject it, and there the y' = 1 case drops to 0
    t = CountTable(min(x, 120), y, 120, 120)
    vals = max_ls_at_distance(t, np.arange(t.n + 1))
    assert np.all(np.diff(vals) >= -1e-15)


def test_smooth_sensitivity_matches_independent_scan():
    for t in [T, CountTable(100, 100, 150, 150), CountTable(100, 30, 150, 150), CountTable(3, 2, 10, 10)]:
        for eps, delta in [(1.0, 1 / 150), (0.3, 1e-5), (3.0, 0.5)]:
            want = scan_smooth_sensitivity(t, eps, delta)
            assert smooth_sensitivity_ratio(t, PrivacyBudget(eps, delta)) == pytest.approx(want, rel=1e-12)


def test_smooth_sensitivity_bounds_and_limits():
    ls = local_sensitivity_ratio(T)
    assert smooth_sensitivity_ratio(T, APPROX) >= ls
    # delta close to 1 makes beta large, so the m = 0 term dominates
    assert smooth_sensitivity_ratio(T, PrivacyBudget(50.0, 0.999)) == pytest.approx(ls)
    small = smooth_sensitivity_ratio(T, PrivacyBudget(1.0, 1e-6))
    large = smooth_sensitivity_ratio(T, PrivacyBudget(1.0, 1e-2))
    assert large <= small
    assert smoothing_parameter(APPROX) == pytest.approx(1 / (2 * math.log(300)))


def test_smooth_sensitivity_requires_delta():
    with pytest.raises(DomainError):
        smooth_sensitivity_ratio(T, PURE)


def test_smooth_sensitivity_estimate(scripted, rng):
    r = scripted()
    est = smooth_sensitivity_estimate(r, T, APPROX)
    assert est.value == 2.0 and est.x_tilde is None and r.draws == 1
    s_star = smooth_sensitivity_ratio(T, APPROX)
    vals = smooth_sensitivity_estimate(rng, T, APPROX, size=10**6).value
    assert np.mean(np.abs(vals - 2.0) <= 0.1) == pytest.approx(1 - math.exp(-0.1 / (2 * s_star)), abs=0.005)


# -- PTR ---------------------------------------------------------------------


def test_ptr_distance_examples():
    assert ptr_distance_to_unsafe(T, 0.01) == 0
    assert ptr_distance_to_unsafe(T, 0.1) == 18
    assert max_ls_at_distance(T, 17) < 0.1 <= max_ls_at_distance(T, 18)
    small = CountTable(3, 2, 5, 5)
    assert ptr_distance_to_unsafe(small, 1e9) == small.n
    with pytest.raises(DomainError):
        ptr_distance_to_unsafe(T, 0.0)


def test_ptr_fail_at_zero_distance(scripted):
    r = scripted()
    out = propose_test_release(r, T, APPROX, 0.01)
    assert out.failed and out.estimate is None and out.gamma == 0
    assert out.gamma_hat == 0.0 and r.draws == 1
    assert out.threshold == ptr_threshold(APPROX) == pytest.approx(math.log(150) / 0.5)


def test_ptr_release_when_far(scripted):
    r = scripted([0.0, 0.25])
    small = CountTable(3, 2, 5, 5)
    out = propose_test_release(r, small, PrivacyBudget(1.0, 0.9), 1e9)
    assert out.gamma == small.n
    assert not out.failed
    assert out.estimate.value == 1.5 + 0.25 and r.draws == 2
    assert out.estimate.x_tilde is None


def test_ptr_fail_probability_monte_carlo(rng):
    from dpratio.numerics import LaplaceDist, laplace_cdf

    out = propose_test_release(rng, T, APPROX, 0.1, size=10**6)
    want = laplace_cdf(LaplaceDist(18, 2.0), ptr_threshold(APPROX))
    assert np.mean(out.failed) == pytest.approx(want, abs=0.005)
    assert np.all(np.isnan(out.estimate.value[out.failed]))


def test_dispatcher(scripted):
    for method in Method:
        if method is Method.PTR:
            with pytest.raises(PreconditionError):
                estimate(scripted(), T, APPROX, method)
            assert estimate(scripted(), T, APPROX, method, proposed=0.01).failed
            continue
        budget = APPROX if method is Method.SMOOTH_SENS else PURE
        factor = debias_factor(1.0) if method is Method.NOISED_LOG_DEBIASED else 1.0
        assert estimate(scripted(), T, budget, method.value).value == pytest.approx(2.0 * factor)
