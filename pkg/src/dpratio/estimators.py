"""Differentially private estimators of a ratio of two counts.

Every estimator takes an :class:`~dpratio.numerics.RngHandle` first. Passing
``size`` draws that many independent releases at once; the fields of the
returned estimate are then arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from dpratio.errors import DomainError, InvalidDebiasError, PreconditionError
from dpratio.mechanisms import PrivacyBudget, laplace_scale

LOG2 = math.log(2.0)


class Method(str, enum.Enum):
    NOISED_COUNTS = "noised-counts"
    NOISED_COUNTS_MAXED = "noised-counts-maxed"
    NAIVE = "naive"
    NOISED_LOG = "noised-log"
    NOISED_LOG_DEBIASED = "noised-log-debiased"
    SMOOTH_SENS = "smooth-sens"
    PTR = "ptr"


@dataclass(frozen=True)
class CountTable:
    """Non-private input: ``x`` of ``n_x`` and ``y`` of ``n_y`` records."""

    x: int
    y: int
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise DomainError("group sizes must be positive")
        if not 0 <= self.x <= self.n_x:
            raise DomainError(f"x={self.x} must lie in [0, n_x={self.n_x}]")
        if not 0 <= self.y <= self.n_y:
            raise DomainError(f"y={self.y} must lie in [0, n_y={self.n_y}]")

    @property
    def n(self):
        return self.n_x + self.n_y

    @property
    def ratio(self):
        return self.x / self.y

    def require_positive(self):
        if self.x < 1 or self.y < 1:
            raise DomainError("ratio estimators require strictly positive counts")


@dataclass(frozen=True)
class RatioEstimate:
    value: object
    method: Method
    budget_spent: PrivacyBudget
    x_tilde: Optional[object] = None
    y_tilde: Optional[object] = None


@dataclass(frozen=True)
class PtrOutcome:
    """Result of propose-test-release.

    ``estimate`` is None on FAIL (scalar case). In the batched case it holds
    NaN where the test failed and ``failed`` is a boolean array.
    """

    estimate: Optional[RatioEstimate]
    gamma_hat: object
    failed: object
    gamma: int
    threshold: float


def _require_pure(budget):
    if not budget.is_pure:
        raise PreconditionError("this estimator is pure DP; pass delta = 0")


def _require_approx(budget):
    if not 0 < budget.delta < 1:
        raise DomainError("local-sensitivity methods require delta in (0, 1)")


def laplace_noised_counts(rng, t, budget, max_denominator=False, size=None):
    """Noise each count with Lap(2/epsilon) and return their ratio.

    With ``max_denominator`` the noised denominator is clamped below at 1,
    which gives the estimator finite moments.
    """
    _require_pure(budget)
    t.require_positive()
    b = laplace_scale(budget.split(2), 1.0)
    x_tilde = t.x + rng.laplace(0.0, b, size)
    y_tilde = t.y + rng.laplace(0.0, b, size)
    if max_denominator:
        value = x_tilde / np.maximum(y_tilde, 1.0)
        method = Method.NOISED_COUNTS_MAXED
    else:
        with np.errstate(divide="ignore"):
            value = x_tilde / y_tilde
        method = Method.NOISED_COUNTS
    if size is None:
        value = float(value)
    return RatioEstimate(value, method, budget, x_tilde, y_tilde)


def naive_relative_risk(rng, t, budget, size=None):
    """X/Y plus Laplace noise at the global sensitivity n_x / 2."""
    _require_pure(budget)
    t.require_positive()
    b = laplace_scale(budget, t.n_x / 2.0)
    value = t.ratio + rng.laplace(0.0, b, size)
    return RatioEstimate(value, Method.NAIVE, budget)


def debias_factor(epsilon):
    """Multiplier that makes the noised-log estimator mean-unbiased."""
    if not epsilon > LOG2:
        raise InvalidDebiasError("epsilon must exceed log 2")
    return 1.0 - (LOG2 / epsilon) ** 2


def noised_log(rng, t, budget, debias=False, size=None):
    """(X/Y) * exp(Lap(log 2 / epsilon)), optionally rescaled to be unbiased."""
    _require_pure(budget)
    t.require_positive()
    factor = debias_factor(budget.epsilon) if debias else 1.0
    b = laplace_scale(budget, LOG2)
    value = t.ratio * np.exp(rng.laplace(0.0, b, size)) * factor
    if size is None:
        value = float(value)
    method = Method.NOISED_LOG_DEBIASED if debias else Method.NOISED_LOG
    return RatioEstimate(value, method, budget)


# -- local and smooth sensitivity -------------------------------------------


def local_sensitivity_ratio(t):
    """Largest change of X/Y when one record moves one count by one."""
    if t.y < 2:
        raise DomainError("local sensitivity of X/Y needs y >= 2")
    if t.x < t.y:
        return 1.0 / t.y
    return t.x / (t.y * (t.y - 1.0))


def max_ls_at_distance(t, m):
    """Largest local sensitivity over tables at distance ``m`` from ``t``.

    Vectorised over ``m``. The denominator is pushed down first; once it
    reaches 1 the numerator grows, capped at ``n_x``.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise DomainError("distance must be nonnegative")
    x, y = float(t.x), float(t.y)
    ym = y - m
    with np.errstate(divide="ignore", invalid="ignore"):
        near_one = np.minimum(t.n_x, x + m - y + 1.0) / 2.0
        shrink_y = 1.0 / ym
        steep = x / (ym * (ym - 1.0))
    out = np.where(ym <= 1.0, near_one, np.where(x < ym, shrink_y, steep))
    return float(out) if out.ndim == 0 else out


def smoothing_parameter(budget):
    """beta = epsilon / (2 ln(2/delta))."""
    _require_approx(budget)
    return budget.epsilon / (2.0 * math.log(2.0 / budget.delta))


def smooth_sensitivity_ratio(t, budget):
    """beta-smooth sensitivity of X/Y: max_m exp(-beta m) * max LS at distance m."""
    beta = smoothing_parameter(budget)
    m = np.arange(t.n + 1, dtype=float)
    return float(np.max(np.exp(-beta * m) * max_ls_at_distance(t, m)))


def smooth_sensitivity_estimate(rng, t, budget, size=None):
    """X/Y + Lap(2 S* / epsilon)."""
    t.require_positive()
    s_star = smooth_sensitivity_ratio(t, budget)
    value = t.ratio + rng.laplace(0.0, 2.0 * s_star / budget.epsilon, size)
    return RatioEstimate(value, Method.SMOOTH_SENS, budget)


# -- propose-test-release ----------------------------------------------------


def ptr_distance_to_unsafe(t, proposed):
    """Fewest record changes that bring the local sensitivity up to ``proposed``.

    Returns ``t.n`` when no table within distance ``n`` reaches it.
    """
    if not proposed > 0:
        raise DomainError("proposed sensitivity bound must be positive")
    reached = np.flatnonzero(max_ls_at_distance(t, np.arange(t.n + 1)) >= proposed)
    return int(reached[0]) if reached.size else t.n


def ptr_threshold(budget):
    eps1 = budget.epsilon / 2.0
    return math.log(1.0 / budget.delta) / eps1


def propose_test_release(rng, t, budget, proposed, size=None):
    """Propose-test-release with an even split of epsilon between test and release.

    FAIL is a regular outcome, not an exception.
    """
    _require_approx(budget)
    t.require_positive()
    eps1 = eps2 = budget.epsilon / 2.0
    gamma = ptr_distance_to_unsafe(t, proposed)
    threshold = ptr_threshold(budget)
    gamma_hat = gamma + rng.laplace(0.0, 1.0 / eps1, size)
    failed = gamma_hat <= threshold
    if size is None:
        if failed:
            return PtrOutcome(None, float(gamma_hat), True, gamma, threshold)
        value = t.ratio + rng.laplace(0.0, proposed / eps2)
        est = RatioEstimate(float(value), Method.PTR, budget)
        return PtrOutcome(est, float(gamma_hat), False, gamma, threshold)
    released = t.ratio + rng.laplace(0.0, proposed / eps2, size)
    value = np.where(failed, np.nan, released)
    est = RatioEstimate(value, Method.PTR, budget)
    return PtrOutcome(est, gamma_hat, failed, gamma, threshold)


def estimate(rng, t, budget, method, proposed=None, size=None):
    """Dispatch on :class:`Method`. PTR returns a :class:`PtrOutcome`."""
    method = Method(method)
    if method is Method.NOISED_COUNTS:
        return laplace_noised_counts(rng, t, budget, False, size)
    if method is Method.NOISED_COUNTS_MAXED:
        return laplace_noised_counts(rng, t, budget, True, size)
    if method is Method.NAIVE:
        return naive_relative_risk(rng, t, budget, size)
    if method is Method.NOISED_LOG:
        return noised_log(rng, t, budget, False, size)
    if method is Method.NOISED_LOG_DEBIASED:
        return noised_log(rng, t, budget, True, size)
    if method is Method.SMOOTH_SENS:
        return smooth_sensitivity_estimate(rng, t, budget, size)
    if proposed is None:
        raise PreconditionError("propose-test-release needs a proposed bound")
    return propose_test_release(rng, t, budget, proposed, size)
