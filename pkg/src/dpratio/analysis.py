"""Closed-form finite-sample analysis of the private ratio estimators.

Covers the CDF of a ratio of two Laplace variables with a common scale,
(alpha, beta) sample-accuracy bounds for each estimator, and the exact and
approximate expectation of the maxed ratio of noised counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from dpratio.errors import (
    ConsistencyError,
    DomainError,
    NumericalError,
    PreconditionError,
    RangeError,
    SingularityError,
)
from dpratio.estimators import (
    LOG2,
    ptr_distance_to_unsafe,
    ptr_threshold,
    smooth_sensitivity_ratio,
)
from dpratio.numerics import EI_MAX_ARG, LaplaceDist, ei_scaled, laplace_cdf

CLAMP_SLACK = 1e-12
SINGULAR_GAP = 1e-9
NEAR_ONE_OFFSET = 1e-6


@dataclass(frozen=True)
class AccuracyBound:
    """P(|release - truth| > alpha) <= beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def accuracy(self):
        """1 - beta."""
        return 1.0 - self.beta


@dataclass(frozen=True)
class RatioLawParams:
    """X1 ~ Lap(mu1, b) and X2 ~ Lap(mu2, b), independent."""

    mu1: float
    mu2: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError("Laplace scale must be positive")


def clamp_probability(p):
    """Clip to [0, 1], but only rounding noise; anything larger is a bug."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr < -CLAMP_SLACK) or np.any(arr > 1 + CLAMP_SLACK):
        raise ConsistencyError(f"probability out of range: {p}")
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


# -- ratio of Laplace variables ----------------------------------------------


def _cdf_upper_branch(params, a):
    # valid when mu1 / a >= mu2
    mu1, mu2, b = params.mu1, params.mu2, params.b
    den = 2.0 * (a + 1.0) * (a - 1.0)
    return -np.exp((mu2 * a - mu1) / b) / den + a**2 * np.exp((mu2 - mu1 / a) / b) / den


def _cdf_lower_branch(params, a):
    # valid when mu1 / a < mu2
    mu1, mu2, b = params.mu1, params.mu2, params.b
    den = 2.0 * (a + 1.0) * (1.0 - a)
    return 1.0 + a**2 * np.exp((mu1 / a - mu2) / b) / den - np.exp((mu1 - a * mu2) / b) / den


def _cdf_branches(params, a):
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        upper = _cdf_upper_branch(params, a)
        lower = _cdf_lower_branch(params, a)
    return np.where(params.mu1 / a >= params.mu2, upper, lower)


def ratio_of_laplace_cdf(params, a):
    """P(X1 < a X2) for a > 0, the CDF of X1 / X2 up to the mass where X2 < 0.

    That mass is 0.5 exp(-mu2 / b), negligible whenever the denominator's
    location is many scales above zero. The formula has a removable-looking
    pole at ``a == 1``; evaluate at ``1 +/- 1e-6`` and average instead.
    """
    if params.mu1 <= 0 or params.mu2 <= 0:
        raise DomainError("closed form requires positive locations")
    if not a > 0:
        raise DomainError("threshold must be positive")
    if abs(a - 1.0) < SINGULAR_GAP:
        raise SingularityError("closed form is singular at a = 1")
    return clamp_probability(_cdf_branches(params, float(a)))


def ratio_of_laplace_cdf_array(params, a):
    """Vectorised :func:`ratio_of_laplace_cdf` for goodness-of-fit checks.

    Thresholds at or below zero map to 0; thresholds within ``1e-9`` of 1 are
    replaced by the average at ``1 +/- 1e-6``.
    """
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    near = pos & (np.abs(a - 1.0) < SINGULAR_GAP)
    far = pos & ~near
    out[far] = _cdf_branches(params, a[far])
    if np.any(near):
        pair = _cdf_branches(params, np.array([1.0 - NEAR_ONE_OFFSET, 1.0 + NEAR_ONE_OFFSET]))
        out[near] = pair.mean()
    return clamp_probability(out)


# -- sample accuracy ---------------------------------------------------------


def _check_alpha_below_ratio(z, alpha):
    if not 0 < alpha < z:
        raise PreconditionError(f"need 0 < alpha < Z, got alpha={alpha}, Z={z}")


def noised_counts_accuracy(t, budget, alpha):
    """Failure probability of X~/Y~ at radius ``alpha`` (noise Lap(2/epsilon) per count)."""
    t.require_positive()
    eps, y = budget.epsilon, float(t.y)
    z = t.x / y
    _check_alpha_below_ratio(z, alpha)
    lo, hi = z - alpha, z + alpha
    third_den = (z**2 + alpha**2 - 1.0) ** 2 - 4.0 * alpha**2 * z**2
    if abs(lo - 1.0) < SINGULAR_GAP or abs(hi - 1.0) < SINGULAR_GAP or abs(third_den) < SINGULAR_GAP:
        raise SingularityError("Z - alpha or Z + alpha too close to 1")
    beta = (
        (0.5 + 0.5 / (lo**2 - 1.0)) * math.exp(-eps * alpha * y / (2.0 * lo))
        + (0.5 + 0.5 / (hi**2 - 1.0)) * math.exp(-eps * alpha * y / (2.0 * hi))
        - (z**2 + alpha**2 - 1.0) / third_den * math.exp(-eps * alpha * y / 2.0)
    )
    return AccuracyBound(alpha, clamp_probability(beta))


def noised_log_accuracy(t, budget, alpha):
    t.require_positive()
    z = t.ratio
    _check_alpha_below_ratio(z, alpha)
    k = budget.epsilon / LOG2
    beta = 0.5 * (alpha / z + 1.0) ** (-k) + 0.5 * (1.0 - alpha / z) ** k
    return AccuracyBound(alpha, clamp_probability(beta))


def naive_accuracy(t, budget, alpha):
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    return AccuracyBound(alpha, math.exp(-2.0 * alpha * budget.epsilon / t.n_x))


def smooth_sensitivity_accuracy(t, budget, alpha):
    """Laplace tail at radius alpha for noise scale 2 S* / epsilon."""
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    s_star = smooth_sensitivity_ratio(t, budget)
    return AccuracyBound(alpha, math.exp(-alpha * budget.epsilon / (2.0 * s_star)))


def ptr_fail_probability(t, budget, proposed):
    gamma = ptr_distance_to_unsafe(t, proposed)
    eps1 = budget.epsilon / 2.0
    return laplace_cdf(LaplaceDist(gamma, 1.0 / eps1), ptr_threshold(budget))


def ptr_accuracy(t, budget, alpha, proposed):
    """FAIL counts as an error: beta = P(FAIL) + P(pass) P(|Lap(proposed/eps2)| > alpha)."""
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    p_fail = ptr_fail_probability(t, budget, proposed)
    eps2 = budget.epsilon / 2.0
    beta = p_fail + (1.0 - p_fail) * math.exp(-alpha * eps2 / proposed)
    return AccuracyBound(alpha, clamp_probability(beta))


# -- bias of the maxed ratio -------------------------------------------------


def _inverse_max_moment(y, eps):
    """E[1 / max(Y + Lap(2/eps), 1)] via the exponential integral."""
    c = eps * y / 2.0
    if c > EI_MAX_ARG:
        raise RangeError(
            f"epsilon*Y/2 = {c:g} exceeds the exponential integral's range; "
            "use noised_counts_bias_approx"
        )
    # e^{-c} Ei(c) and e^{c} Ei(-c) are formed without overflow
    low = math.exp(eps / 2.0 - c) * ei_scaled(eps / 2.0)
    return (
        0.5 * math.exp(eps * (1.0 - y) / 2.0)
        + eps / 4.0 * (ei_scaled(c) - low)
        - eps / 4.0 * ei_scaled(-c)
    )


def noised_counts_bias_exact(t, budget):
    """E[X~ / max(Y~, 1)] in closed form (X times a factor depending on Y and epsilon)."""
    if t.y < 1:
        raise DomainError("y must be at least 1")
    return t.x * _inverse_max_moment(float(t.y), budget.epsilon)


def noised_counts_bias(t, budget):
    """E[X~ / max(Y~, 1)] - X/Y."""
    return noised_counts_bias_exact(t, budget) - t.ratio


def _pv_integral(c):
    # PV of int_{-inf}^0 -e^u / (u^2 - c^2) du; pole at u = -c.
    # Below u = -c - 50 the integrand is under e^-50 relative to its peak.
    lower = -c - 50.0

    def g(u):
        return -math.exp(u) / (u - c)

    val, err = integrate.quad(g, lower, 0.0, weight="cauchy", wvar=-c, epsabs=1e-14, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
        raise NumericalError(f"principal-value quadrature did not converge (err={err:g})")
    return val


def noised_counts_bias_approx(t, budget):
    """Z (eps Y)^2 / 4 times PV int_{-inf}^0 -e^u / (u^2 - (eps Y / 2)^2) du.

    Drops the terms of the exact expectation that vanish like exp(-eps Y / 2).
    """
    t.require_positive()
    c = budget.epsilon * t.y / 2.0
    if not c > 1:
        raise PreconditionError("approximation needs epsilon * Y / 2 > 1")
    return t.ratio * c**2 * _pv_integral(c)


def prob_denominator_below_one(y, budget):
    """P(Y + Lap(2/epsilon) < 1)."""
    if y < 1:
        raise DomainError("y must be at least 1")
    return laplace_cdf(LaplaceDist(float(y), 2.0 / budget.epsilon), 1.0)


def closed_form_accuracy(method, t, budget, alpha):
    """Dispatch to the closed-form bound for ``method`` (PTR needs a proposal; use :func:`ptr_accuracy`)."""
    method = str(getattr(method, "value", method))
    if method == "noised-counts":
        return noised_counts_accuracy(t, budget, alpha)
    if method == "noised-log":
        return noised_log_accuracy(t, budget, alpha)
    if method == "naive":
        return naive_accuracy(t, budget, alpha)
    if method == "smooth-sens":
        return smooth_sensitivity_accuracy(t, budget, alpha)
    raise DomainError(f"no closed-form accuracy for method {method!r}")
