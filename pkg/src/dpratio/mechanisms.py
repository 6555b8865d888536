"""Noise calibration for the Laplace and Gaussian mechanisms.

Budget splitting is never done here: a caller that spends half of its
epsilon on each of two counts passes ``epsilon / 2`` explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dpratio.errors import (
    DegenerateScaleError,
    DomainError,
    NumericalError,
    OutOfValidityError,
)
from dpratio.numerics import GaussianDist, LaplaceDist, gaussian_cdf

DEFAULT_TOL = 1e-9
MAX_ITER = 200


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair. ``delta == 0`` means pure DP."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise DomainError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def is_pure(self):
        return self.delta == 0.0

    def split(self, parts=2):
        """Equal split of epsilon and delta into ``parts`` budgets."""
        return PrivacyBudget(self.epsilon / parts, self.delta / parts)


@dataclass(frozen=True)
class Sensitivity:
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"sensitivity must be nonnegative, got {self.value}")


def _sens(s):
    return s.value if isinstance(s, Sensitivity) else Sensitivity(float(s)).value


def laplace_scale(budget, s):
    """Laplace scale b = sensitivity / epsilon."""
    value = _sens(s)
    if value == 0:
        raise DegenerateScaleError("zero sensitivity gives a degenerate Laplace scale")
    return value / budget.epsilon


def laplace_noise(budget, s):
    return LaplaceDist(0.0, laplace_scale(budget, s))


def calibrate_gaussian_dwork(budget, s):
    """Classic calibration sigma^2 = 2 ln(1.25/delta) sensitivity^2 / epsilon^2.

    Only valid for epsilon in (0, 1) and delta in (0, 1).
    """
    value = _sens(s)
    if not 0 < budget.epsilon < 1:
        raise OutOfValidityError(
            f"classic Gaussian calibration needs epsilon in (0, 1), got {budget.epsilon}"
        )
    if not 0 < budget.delta < 1:
        raise OutOfValidityError(f"delta must lie in (0, 1), got {budget.delta}")
    if value == 0:
        raise DegenerateScaleError("zero sensitivity gives a degenerate Gaussian scale")
    sigma = math.sqrt(2.0 * math.log(1.25 / budget.delta)) * value / budget.epsilon
    return GaussianDist(0.0, sigma)


def balle_delta(epsilon, sensitivity, sigma):
    """Smallest delta for which N(0, sigma^2) noise is (epsilon, delta)-DP.

    Phi(D/2s - e s/D) - exp(e) Phi(-D/2s - e s/D); strictly decreasing in sigma.
    """
    sigma = np.asarray(sigma, dtype=float)
    a = sensitivity / (2.0 * sigma)
    c = epsilon * sigma / sensitivity
    out = gaussian_cdf(a - c) - math.exp(epsilon) * gaussian_cdf(-a - c)
    return float(out) if out.ndim == 0 else out


def calibrate_gaussian_balle(budget, s, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Tight Gaussian calibration: the smallest sigma meeting the exact DP condition.

    Brackets the root of ``balle_delta(sigma) = delta`` and bisects until the
    bracket is narrower than ``tol`` relative to its upper end. The upper end
    (which satisfies the condition) is returned.
    """
    eps, delta = budget.epsilon, budget.delta
    value = _sens(s)
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if value == 0:
        raise DegenerateScaleError("zero sensitivity gives a degenerate Gaussian scale")

    lo = value / (2.0 * eps) * 1e-3
    if eps < 1:
        hi = calibrate_gaussian_dwork(budget, value).sigma
    else:
        hi = value * (1.0 + math.sqrt(2.0 * math.log(1.25 / delta))) / eps
    for _ in range(max_iter):
        if balle_delta(eps, value, hi) <= delta:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalError("could not bracket the Gaussian calibration")
    if balle_delta(eps, value, lo) <= delta:
        # pathological: lower end already private; shrink until it is not
        for _ in range(max_iter):
            lo /= 2.0
            if balle_delta(eps, value, lo) > delta:
                break
        else:
            raise NumericalError("could not bracket the Gaussian calibration")

    probe = balle_delta(eps, value, np.linspace(lo, hi, 9))
    if np.any(np.diff(probe) > 0):
        raise NumericalError("privacy-loss bound is not decreasing over the bracket")

    for _ in range(max_iter):
        if hi - lo <= tol * hi:
            return GaussianDist(0.0, hi)
        mid = 0.5 * (lo + hi)
        if balle_delta(eps, value, mid) <= delta:
            hi = mid
        else:
            lo = mid
    raise NumericalError(f"bisection did not reach tolerance {tol} in {max_iter} steps")


def apply_noise(rng, value, noise, size=None):
    """Return ``value`` plus one draw (or ``size`` draws) of zero-mean noise."""
    if noise.mu != 0:
        raise DomainError("mechanism noise must have zero mean")
    if isinstance(noise, LaplaceDist):
        return value + rng.laplace(0.0, noise.b, size)
    if isinstance(noise, GaussianDist):
        return value + rng.normal(0.0, noise.sigma, size)
    raise TypeError(f"unsupported noise law {type(noise).__name__}")
