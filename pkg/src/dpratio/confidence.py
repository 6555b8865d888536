"""Confidence intervals for the relative risk p_x / p_y.

Four constructions: the classic log-scale (Katz) interval on raw counts, the
asymptotic normal-ratio interval on noised counts, and its conservative
widening that adds the per-count noise variance.

The CI confidence parameter is called ``level`` (e.g. 0.95) throughout, to
keep it apart from the accuracy radius ``alpha`` used in :mod:`analysis`.

Noised counts must be clamped to at least 1 by the caller before they reach
this module; nonpositive inputs are rejected rather than repaired.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from dpratio.errors import DegenerateDataError, DomainError
from dpratio.numerics import gaussian_quantile


class CIMethod(str, enum.Enum):
    CLASSIC = "classic"
    PRIVATE_ASYMPTOTIC = "asymptotic"
    CONSERVATIVE_GAUSSIAN = "conservative-gaussian"
    CONSERVATIVE_LAPLACE = "conservative-laplace"


@dataclass(frozen=True)
class ProportionPair:
    """Noised (or raw) counts with their group sizes.

    ``noise_variance`` is the variance of the additive noise on each count,
    0 for non-private counts.
    """

    x_tilde: float
    y_tilde: float
    n_x: int
    n_y: int
    noise_variance: float = 0.0

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise DomainError("group sizes must be positive")
        if not self.noise_variance >= 0:
            raise DomainError("noise variance must be nonnegative")

    @property
    def p_x(self):
        return self.x_tilde / self.n_x

    @property
    def p_y(self):
        return self.y_tilde / self.n_y

    @property
    def ratio(self):
        return self.p_x / self.p_y


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: CIMethod

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError("lower bound exceeds upper bound")
        if not 0 < self.level < 1:
            raise DomainError("level must lie in (0, 1)")

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


def laplace_noise_variance(epsilon):
    """Per-count variance 2 b^2 of Lap(2/epsilon) noise."""
    return 2.0 * (2.0 / epsilon) ** 2


def critical_value(level):
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    return float(gaussian_quantile(1.0 - (1.0 - level) / 2.0))


# -- vectorised bounds -------------------------------------------------------


def classic_bounds(x, y, n_x, n_y, level):
    """Katz interval exp(log T +/- z sd) on arrays; NaN where undefined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = critical_value(level)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t = np.log((x / n_x) / (y / n_y))
        radicand = 1.0 / x - 1.0 / n_x + 1.0 / y - 1.0 / n_y
        sd = np.sqrt(np.maximum(radicand, 0.0))
        bad = (x <= 0) | (y <= 0) | (radicand < 0) | ~np.isfinite(log_t)
        lower = np.where(bad, np.nan, np.exp(log_t - z * sd))
        upper = np.where(bad, np.nan, np.exp(log_t + z * sd))
    return lower, upper


def ratio_bounds(x_tilde, y_tilde, n_x, n_y, level, noise_variance=0.0):
    """p~ +/- z V~ on arrays; NaN where the counts are nonpositive or V~ is undefined.

    ``noise_variance == 0`` gives the asymptotic interval, a positive value
    the conservative one.
    """
    x = np.asarray(x_tilde, dtype=float)
    y = np.asarray(y_tilde, dtype=float)
    z = critical_value(level)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (x / n_x) / (y / n_y)
        radicand = 1.0 / x - 1.0 / n_x + 1.0 / y - 1.0 / n_y
        radicand = radicand + noise_variance * (1.0 / x**2 + 1.0 / y**2)
        half = z * p * np.sqrt(radicand)
        bad = (x <= 0) | (y <= 0) | (radicand < 0)
        lower = np.where(bad, np.nan, p - half)
        upper = np.where(bad, np.nan, p + half)
    return lower, upper


# -- scalar API --------------------------------------------------------------


def classic_ci(t, level):
    """Classic log-scale interval around T = (X/n_x) / (Y/n_y)."""
    if t.x < 1 or t.y < 1:
        raise DomainError("classic interval needs positive counts (log of zero)")
    lower, upper = classic_bounds(t.x, t.y, t.n_x, t.n_y, level)
    if np.isnan(lower):
        raise DegenerateDataError("negative variance estimate")
    return ConfidenceInterval(float(lower), float(upper), level, CIMethod.CLASSIC)


def _ratio_ci(pp, level, noise_variance, method, truncate):
    if pp.x_tilde <= 0 or pp.y_tilde <= 0:
        raise DomainError("noised counts must be positive; clamp them at 1 first")
    lower, upper = ratio_bounds(pp.x_tilde, pp.y_tilde, pp.n_x, pp.n_y, level, noise_variance)
    if np.isnan(lower):
        raise DegenerateDataError("variance estimate is negative (noised count above its group size?)")
    lower = float(lower)
    if truncate:
        lower = max(lower, 0.0)
    return ConfidenceInterval(lower, float(upper), level, method)


def private_asymptotic_ci(pp, level, truncate=False):
    """Normal-ratio interval that ignores the privacy noise (asymptotically valid)."""
    return _ratio_ci(pp, level, 0.0, CIMethod.PRIVATE_ASYMPTOTIC, truncate)


def conservative_ci(pp, level, noise="gaussian", truncate=False):
    """Normal-ratio interval widened by the per-count noise variance.

    Exact for Gaussian noise; for Laplace noise pass its variance 2 b^2 and
    ``noise="laplace"``.
    """
    method = {
        "gaussian": CIMethod.CONSERVATIVE_GAUSSIAN,
        "laplace": CIMethod.CONSERVATIVE_LAPLACE,
    }[noise]
    return _ratio_ci(pp, level, pp.noise_variance, method, truncate)
