"""Special functions, distributions and seeded sampling.

The exponential integral is implemented here directly; the standard normal
CDF and quantile are thin wrappers over :mod:`scipy.special`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from dpratio.errors import DomainError, NumericalError, RangeError

EULER_GAMMA = 0.57721566490153286061

# Ei(x) overflows a double just above this point.
EI_MAX_ARG = 709.0

_SERIES_LIMIT = 40.0
_EPS = 1e-17

_MAX_INVERSION_N = 10_000


# -- exponential integral ---------------------------------------------------


def _ei_series(x):
    # Ei(x) = gamma + ln|x| + sum_{k>=1} x^k / (k k!)
    total = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= x / k
        contrib = term / k
        total += contrib
        if abs(contrib) <= _EPS * abs(total) or k > 500:
            break
    return EULER_GAMMA + math.log(abs(x)) + total


def _ei_asymptotic(x, scaled=False):
    # Ei(x) ~ e^x / x * sum_k k! / x^k, truncated at the smallest term.
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * k / x
        if abs(nxt) >= abs(term) or abs(nxt) <= _EPS:
            if abs(nxt) <= _EPS:
                total += nxt
            break
        term = nxt
        total += term
    return total / x if scaled else math.exp(x) / x * total


def _e1_continued_fraction(z, scaled=False):
    """E1(z) for z > 1 by the modified Lentz method (times e^z if ``scaled``)."""
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h if scaled else h * math.exp(-z)
    raise NumericalError("continued fraction for E1 did not converge")


def ei(x):
    """Principal-value exponential integral Ei(x) = PV int_{-inf}^x e^t/t dt.

    Raises:
        DomainError: ``x == 0`` (logarithmic singularity).
        RangeError: ``x`` large enough that Ei(x) overflows.
    """
    x = float(x)
    if x == 0.0:
        raise DomainError("Ei is singular at 0")
    if math.isnan(x):
        raise DomainError("Ei of NaN")
    if x > EI_MAX_ARG:
        raise RangeError(f"Ei({x}) overflows double precision")
    if x < -1.0:
        return -_e1_continued_fraction(-x)
    if x <= _SERIES_LIMIT:
        return _ei_series(x)
    return _ei_asymptotic(x)


def ei_scaled(x):
    """exp(-x) * Ei(x), finite for every nonzero ``x``."""
    x = float(x)
    if x == 0.0 or math.isnan(x):
        raise DomainError("Ei is singular at 0")
    if x < -1.0:
        return -_e1_continued_fraction(-x, scaled=True)
    if x <= _SERIES_LIMIT:
        return math.exp(-x) * _ei_series(x)
    return _ei_asymptotic(x, scaled=True)


# -- distributions ----------------------------------------------------------


@dataclass(frozen=True)
class LaplaceDist:
    """Laplace law with location ``mu`` and scale ``b``."""

    mu: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"Laplace scale must be positive, got {self.b}")

    @property
    def variance(self):
        return 2.0 * self.b**2


@dataclass(frozen=True)
class GaussianDist:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"Gaussian sigma must be positive, got {self.sigma}")

    @property
    def variance(self):
        return self.sigma**2


def laplace_cdf(d, x):
    """P(L <= x) for L ~ Laplace(d.mu, d.b). Accepts scalars or arrays."""
    z = (np.asarray(x, dtype=float) - d.mu) / d.b
    out = np.where(z <= 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))
    return float(out) if out.ndim == 0 else out


def laplace_quantile(d, p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("quantile requires p strictly inside (0, 1)")
    out = np.where(p <= 0.5, d.mu + d.b * np.log(2 * p), d.mu - d.b * np.log(2 * (1 - p)))
    return float(out) if out.ndim == 0 else out


def gaussian_cdf(x):
    """Standard normal CDF."""
    return special.ndtr(x)


def gaussian_quantile(p):
    """Standard normal quantile; ``p`` must lie strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0) | (arr >= 1)) or np.any(np.isnan(arr)):
        raise DomainError("quantile requires p strictly inside (0, 1)")
    return special.ndtri(p)


# -- random streams ---------------------------------------------------------


@functools.lru_cache(maxsize=256)
def _binomial_cdf_table(n, p):
    table = stats.binom.cdf(np.arange(n + 1), n, p)
    table[-1] = 1.0
    return table


@dataclass
class RngHandle:
    """Counter-based random stream identified by ``(seed, stream)``.

    Two handles built from the same pair produce identical variates. Distinct
    stream ids give statistically independent sequences (Philox keyed on
    both integers), which is how simulation replicates get their own streams.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise DomainError("seed and stream must be unsigned 64-bit integers")
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream):
        return RngHandle(self.seed, stream)

    def uniform(self, size=None):
        return self._gen.random(size)

    def laplace(self, mu, b, size=None):
        return self._gen.laplace(mu, b, size)

    def normal(self, mu, sigma, size=None):
        return self._gen.normal(mu, sigma, size)

    def binomial(self, n, p, size=None):
        """Binomial variates by CDF inversion (exact for ``n <= 10_000``)."""
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"binomial p must lie in [0, 1], got {p}")
        if n > _MAX_INVERSION_N:
            return self._gen.binomial(n, p, size)
        table = _binomial_cdf_table(int(n), float(p))
        u = self._gen.random(size)
        k = np.minimum(np.searchsorted(table, u, side="right"), n)
        return int(k) if np.ndim(k) == 0 else k.astype(np.int64)


def sample_laplace(rng, d, size=None):
    return rng.laplace(d.mu, d.b, size)


def sample_gaussian(rng, d, size=None):
    return rng.normal(d.mu, d.sigma, size)


def sample_binomial(rng, n, p, size=None):
    if n < 0:
        raise DomainError("binomial n must be nonnegative")
    return rng.binomial(n, p, size)
