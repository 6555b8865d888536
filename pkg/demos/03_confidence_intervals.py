"""Interval estimates for the relative risk from raw and from noised counts.

Run: python3 demos/03_confidence_intervals.py
"""

import numpy as np

from dpratio import CountTable, PrivacyBudget, ProportionPair, RngHandle
from dpratio import calibrate_gaussian_balle, classic_ci, conservative_ci, private_asymptotic_ci
from dpratio.confidence import laplace_noise_variance

table = CountTable(100, 80, 200, 200)
print("classic (non-private):", classic_ci(table, 0.95))

rng = RngHandle(5)
eps = 0.5
x_t, y_t = (max(c + rng.laplace(0.0, 2 / eps), 1.0) for c in (table.x, table.y))
pair = ProportionPair(x_t, y_t, table.n_x, table.n_y, noise_variance=laplace_noise_variance(eps))
print("asymptotic on Laplace counts:", private_asymptotic_ci(pair, 0.95))
print("conservative on Laplace counts:", conservative_ci(pair, 0.95, noise="laplace"))

# Gaussian counts: each count gets half of (epsilon, delta).
sigma = calibrate_gaussian_balle(PrivacyBudget(eps / 2, 0.5e-4), 1.0).sigma
x_g, y_g = (max(c + rng.normal(0.0, sigma), 1.0) for c in (table.x, table.y))
pair = ProportionPair(x_g, y_g, table.n_x, table.n_y, noise_variance=sigma**2)
print(f"conservative on Gaussian counts (sigma={sigma:.3f}):", conservative_ci(pair, 0.95))
print("true ratio:", np.round(table.ratio, 4))
