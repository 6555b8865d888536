"""Closed-form (alpha, beta) accuracy and the bias of the maxed noisy ratio.

Run: python3 demos/02_accuracy_and_bias.py
"""

import numpy as np

from dpratio import CountTable, PrivacyBudget, RngHandle
from dpratio import analysis, estimators

table = CountTable(100, 100, 150, 150)
print("epsilon  noised-counts  noised-log  naive   (1 - beta at alpha = 0.1)")
for eps in (0.25, 0.5, 1.0, 2.0, 4.0):
    b = PrivacyBudget(eps)
    row = [analysis.closed_form_accuracy(m, table, b, 0.1).accuracy for m in ("noised-counts", "noised-log", "naive")]
    print(f"{eps:7.2f}  {row[0]:13.4f}  {row[1]:10.4f}  {row[2]:.4f}")

print("\nE[X~ / max(Y~, 1)] for X = 100, Y = 50")
table = CountTable(100, 50, 150, 150)
rng = RngHandle(11)
for eps in (0.5, 1.0, 2.0):
    b = PrivacyBudget(eps)
    exact = analysis.noised_counts_bias_exact(table, b)
    approx = analysis.noised_counts_bias_approx(table, b)
    draws = estimators.laplace_noised_counts(rng, table, b, max_denominator=True, size=2_000_000).value
    print(f"eps={eps:4.1f} exact={exact:.5f} approx={approx:.5f} monte-carlo={np.mean(draws):.5f}")
