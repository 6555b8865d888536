"""Release a relative risk under differential privacy with each estimator.

Run: python3 demos/01_private_ratio_estimates.py
"""

from dpratio import CountTable, PrivacyBudget, RngHandle, estimate
from dpratio.estimators import Method

table = CountTable(x=100, y=50, n_x=150, n_y=150)
rng = RngHandle(7)
print(f"true ratio X/Y = {table.ratio:.4f}")

for method in (Method.NOISED_COUNTS, Method.NOISED_COUNTS_MAXED, Method.NOISED_LOG,
               Method.NOISED_LOG_DEBIASED, Method.NAIVE):
    est = estimate(rng, table, PrivacyBudget(1.0), method)
    print(f"{method.value:22s} {est.value:10.4f}")

# Local-sensitivity methods spend a little delta as well.
budget = PrivacyBudget(1.0, 1 / 150)
print(f"{'smooth-sens':22s} {estimate(rng, table, budget, Method.SMOOTH_SENS).value:10.4f}")
outcome = estimate(rng, table, budget, Method.PTR, proposed=0.05)
shown = "FAIL" if outcome.failed else f"{outcome.estimate.value:.4f}"
print(f"{'ptr (proposal 0.05)':22s} {shown:>10s}  gamma_hat={outcome.gamma_hat:.1f} threshold={outcome.threshold:.1f}")
