"""Compare the closed-form and the tight Gaussian noise calibration.

Run: python3 demos/04_gaussian_calibration.py
"""

from dpratio import PrivacyBudget, calibrate_gaussian_balle, calibrate_gaussian_dwork
from dpratio.mechanisms import balle_delta

print("epsilon   delta     dwork    tight   delta at tight sigma")
for eps, delta in [(0.5, 1e-4), (0.25, 5e-5), (0.9, 1e-6), (0.1, 1e-2)]:
    b = PrivacyBudget(eps, delta)
    d = calibrate_gaussian_dwork(b, 1.0).sigma
    t = calibrate_gaussian_balle(b, 1.0).sigma
    print(f"{eps:7.2f}  {delta:7.0e}  {d:7.3f}  {t:7.3f}   {balle_delta(eps, 1.0, t):.3e}")
