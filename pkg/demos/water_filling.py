"""Worst-case mode distributions inside a total-variation ball.

Takes a nominal distribution over four modes and a loss per mode, then shows
how the worst-case distribution drains the low-loss modes into the top one as
the radius grows.  Each value is checked against the brute-force oracle.

Run with ``python3 demos/water_filling.py``.
"""
import numpy as np

from drgpb import brute_force_oracle, partition_levels, tvd_distance, waterfill

mu = np.array([0.1, 0.4, 0.3, 0.2])
L = np.array([3.0, 1.0, 2.0, 5.0])     # mode 3 has the largest loss
part = partition_levels(L)
print("top set", part.theta_top, "levels", [(m, v) for m, v in part.levels])
print(f"nominal value {mu @ L:.4f}\n")

print(f"{'R_TV':>5}  {'alpha':>6}  {'nu*':<28} {'value':>7}  {'oracle':>7}  case")
for r in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    wf = waterfill(mu, part, r)
    oracle, _ = brute_force_oracle(mu, L, r)
    nu = np.array2string(wf.nu_star, precision=3, floatmode="fixed")
    print(f"{r:5.2f}  {wf.alpha:6.3f}  {nu:<28} {wf.value:7.4f}  {oracle:7.4f}  "
          f"{wf.case_tag.case}" + (f" (z={wf.case_tag.z})" if wf.case_tag.z is not None else ""))
    assert tvd_distance(wf.nu_star, mu) <= r + 1e-12

# mass beyond the lower levels cannot be moved: alpha saturates at 1 - mu[top]
print("\nalpha saturates at", 1 - mu[3])
