"""How early must a robot start braking before red?

Run:  python3 demos/braking_estimate.py

Braking at full authority U against friction kappa, speed decays as
dv/dt = -U - kappa v. The robot does not know kappa exactly, only that it lies
in [kappa_low, kappa_up]; less friction means a longer stop, so the estimate
uses kappa_low and is never shorter than the real stop.
"""
import numpy as np
from scipy.optimize import brentq

from rlgl.dynamics import propagate
from rlgl.nominal import estimated_braking_time_axis

KL, KU, U = 0.0141, 0.2368, 0.3

for v0 in (0.5, 1.0, 1.5, 2.0):
    est = estimated_braking_time_axis(v0, U, KL)
    # the exact step gives v(t) in closed form; find where it crosses zero
    actual = []
    for kappa in (KL, 0.1, KU):
        def speed(t):
            return propagate(np.zeros(2), np.array([0.0, v0]), np.array([0.0, -U]), kappa, t)[1][1]
        actual.append(brentq(speed, 1e-9, 2 * est, xtol=1e-12))
    print(f"v0 = {v0:.1f} m/s  estimate {est:6.3f} s  "
          f"actual {' / '.join(f'{a:6.3f}' for a in actual)} s  (kappa low / mid / up)")

# With red at t_r, braking starts once t_r - t <= eta * estimate.
eta, v = 1.2, 1.5
lead = eta * estimated_braking_time_axis(v, U, KL)
print(f"at {v} m/s with eta = {eta}: start braking {lead:.3f} s before red "
      f"(t = {7 - lead:.3f} s for red at 7 s)")
