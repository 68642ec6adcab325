# Exact trajectory derivatives without symbolic algebra.
#
# Velocity, acceleration, jerk, and snap of the trajectory through a
# state are read off a truncated Taylor (jet) evaluation of the field:
# no finite differences, no hand-derived formulas.  A quick centered
# difference along an integrated trajectory confirms the values.

import numpy as np

from flowcurv import builtin, flow_jet, integrate, kinematics_at

lorenz = builtin("lorenz")
X = np.array([1.0, 2.0, 20.0])
b = kinematics_at(lorenz, X)

print("state          ", X)
print("velocity       ", b.V)
print("acceleration   ", b.gamma)
print("jerk           ", b.jerk)
print("snap           ", b.snap)
print("trace J        ", b.trace_J)

# the same numbers as Taylor coefficients of t -> x(t):
# x(t) = a0 + a1 t + a2 t^2 + ..., with a_k = x^(k)(0)/k!
coeffs = flow_jet(lorenz, X, order=4)
print("\nTaylor a2 * 2! ", coeffs[2] * 2.0, " (equals acceleration)")

# independent confirmation: difference quotients of the velocity along
# a tightly integrated trajectory converge to the acceleration
h = 1e-4
fwd = integrate(lorenz, X, h, rtol=1e-12, atol=1e-14).states[-1]
far = integrate(lorenz, X, 2 * h, rtol=1e-12, atol=1e-14).states[-1]
fd_gamma = (lorenz.velocity(far) - lorenz.velocity(X)) / (2 * h)
print("\ncentered difference of V around x(h):", fd_gamma)
print("analytic acceleration at x(h):       ", kinematics_at(lorenz, fwd).gamma)
err = np.max(np.abs(fd_gamma - kinematics_at(lorenz, fwd).gamma))
print(f"agreement: {err:.3e} (O(h^2) with h = {h})")
