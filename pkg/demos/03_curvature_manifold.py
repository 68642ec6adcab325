# The curvature manifold of a plane field and its invariance defect.
#
# For a 2-D field the scalar m2 = det[V, gamma] is the numerator of the
# signed trajectory curvature; {m2 = 0} collects the inflection points
# of all trajectories at once.  Along the flow m2 obeys the exact
# identity  L_X m2 = Tr(J) m2 + det[V, dJ/dt V],  so the zero set is
# invariant exactly when the correction determinant vanishes there
# (linear fields always; nonlinear fields generally not).

import numpy as np

from flowcurv import (
    ManifoldScalar,
    builtin,
    curvature,
    darboux_residual,
    invariance_report,
    lie_derivative,
    vdp_closed_form,
)

vdp = builtin("vdp")
m2 = ManifoldScalar(vdp)
X = [1.0, 1.0]

print("m2 at (1,1)      =", m2.value(X))
print("curvature        =", curvature(vdp, X).kappa)

r = darboux_residual(vdp, X)
print("\nL_X m2           =", r.lie_m)
print("Tr(J) m2         =", r.trace_term)
print("correction term  =", r.expected)
print("identity defect  =", r.residual - r.expected, " (exact zero)")

# the relaxation oscillator happens to have a polynomial closed form
# proportional to m2; the proportionality constant is -1/(9 eps^2)
cf = vdp_closed_form(1.0, 1.0, 0.05)
print("\nclosed form      =", cf.poly)
print("-9 eps^2 m2      =", -9 * 0.05**2 * m2.value(X))

# a first integral is the extreme case: L_X m2 vanishes identically
harmonic = builtin("harmonic")
print("\nharmonic m2 at (0.3, 0.7):", ManifoldScalar(harmonic).value([0.3, 0.7]))
print("harmonic L_X m2          :", ManifoldScalar(harmonic).lie([0.3, 0.7]))
# lie_derivative also accepts scalar expressions as text
print("same, from an expression :",
      lie_derivative(harmonic, "-(x^2 + y^2)", [0.3, 0.7]))

# how invariant is {m2 = 0} in practice?  Sample points, project them
# onto the zero set with Newton steps, and evaluate L_X m2 there.
rng = np.random.default_rng(0)
pts = rng.uniform(-2.0, 2.0, size=(40, 2))
rep = invariance_report(vdp, pts)
print("\nprojected sample points  :", rep.on_manifold_count)
print("max |L_X m2| on zero set :", rep.on_manifold_lie_max)
print("normalized defect        :", rep.on_manifold_normalized_max)
print("(nonzero: the inflection locus of this field is not flow-invariant)")
