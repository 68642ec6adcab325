# Defining vector fields from text.
#
# A model is a small declaration: a dimension, optional parameters, and
# one dx/dt line per coordinate.  Parsing gives a VectorField whose
# right-hand side can be evaluated at single states or whole batches.

import numpy as np

from flowcurv import BUILTIN_MODELS, builtin, parse_model

print("builtin models:", ", ".join(BUILTIN_MODELS))

vdp = builtin("vdp")
print("\nvan der Pol, relaxation form (eps multiplies the fast direction):")
print(vdp.pretty())

print("velocity at (1, 1):", vdp.velocity([1.0, 1.0]))

# parameters bind at construction; overriding them gives a new field
stiff = builtin("vdp", {"eps": 0.01})
print("same point, eps = 0.01:", stiff.velocity([1.0, 1.0]))

# batches are coordinates-first: shape (dim, n)
pts = np.array([[1.0, 2.0, 0.5], [1.0, -1.0, 0.0]])
print("\nbatched velocities:\n", vdp.velocity_many(pts))

# any autonomous 2-D or 3-D system can be declared the same way
text = """
dim = 3
param a = 0.2
param b = 0.2
param c = 5.7
dx/dt = -y - z
dy/dt = x + a*y
dz/dt = b + z*(x - c)
"""
roessler = parse_model(text)
print("\na hand-written 3-D model:")
print(roessler.pretty())
print("velocity at (1, 1, 1):", roessler.velocity([1.0, 1.0, 1.0]))
