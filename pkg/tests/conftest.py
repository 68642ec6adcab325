"""Shared oracle helpers: symbolic reference values via sympy."""

import numpy as np
import sympy as sp

from flowcurv.models import Add, Const, Mul, Sym, VectorField


def sympy_components(field):
    """Exact symbolic copies of a field's components, parameters bound
    as exact rationals of their double values."""
    locs = {
        name: sp.Rational(*float(v).as_integer_ratio())
        for name, v in field.parameters.items()
    }
    locs["ln"] = sp.log
    return [
        sp.sympify(c.text().replace("^", "**"), locals=dict(locs))
        for c in field.components
    ]


def sympy_point(field, X):
    """Substitution mapping at an exact-double point."""
    syms = sp.symbols(list(field.variables))
    return syms, {
        s: sp.Rational(*float(v).as_integer_ratio()) for s, v in zip(syms, X)
    }


def sympy_tensors(field, X):
    """J, H, T3 at X by symbolic differentiation, as float arrays."""
    n = field.dimension
    comps = sympy_components(field)
    syms, subs = sympy_point(field, X)
    J = np.empty((n, n))
    H = np.empty((n, n, n))
    T3 = np.empty((n, n, n, n))
    for i in range(n):
        for k in range(n):
            J[i, k] = float(sp.diff(comps[i], syms[k]).subs(subs).evalf(30))
            for j in range(n):
                H[i, j, k] = float(
                    sp.diff(comps[i], syms[j], syms[k]).subs(subs).evalf(30)
                )
                for l in range(n):
                    T3[i, j, k, l] = float(
                        sp.diff(comps[i], syms[j], syms[k], syms[l])
                        .subs(subs)
                        .evalf(30)
                    )
    return J, H, T3


def rotation_2d(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_3d(alpha, beta):
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    Rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]])
    return Rz @ Rx


def rotated_field(field, R):
    """The pushforward g(u) = R f(R^T u), built by tree substitution."""
    names = field.variables
    n = field.dimension
    mapping = {}
    for j in range(n):
        # (R^T u)_j = sum_i R[i, j] u_i
        term = None
        for i in range(n):
            piece = Mul(Const(float(R[i, j])), Sym(names[i]))
            term = piece if term is None else Add(term, piece)
        mapping[names[j]] = term
    substituted = [c.substitute(mapping) for c in field.components]
    new_components = []
    for i in range(n):
        term = None
        for j in range(n):
            piece = Mul(Const(float(R[i, j])), substituted[j])
            term = piece if term is None else Add(term, piece)
        new_components.append(term)
    return VectorField(
        dimension=n,
        components=tuple(new_components),
        parameters=dict(field.parameters),
        variables=names,
    )


def scaled_field(field, lam):
    """The time-rescaled field lam * f."""
    return VectorField(
        dimension=field.dimension,
        components=tuple(Mul(Const(float(lam)), c) for c in field.components),
        parameters=dict(field.parameters),
        variables=field.variables,
    )
