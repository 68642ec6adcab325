"""Kinematics of the flow: the derivative tower and trajectory jets.

For an autonomous field f this module produces, at one state or at a
batch of states,

    V      = f(X)                      velocity
    J      = df                        Jacobian, J[i, k] = dV_i/dx_k
    H      = d2 f                      H[i, j, k], symmetric in (j, k)
    T3     = d3 f                      T3[i, j, k, l], symmetric in (j, k, l)
    gamma  = J V                       acceleration along the flow
    Jdot   = (H . V)                   time derivative of J along the flow
    jerk   = J gamma + Jdot V
    Jddot  = (H . gamma) + (T3 : V V)
    snap   = J jerk + 2 Jdot gamma + Jddot V

Everything is algebra on exact jet coefficients; no finite differences.
Batched variants carry trailing batch axes so dense grids evaluate in
vectorized passes.

flow_jet computes temporal Taylor coefficients of the trajectory
through X by an independent route (a coefficient recurrence on
univariate jets), which is what makes it a meaningful cross-check of
the bundle: k! a_k must reproduce V, gamma, jerk, snap.
"""

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import FieldOverflowError


@dataclass(frozen=True)
class DerivativeTensors:
    """Jacobian and the two higher derivative tensors of the field."""

    J: np.ndarray
    H: np.ndarray
    T3: np.ndarray


@dataclass(frozen=True)
class KinematicsBundle:
    """Velocity through snap, plus the Jacobian tower, at X."""

    X: np.ndarray
    V: np.ndarray
    gamma: np.ndarray
    jerk: np.ndarray
    snap: np.ndarray
    J: np.ndarray
    Jdot: np.ndarray
    Jddot: np.ndarray
    trace_J: np.ndarray


class _ExtractionIndex:
    """Coefficient positions and factorial scales for reading H and T3
    straight out of degree-3 jet coefficients."""

    def __init__(self, n):
        sp = jets.space(n)
        e = np.eye(n, dtype=int)
        idx2 = np.empty((n, n), dtype=int)
        for j in range(n):
            for k in range(n):
                idx2[j, k] = sp.index[tuple(e[j] + e[k])]
        idx3 = np.empty((n, n, n), dtype=int)
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    idx3[j, k, l] = sp.index[tuple(e[j] + e[k] + e[l])]
        self.space = sp
        self.idx2 = idx2
        self.idx3 = idx3
        self.mult2 = sp.factorials[idx2]
        self.mult3 = sp.factorials[idx3]


_EXTRACTION = {n: _ExtractionIndex(n) for n in (2, 3)}


def _component_coeffs(field, XS):
    """Jet coefficients of every field component, shape (n, ncoeff, *batch)."""
    XS = np.asarray(XS, dtype=float)
    n = field.dimension
    seeds = jets.variables(XS)
    sp = seeds[0].space
    env = dict(field.parameters)
    for name, seed in zip(field.variables, seeds):
        env[name] = seed
    batch = XS.shape[1:]
    rows = []
    with np.errstate(all="ignore"):
        for comp in field.components:
            val = comp.evaluate(env)
            if isinstance(val, jets.Jet):
                rows.append(np.broadcast_to(val.coeffs, (sp.ncoeff, *batch)))
            else:  # component free of state variables
                c = np.zeros((sp.ncoeff, *batch))
                c[0] = val
                rows.append(c)
    return np.stack(rows)


def _tensors_from_coeffs(C, n):
    ex = _EXTRACTION[n]
    nbatch = C.ndim - 2
    pad = (1,) * nbatch
    J = C[:, 1 : 1 + n]
    H = C[:, ex.idx2] * ex.mult2.reshape(1, n, n, *pad)
    T3 = C[:, ex.idx3] * ex.mult3.reshape(1, n, n, n, *pad)
    return J, H, T3


def _bundle_from_coeffs(XS, C, n):
    V = C[:, 0]
    J, H, T3 = _tensors_from_coeffs(C, n)
    gamma = np.einsum("ij...,j...->i...", J, V)
    Jdot = np.einsum("ijk...,k...->ij...", H, V)
    jerk = np.einsum("ij...,j...->i...", J, gamma) + np.einsum(
        "ij...,j...->i...", Jdot, V
    )
    Jddot = np.einsum("ijk...,k...->ij...", H, gamma) + np.einsum(
        "ijkl...,k...,l...->ij...", T3, V, V
    )
    snap = (
        np.einsum("ij...,j...->i...", J, jerk)
        + 2.0 * np.einsum("ij...,j...->i...", Jdot, gamma)
        + np.einsum("ij...,j...->i...", Jddot, V)
    )
    return KinematicsBundle(
        X=XS,
        V=V,
        gamma=gamma,
        jerk=jerk,
        snap=snap,
        J=J,
        Jdot=Jdot,
        Jddot=Jddot,
        trace_J=np.einsum("ii...->...", J),
    )


def _check_state(field, X):
    X = np.asarray(X, dtype=float)
    if X.shape != (field.dimension,):
        raise ValueError(
            f"state must have shape ({field.dimension},), got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("state contains non-finite values")
    return X


def derivatives(field, X):
    """Exact J, H, T3 of the field at one state."""
    X = _check_state(field, X)
    C = _component_coeffs(field, X)
    J, H, T3 = _tensors_from_coeffs(C, field.dimension)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(H)) and np.all(np.isfinite(T3))):
        raise FieldOverflowError(f"derivatives are non-finite at {X.tolist()}")
    return DerivativeTensors(J=J, H=H, T3=T3)


def kinematics_at(field, X):
    """Full kinematic bundle at one state."""
    X = _check_state(field, X)
    b = kinematics_many(field, X)
    if not np.all(np.isfinite(b.snap)):
        raise FieldOverflowError(f"kinematics are non-finite at {X.tolist()}")
    return b


def kinematics_many(field, XS):
    """Kinematic bundle at many states; XS is coordinates-first with
    shape (dim, *batch) and every bundle array carries the batch axes.
    No finiteness screening happens here."""
    return bundle_with_tensors(field, XS)[0]


def bundle_with_tensors(field, XS):
    """Batched bundle plus the raw J/H/T3 tensors in one jet pass.

    The gradient machinery for compound scalars needs both; computing
    them together avoids evaluating the expression tree twice.
    """
    XS = np.asarray(XS, dtype=float)
    if XS.shape[0] != field.dimension:
        raise ValueError(f"coordinate axis must have length {field.dimension}")
    C = _component_coeffs(field, XS)
    bundle = _bundle_from_coeffs(XS, C, field.dimension)
    tensors = DerivativeTensors(*_tensors_from_coeffs(C, field.dimension))
    return bundle, tensors


def flow_jet(field, X, order=4):
    """Temporal Taylor coefficients of the trajectory through X.

    Returns a_0..a_order with x(t) = sum_k a_k t^k, built by the
    standard coefficient recurrence (k+1) a_{k+1} = [t^k] f(x(t)) on
    univariate jets.  X may be a single state (dim,) or a batch
    (dim, *batch); the result has shape (order+1, dim, *batch).
    """
    if not 1 <= order <= 4:
        raise ValueError(f"order must be between 1 and 4, got {order}")
    XS = np.asarray(X, dtype=float)
    if XS.shape[0] != field.dimension:
        raise ValueError(f"coordinate axis must have length {field.dimension}")
    n = field.dimension
    sp1 = jets.space(1)
    batch = XS.shape[1:]
    A = np.zeros((order + 1, n, *batch))
    A[0] = XS
    with np.errstate(all="ignore"):
        for k in range(order):
            env = dict(field.parameters)
            for i, name in enumerate(field.variables):
                c = np.zeros((sp1.ncoeff, *batch))
                c[: k + 1] = A[: k + 1, i]
                env[name] = jets.Jet(sp1, c)
            for i, comp in enumerate(field.components):
                val = comp.evaluate(env)
                fk = val.coeffs[k] if isinstance(val, jets.Jet) else (
                    val if k == 0 else 0.0
                )
                A[k + 1, i] = np.asarray(fk) / (k + 1)
    return A
