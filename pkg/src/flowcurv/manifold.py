"""Curvature and torsion manifolds and their Darboux invariance.

The central objects are the manifold scalars

    m2(X) = det[V gamma] = V_x gamma_y - V_y gamma_x     (2-D)
    m3(X) = jerk . (gamma x V)                           (3-D)

whose zero sets are flow-invariant: the Lie derivative along the flow
satisfies

    L_X m2 = Tr(J) m2 + det[V, Jdot V]
    L_X m3 = Tr(J) m3 + (-Tr(J) Jdot V + J Jdot V + 2 Jdot gamma
                         + Jddot V) . (gamma x V)

so on {m = 0} the derivative reduces to the extra term, which vanishes
identically for linear fields and on distinguished curves (for the van
der Pol field, on the cubic nullcline).  The signed determinant and
triple-product conventions keep every identity smooth and exact; the
unsigned norm ||gamma ^ V|| equals |m2| in the plane.

Gradients of m2 and m3 are differentiated through the full composition
using the exact derivative tensors (product rule over J, H, T3); no
finite differences enter anywhere.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import jets, kinematics, models
from .errors import (
    EvaluationDomainError,
    UndeclaredSymbolError,
    UndefinedCurvatureError,
    UndefinedTorsionError,
)


def _cross(a, b):
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def _dot(a, b):
    return np.einsum("i...,i...->...", a, b)


def _norm(a):
    return np.sqrt(np.einsum("i...,i...->...", a, a))


def _scalar_fields(bundle, tensors, dim):
    """m, grad m, L_X m, Tr(J) m, and the exact cofactor correction,
    all batched.  This is the single evaluation path every public
    manifold quantity goes through."""
    V, gamma, jerk = bundle.V, bundle.gamma, bundle.jerk
    J, Jdot, Jddot = bundle.J, bundle.Jdot, bundle.Jddot
    H, T3 = tensors.H, tensors.T3
    trace = bundle.trace_J

    # d gamma_i / dx_k = (H . V)_{ik} + (J^2)_{ik}
    dgamma = np.einsum("ijk...,j...->ik...", H, V) + np.einsum(
        "ij...,jk...->ik...", J, J
    )
    JdotV = np.einsum("ij...,j...->i...", Jdot, V)

    if dim == 2:
        m = V[0] * gamma[1] - V[1] * gamma[0]
        grad = np.stack(
            [
                J[0, k] * gamma[1]
                + V[0] * dgamma[1, k]
                - J[1, k] * gamma[0]
                - V[1] * dgamma[0, k]
                for k in range(2)
            ]
        )
        expected = V[0] * JdotV[1] - V[1] * JdotV[0]
    else:
        w = _cross(gamma, V)
        m = _dot(jerk, w)
        # d jerk_i / dx_k, by the product rule over J gamma + (H.V) V
        djerk = (
            np.einsum("ijk...,j...->ik...", H, gamma)
            + np.einsum("ij...,jk...->ik...", J, dgamma)
            + np.einsum("ijlk...,j...,l...->ik...", T3, V, V)
            + np.einsum("ijl...,jk...,l...->ik...", H, J, V)
            + np.einsum("ijl...,j...,lk...->ik...", H, V, J)
        )
        grad = np.empty_like(V)
        for k in range(3):
            dwk = _cross(dgamma[:, k], V) + _cross(gamma, J[:, k])
            grad[k] = _dot(djerk[:, k], w) + _dot(jerk, dwk)
        bracket = (
            -trace * JdotV
            + np.einsum("ij...,j...->i...", J, JdotV)
            + 2.0 * np.einsum("ij...,j...->i...", Jdot, gamma)
            + np.einsum("ij...,j...->i...", Jddot, V)
        )
        expected = _dot(bracket, w)

    lie = _dot(grad, V)
    return m, grad, lie, trace * m, expected


class ManifoldScalar:
    """The curvature (2-D) or torsion (3-D) manifold scalar of a field.

    Instances are callable on a single state, so they slot in anywhere
    a plain scalar function of the state is expected (event detection,
    level-set extraction, projection).
    """

    def __init__(self, field):
        self.field = field
        self.convention = (
            "det[V,gamma]" if field.dimension == 2 else "jerk.(gamma x V)"
        )
        self.name = f"m{field.dimension}"

    def _full(self, XS):
        bundle, tensors = kinematics.bundle_with_tensors(self.field, XS)
        return _scalar_fields(bundle, tensors, self.field.dimension)

    def value(self, X):
        X = kinematics._check_state(self.field, X)
        return float(self._full(X)[0])

    def gradient(self, X):
        X = kinematics._check_state(self.field, X)
        return self._full(X)[1]

    def lie(self, X):
        X = kinematics._check_state(self.field, X)
        return float(self._full(X)[2])

    def value_many(self, XS):
        return self._full(np.asarray(XS, dtype=float))[0]

    def gradient_many(self, XS):
        return self._full(np.asarray(XS, dtype=float))[1]

    def lie_many(self, XS):
        return self._full(np.asarray(XS, dtype=float))[2]

    def __call__(self, X):
        return self.value(X)


def manifold_scalar(field, X):
    """m2 or m3 at a single state."""
    return ManifoldScalar(field).value(X)


@dataclass(frozen=True)
class CurvatureResult:
    kappa: float
    radius: float


@dataclass(frozen=True)
class TorsionResult:
    tau: float
    torsion_radius: float


_EQUILIBRIUM_TOL = 1e-10


def curvature(field, X, equilibrium_tol=_EQUILIBRIUM_TOL):
    """Curvature of the trajectory through X: ||gamma ^ V|| / ||V||^3.

    Undefined at (numerical) equilibria, where the trajectory
    degenerates to a point.
    """
    X = kinematics._check_state(field, X)
    b = kinematics.kinematics_at(field, X)
    vnorm = float(_norm(b.V))
    if vnorm <= equilibrium_tol * (1.0 + float(_norm(X))):
        raise UndefinedCurvatureError(
            f"curvature undefined at equilibrium {X.tolist()}"
        )
    if field.dimension == 2:
        wnorm = abs(float(b.V[0] * b.gamma[1] - b.V[1] * b.gamma[0]))
    else:
        wnorm = float(_norm(_cross(b.gamma, b.V)))
    kappa = wnorm / vnorm**3
    return CurvatureResult(kappa=kappa, radius=1.0 / kappa if kappa > 0 else math.inf)


def torsion(field, X, equilibrium_tol=_EQUILIBRIUM_TOL):
    """Torsion of the trajectory through X: -jerk.(gamma x V)/||gamma x V||^2.

    Requires a 3-D field, a non-equilibrium point, and gamma not
    parallel to V.
    """
    if field.dimension != 3:
        raise ValueError("torsion requires a 3-D field")
    X = kinematics._check_state(field, X)
    b = kinematics.kinematics_at(field, X)
    vnorm = float(_norm(b.V))
    if vnorm <= equilibrium_tol * (1.0 + float(_norm(X))):
        raise UndefinedTorsionError(
            f"torsion undefined at equilibrium {X.tolist()}"
        )
    w = _cross(b.gamma, b.V)
    wnorm = float(_norm(w))
    if wnorm <= 1e-12 * float(_norm(b.gamma)) * vnorm:
        raise UndefinedTorsionError(
            f"torsion undefined where acceleration is parallel to velocity at {X.tolist()}"
        )
    tau = -float(_dot(b.jerk, w)) / wnorm**2
    return TorsionResult(tau=tau, torsion_radius=1.0 / tau if tau != 0 else math.inf)


def lie_derivative(field, phi, X):
    """L_X phi = grad(phi) . V at X, exactly, via jet arithmetic.

    phi may be a ManifoldScalar, an expression tree, expression text,
    or any callable that accepts jet coordinates and returns a jet.
    """
    X = kinematics._check_state(field, X)
    if isinstance(phi, ManifoldScalar):
        return phi.lie(X)
    if isinstance(phi, str):
        phi = models.parse_expression(phi)
    seeds = jets.variables(X)
    if isinstance(phi, models.Expr):
        env = dict(field.parameters)
        for name, seed in zip(field.variables, seeds):
            env[name] = seed
        missing = phi.symbols() - set(env)
        if missing:
            raise UndeclaredSymbolError(
                "undeclared symbol(s) in scalar expression: "
                + ", ".join(sorted(missing))
            )
        val = phi.evaluate(env)
    else:
        val = phi(*seeds)
    if not isinstance(val, jets.Jet):
        raise TypeError(
            "phi must evaluate jets to jets; wrap plain callables so they "
            "operate on their arguments arithmetically"
        )
    grad = val.coeffs[1 : 1 + field.dimension]
    V = field.velocity(X)
    return float(np.dot(grad, V))


@dataclass(frozen=True)
class DarbouxResidual:
    """L_X m decomposed against the invariance identity at one point."""

    m: float
    lie_m: float
    trace_term: float
    residual: float  # lie_m - trace_term; equals `expected` analytically
    expected: float


def darboux_residual(field, X):
    """Evaluate the invariance identity for the manifold scalar at X.

    residual = L_X m - Tr(J) m is returned together with its exact
    analytic value (det[V, Jdot V] in the plane, the bracket term in
    space); the two agree to roundoff.
    """
    X = kinematics._check_state(field, X)
    bundle, tensors = kinematics.bundle_with_tensors(field, X)
    m, _, lie, trace_term, expected = _scalar_fields(
        bundle, tensors, field.dimension
    )
    return DarbouxResidual(
        m=float(m),
        lie_m=float(lie),
        trace_term=float(trace_term),
        residual=float(lie - trace_term),
        expected=float(expected),
    )


@dataclass(frozen=True)
class VdpClosedForm:
    poly: object
    residual: object


def vdp_closed_form(x, y, eps):
    """Closed-form curvature manifold of the van der Pol field.

    poly(x, y) = 9y^2 + (9x + 3x^3)y + 6x^4 - 2x^6 + 9x^2 eps, which
    equals -9 eps^2 m2(x, y), and the exact value of
    L_X poly - Tr(J) poly = (2x^2/eps)(x^3 - 3x - 3y)^2.  The squared
    factor is what makes the combination one-signed; it vanishes
    exactly on the cubic nullcline y = x^3/3 - x.
    """
    if eps == 0:
        raise EvaluationDomainError("division by zero")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    poly = (
        9.0 * y**2
        + (9.0 * x + 3.0 * x**3) * y
        + 6.0 * x**4
        - 2.0 * x**6
        + 9.0 * x**2 * eps
    )
    res = (2.0 * x**2 / eps) * (x**3 - 3.0 * x - 3.0 * y) ** 2
    if poly.ndim == 0:
        return VdpClosedForm(poly=float(poly), residual=float(res))
    return VdpClosedForm(poly=poly, residual=res)


@dataclass(frozen=True)
class DarbouxReport:
    """Pointwise invariance evidence over a sample set.

    residual here is the identity defect L_X m - Tr(J) m - expected,
    which analysis says is zero; normalized entries divide by the
    local scale ||grad m|| ||V|| + |Tr(J) m|.  Cofactor estimates
    k_hat = L_X m / m are recorded where m is not near zero (near-zero
    rule: |m| <= tol (||grad m|| L + m_scale) with L a length scale and
    m_scale the median |m|).  When projection is enabled, each sample
    is driven onto {m = 0} and |L_X m| is measured there instead of
    assumed zero.
    """

    count: int
    m: np.ndarray
    lie_m: np.ndarray
    trace_term: np.ndarray
    expected: np.ndarray
    residual: np.ndarray
    normalized_residual: np.ndarray
    residual_max: float
    residual_median: float
    normalized_max: float
    normalized_median: float
    cofactor: np.ndarray
    cofactor_count: int
    cofactor_median: float
    on_manifold_count: int
    on_manifold_lie_max: float
    on_manifold_normalized_max: float

    def to_dict(self):
        return {
            "count": self.count,
            "residual_max": self.residual_max,
            "residual_median": self.residual_median,
            "normalized_max": self.normalized_max,
            "normalized_median": self.normalized_median,
            "cofactor_count": self.cofactor_count,
            "cofactor_median": self.cofactor_median,
            "on_manifold_count": self.on_manifold_count,
            "on_manifold_lie_max": self.on_manifold_lie_max,
            "on_manifold_normalized_max": self.on_manifold_normalized_max,
        }


def invariance_report(
    field,
    points,
    project=True,
    length_scale=None,
    near_zero_tol=1e-9,
):
    """Measure the Darboux identity over a sample set.

    points has one state per row.  length_scale defaults to 1e-6 times
    the diagonal of the samples' bounding box.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1 or points.shape[1] != field.dimension:
        raise ValueError(
            f"need at least one sample of dimension {field.dimension}"
        )
    XS = points.T  # coordinates-first
    bundle, tensors = kinematics.bundle_with_tensors(field, XS)
    m, grad, lie, trace_term, expected = _scalar_fields(
        bundle, tensors, field.dimension
    )
    residual = lie - trace_term - expected
    grad_norm = _norm(grad)
    v_norm = _norm(bundle.V)
    scale = grad_norm * v_norm + np.abs(trace_term) + 1e-300
    normalized = np.abs(residual) / scale

    if length_scale is None:
        diag = float(_norm(points.max(axis=0) - points.min(axis=0)))
        length_scale = 1e-6 * diag
    m_scale = float(np.median(np.abs(m)))
    near_zero = np.abs(m) <= near_zero_tol * (grad_norm * length_scale + m_scale)
    cofactor = np.where(near_zero, np.nan, lie / np.where(near_zero, 1.0, m))
    finite_cof = cofactor[np.isfinite(cofactor)]

    on_count = 0
    on_lie_max = 0.0
    on_norm_max = 0.0
    if project:
        from . import levelset
        from .errors import FlowCurvError

        scalar = ManifoldScalar(field)
        for row in points:
            try:
                proj = levelset.project_to_manifold(scalar, row)
            except FlowCurvError:
                continue
            mp, gp, lp, tp, _ = scalar._full(np.asarray(proj, dtype=float))
            on_count += 1
            s = float(_norm(gp)) * float(_norm(field.velocity(proj)))
            s += abs(float(tp)) + 1e-300
            on_lie_max = max(on_lie_max, abs(float(lp)))
            on_norm_max = max(on_norm_max, abs(float(lp)) / s)

    return DarbouxReport(
        count=points.shape[0],
        m=m,
        lie_m=lie,
        trace_term=trace_term,
        expected=expected,
        residual=residual,
        normalized_residual=normalized,
        residual_max=float(np.max(np.abs(residual))),
        residual_median=float(np.median(np.abs(residual))),
        normalized_max=float(np.max(normalized)),
        normalized_median=float(np.median(normalized)),
        cofactor=cofactor,
        cofactor_count=int(finite_cof.size),
        cofactor_median=float(np.median(finite_cof)) if finite_cof.size else 0.0,
        on_manifold_count=on_count,
        on_manifold_lie_max=on_lie_max,
        on_manifold_normalized_max=on_norm_max,
    )
