"""Truncated multivariate Taylor-jet arithmetic.

A jet carries the Taylor coefficients of a smooth function about a
point, up to total degree 3, in 1 to 3 variables.  The coefficient
stored for a multi-index alpha is d^alpha f / alpha!, so third-order
derivative tensors fall out of plain coefficient reads.  All operations
are exact truncated polynomial algebra; nothing in this module (or in
anything built on it) uses finite differences.

Coefficients live in an ndarray of shape (ncoeff, *batch).  Every
operation broadcasts over the trailing batch axes, which is what makes
dense grid sampling affordable: seeding ``variables`` with arrays of
shape (nvars, N) evaluates an expression and all its derivatives at N
points in one pass.

Jets appearing together in an expression must share one batch shape
(set by the seed values); scalar constants and batch-shaped arrays mix
in freely.
"""

import itertools
import math

import numpy as np

from .errors import EvaluationDomainError

DEGREE = 3


class JetSpace:
    """Index tables for jets in a fixed number of variables.

    alphas      multi-indices in degree-major order, x before y before z
    index       multi-index tuple -> coefficient position
    factorials  alpha! per position (coefficient -> derivative scale)
    pairs       (i, j, k) triples with alpha_i + alpha_j = alpha_k,
                driving truncated polynomial multiplication
    """

    def __init__(self, nvars):
        if nvars not in (1, 2, 3):
            raise ValueError(f"jets support 1 to 3 variables, got {nvars}")
        self.nvars = nvars
        alphas = [(0,) * nvars]
        for deg in range(1, DEGREE + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                alphas.append(tuple(alpha))
        self.alphas = tuple(alphas)
        self.ncoeff = len(alphas)
        self.index = {a: i for i, a in enumerate(alphas)}
        self.factorials = np.array(
            [float(math.prod(math.factorial(e) for e in a)) for a in alphas]
        )
        pairs = []
        for i, ai in enumerate(alphas):
            di = sum(ai)
            for j, aj in enumerate(alphas):
                if di + sum(aj) <= DEGREE:
                    k = self.index[tuple(p + q for p, q in zip(ai, aj))]
                    pairs.append((i, j, k))
        self.pairs = tuple(pairs)


_SPACES: dict[int, JetSpace] = {}


def space(nvars):
    """Shared JetSpace instance for the given number of variables."""
    sp = _SPACES.get(nvars)
    if sp is None:
        sp = _SPACES[nvars] = JetSpace(nvars)
    return sp


class Jet:
    """Taylor coefficients of one scalar quantity, degree <= 3."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def constant(cls, sp, value, batch_shape=()):
        c = np.zeros((sp.ncoeff, *batch_shape))
        c[0] = value
        return cls(sp, c)

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def copy(self):
        return Jet(self.space, self.coeffs.copy())

    # -- ring operations --------------------------------------------

    def _check_space(self, other):
        if other.space is not self.space:
            raise ValueError("cannot mix jets over different variable counts")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_space(other)
            return Jet(self.space, self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return Jet(self.space, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check_space(other)
            return Jet(self.space, self.coeffs - other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] - other
        return Jet(self.space, c)

    def __rsub__(self, other):
        c = -self.coeffs
        c[0] = c[0] + other
        return Jet(self.space, c)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_space(other)
            a, b = self.coeffs, other.coeffs
            out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
            for i, j, k in self.space.pairs:
                out[k] += a[i] * b[j]
            return Jet(self.space, out)
        other = np.asarray(other, dtype=float)
        if other.ndim:
            other = other[None]
        return Jet(self.space, self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            self._check_space(other)
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0.0):
            raise EvaluationDomainError("division by zero")
        if other.ndim:
            other = other[None]
        return Jet(self.space, self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        return power(self, p)

    def reciprocal(self):
        b = self.value
        if np.any(b == 0.0):
            raise EvaluationDomainError("division by zero")
        inv = 1.0 / b
        inv2 = inv * inv
        return self.compose(inv, -inv2, inv2 * inv, -inv2 * inv2)

    def compose(self, c0, c1, c2, c3):
        """Substitute this jet into a cubic with Taylor coefficients
        c0..c3 taken about this jet's value.

        The deviation part of the jet has no constant term, so Horner
        evaluation to degree 3 is exact under truncation.
        """
        u = self.copy()
        u.coeffs[0] = 0.0
        r = u * c3
        r.coeffs[0] += c2
        r = u * r
        r.coeffs[0] += c1
        r = u * r
        r.coeffs[0] += c0
        return r


def variables(values):
    """Seed identity jets at the given point(s).

    values : array_like, shape (nvars,) or (nvars, *batch)

    Returns one jet per variable, sharing the batch shape.
    """
    values = np.asarray(values, dtype=float)
    nvars = values.shape[0]
    sp = space(nvars)
    out = []
    for i in range(nvars):
        c = np.zeros((sp.ncoeff, *values.shape[1:]))
        c[0] = values[i]
        c[1 + i] = 1.0
        out.append(Jet(sp, c))
    return tuple(out)


# -- elementary functions, transparent over jets and plain arrays ----

def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x.compose(s, c, -0.5 * s, -c / 6.0)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x.compose(c, -s, -0.5 * c, s / 6.0)
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.value)
        return x.compose(e, e, 0.5 * e, e / 6.0)
    return np.exp(x)


def ln(x):
    a = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    if np.any(a <= 0.0):
        raise EvaluationDomainError("ln of a non-positive value")
    if not isinstance(x, Jet):
        return np.log(a)
    inv = 1.0 / a
    inv2 = inv * inv
    return x.compose(np.log(a), inv, -0.5 * inv2, inv2 * inv / 3.0)


def sqrt(x):
    a = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    if np.any(a < 0.0):
        raise EvaluationDomainError("sqrt of a negative value")
    if not isinstance(x, Jet):
        return np.sqrt(a)
    if np.any(a == 0.0):
        raise EvaluationDomainError("sqrt derivative at zero")
    r = np.sqrt(a)
    r3 = r * a
    return x.compose(r, 0.5 / r, -0.125 / r3, 0.0625 / (r3 * a))


def tanh(x):
    if isinstance(x, Jet):
        t = np.tanh(x.value)
        s = 1.0 - t * t
        return x.compose(t, s, -t * s, -s * (1.0 - 3.0 * t * t) / 3.0)
    return np.tanh(x)


def power(x, p):
    """x**p with an exact integer path and a real-exponent path.

    Integer p: repeated multiplication (negative p through the
    reciprocal), valid for any base except 0 with p < 0.  Real p:
    requires a strictly positive base.
    """
    p = float(p)
    if p.is_integer():
        n = int(p)
        if isinstance(x, Jet):
            if n < 0:
                return power(x, -n).reciprocal()
            if n == 0:
                r = Jet(x.space, np.zeros_like(x.coeffs))
                r.coeffs[0] = 1.0
                return r
            r = x
            for _ in range(n - 1):
                r = r * x
            return r
        a = np.asarray(x, dtype=float)
        if n < 0 and np.any(a == 0.0):
            raise EvaluationDomainError("division by zero")
        return np.power(a, n)
    a = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    if np.any(a <= 0.0):
        raise EvaluationDomainError("non-integer power of a non-positive base")
    if not isinstance(x, Jet):
        return np.power(a, p)
    c0 = np.power(a, p)
    c1 = p * c0 / a
    c2 = 0.5 * (p - 1.0) * c1 / a
    c3 = (p - 2.0) * c2 / (3.0 * a)
    return x.compose(c0, c1, c2, c3)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "tanh": tanh,
}
