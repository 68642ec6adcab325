"""Vector-field models.

An autonomous field on R^2 or R^3 is described either by one of the
builtin named models or by a small text format:

    dim = 2
    param eps = 0.05           # parameters bind at construction
    dx/dt = (x + y - x^3/3)/eps
    dy/dt = -x                 # equations in state order x, y[, z]

Statements are separated by newlines or semicolons; '#' starts a
comment.  Expressions use + - * /, ^ for powers (right-associative,
numeric exponent), unary minus, parentheses, and the functions sin,
cos, exp, ln, sqrt, tanh.  State variables are fixed to x, y, z; the
time symbol t is rejected (autonomous systems only).

Expressions evaluate over plain numbers, numpy arrays, or jets, so the
same tree yields values on grids and derivative tensors alike.
"""

import re
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import (
    EvaluationDomainError,
    FieldOverflowError,
    ModelDefinitionError,
    ModelSyntaxError,
    NonAutonomousError,
    UndeclaredSymbolError,
)

STATE_VARIABLES = ("x", "y", "z")
TIME_SYMBOL = "t"


# -- expression trees -------------------------------------------------

def _paren(node, need):
    s = node.text()
    return f"({s})" if node.prec < need else s


def _fmt(v):
    return repr(float(v))


class Expr:
    """Base expression node.  Subclasses are immutable and comparable."""

    prec = 5

    def evaluate(self, env):
        raise NotImplementedError

    def symbols(self):
        """Set of free symbol names in this subtree."""
        out = set()
        self._collect(out)
        return out

    def _collect(self, out):
        pass

    def substitute(self, mapping):
        """New tree with symbols replaced by expressions."""
        return self

    def text(self):
        raise NotImplementedError

    def __str__(self):
        return self.text()


@dataclass(frozen=True)
class Const(Expr):
    value: float

    @property
    def prec(self):
        return 5 if self.value >= 0 else 3

    def evaluate(self, env):
        return self.value

    def text(self):
        return _fmt(self.value)


@dataclass(frozen=True)
class Sym(Expr):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def _collect(self, out):
        out.add(self.name)

    def substitute(self, mapping):
        return mapping.get(self.name, self)

    def text(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec = 3

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def _collect(self, out):
        self.arg._collect(out)

    def substitute(self, mapping):
        return Neg(self.arg.substitute(mapping))

    def text(self):
        return f"-{_paren(self.arg, 3)}"


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr
    prec = 1

    def evaluate(self, env):
        return self.a.evaluate(env) + self.b.evaluate(env)

    def _collect(self, out):
        self.a._collect(out)
        self.b._collect(out)

    def substitute(self, mapping):
        return Add(self.a.substitute(mapping), self.b.substitute(mapping))

    def text(self):
        return f"{_paren(self.a, 1)} + {_paren(self.b, 2)}"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr
    prec = 1

    def evaluate(self, env):
        return self.a.evaluate(env) - self.b.evaluate(env)

    def _collect(self, out):
        self.a._collect(out)
        self.b._collect(out)

    def substitute(self, mapping):
        return Sub(self.a.substitute(mapping), self.b.substitute(mapping))

    def text(self):
        return f"{_paren(self.a, 1)} - {_paren(self.b, 2)}"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr
    prec = 2

    def evaluate(self, env):
        return self.a.evaluate(env) * self.b.evaluate(env)

    def _collect(self, out):
        self.a._collect(out)
        self.b._collect(out)

    def substitute(self, mapping):
        return Mul(self.a.substitute(mapping), self.b.substitute(mapping))

    def text(self):
        return f"{_paren(self.a, 2)}*{_paren(self.b, 3)}"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr
    prec = 2

    def evaluate(self, env):
        a = self.a.evaluate(env)
        b = self.b.evaluate(env)
        if isinstance(a, jets.Jet) or isinstance(b, jets.Jet):
            return a / b
        if np.any(np.asarray(b) == 0.0):
            raise EvaluationDomainError("division by zero")
        return a / b

    def _collect(self, out):
        self.a._collect(out)
        self.b._collect(out)

    def substitute(self, mapping):
        return Div(self.a.substitute(mapping), self.b.substitute(mapping))

    def text(self):
        return f"{_paren(self.a, 2)}/{_paren(self.b, 3)}"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float
    prec = 4

    def evaluate(self, env):
        return jets.power(self.base.evaluate(env), self.exponent)

    def _collect(self, out):
        self.base._collect(out)

    def substitute(self, mapping):
        return Pow(self.base.substitute(mapping), self.exponent)

    def text(self):
        p = self.exponent
        ps = str(int(p)) if float(p).is_integer() else repr(float(p))
        return f"{_paren(self.base, 5)}^{ps}"


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def evaluate(self, env):
        return jets.FUNCTIONS[self.fn](self.arg.evaluate(env))

    def _collect(self, out):
        self.arg._collect(out)

    def substitute(self, mapping):
        return Call(self.fn, self.arg.substitute(mapping))

    def text(self):
        return f"{self.fn}({self.arg.text()})"


# -- tokenizer and parser ---------------------------------------------

_TOKEN_RE = re.compile(
    r"[ \t]*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()=])"
    r"|(?P<bad>\S)"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text, base, source):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            break
        kind = m.lastgroup
        pos = base + m.start(kind)
        if kind == "bad":
            raise ModelSyntaxError(
                f"unexpected character {m.group(kind)!r}", source, pos
            )
        tokens.append(_Token(kind, m.group(kind), pos))
        i = m.end()
    return tokens


class _Parser:
    """Recursive descent over one statement's tokens.

    Grammar:
        expr    := term (('+'|'-') term)*
        term    := unary (('*'|'/') unary)*
        unary   := '-' unary | postfix
        postfix := atom ('^' unary)?        exponent folds to a number
        atom    := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
    """

    def __init__(self, tokens, source, end_pos):
        self.tokens = tokens
        self.source = source
        self.end_pos = end_pos
        self.k = 0

    def _peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else None

    def _last_pos(self):
        if self.k > 0:
            return self.tokens[self.k - 1].pos
        return self.end_pos

    def _take_op(self, *ops):
        t = self._peek()
        if t is not None and t.kind == "op" and t.text in ops:
            self.k += 1
            return t
        return None

    def _expect_op(self, op, what):
        t = self._take_op(op)
        if t is None:
            bad = self._peek()
            pos = bad.pos if bad is not None else self._last_pos()
            raise ModelSyntaxError(f"expected {what}", self.source, pos)
        return t

    def parse_expr(self):
        node = self.parse_term()
        while True:
            t = self._take_op("+", "-")
            if t is None:
                return node
            rhs = self.parse_term()
            node = Add(node, rhs) if t.text == "+" else Sub(node, rhs)

    def parse_term(self):
        node = self.parse_unary()
        while True:
            t = self._take_op("*", "/")
            if t is None:
                return node
            rhs = self.parse_unary()
            node = Mul(node, rhs) if t.text == "*" else Div(node, rhs)

    def parse_unary(self):
        if self._take_op("-") is not None:
            return Neg(self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        node = self.parse_atom()
        caret = self._take_op("^")
        if caret is None:
            return node
        exponent = self.parse_unary()
        return Pow(node, self._fold_number(exponent, caret.pos))

    def _fold_number(self, node, caret_pos):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Neg):
            return -self._fold_number(node.arg, caret_pos)
        if isinstance(node, Pow):  # stacked exponents, right-associative
            return self._fold_number(node.base, caret_pos) ** node.exponent
        raise ModelSyntaxError(
            "exponent must be a numeric constant", self.source, caret_pos
        )

    def parse_atom(self):
        t = self._peek()
        if t is None:
            raise ModelSyntaxError(
                "incomplete expression", self.source, self._last_pos()
            )
        if t.kind == "num":
            self.k += 1
            return Const(float(t.text))
        if t.kind == "ident":
            self.k += 1
            if self._take_op("(") is not None:
                if t.text not in jets.FUNCTIONS:
                    raise ModelSyntaxError(
                        f"unknown function {t.text!r}", self.source, t.pos
                    )
                arg = self.parse_expr()
                self._expect_op(")", "closing parenthesis")
                return Call(t.text, arg)
            return Sym(t.text)
        if t.kind == "op" and t.text == "(":
            self.k += 1
            node = self.parse_expr()
            self._expect_op(")", "closing parenthesis")
            return node
        raise ModelSyntaxError(f"unexpected {t.text!r}", self.source, t.pos)

    def finish(self, node):
        t = self._peek()
        if t is not None:
            raise ModelSyntaxError(
                f"unexpected trailing {t.text!r}", self.source, t.pos
            )
        return node


def parse_expression(text):
    """Parse a scalar expression into an Expr tree.

    Symbols are not resolved here (any identifier is allowed) except
    for the time symbol t, which is rejected: only autonomous systems
    are representable.
    """
    tokens = _tokenize(text, 0, text)
    parser = _Parser(tokens, text, len(text))
    node = parser.finish(parser.parse_expr())
    if TIME_SYMBOL in node.symbols():
        raise NonAutonomousError(
            "expression references t; only autonomous systems are supported"
        )
    return node


# -- model text format ------------------------------------------------

def _statements(text):
    """Yield (offset, chunk) for non-empty statements, comments cut."""
    pos = 0
    for line in text.split("\n"):
        body = line
        cut = body.find("#")
        if cut >= 0:
            body = body[:cut]
        start = 0
        while True:
            semi = body.find(";", start)
            end = semi if semi >= 0 else len(body)
            chunk = body[start:end]
            stripped = chunk.strip()
            if stripped:
                lead = len(chunk) - len(chunk.lstrip())
                yield pos + start + lead, stripped
            if semi < 0:
                break
            start = semi + 1
        pos += len(line) + 1


def parse_model(text):
    """Parse model text into a VectorField.

    Raises ModelSyntaxError (with character offset) on malformed input,
    ModelDefinitionError on structural problems (bad dimension,
    missing or out-of-order equations, duplicate declarations),
    UndeclaredSymbolError / NonAutonomousError on bad symbols.
    """
    dim = None
    params: dict[str, float] = {}
    equations: list[tuple[str, Expr]] = []

    for offset, stmt in _statements(text):
        tokens = _tokenize(stmt, offset, text)
        head = tokens[0]
        if head.kind == "ident" and head.text == "dim":
            p = _Parser(tokens[1:], text, offset + len(stmt))
            p._expect_op("=", "'=' after dim")
            t = p._peek()
            if t is None or t.kind != "num":
                raise ModelSyntaxError("expected dimension", text, p._last_pos())
            p.k += 1
            p.finish(None)
            if dim is not None:
                raise ModelDefinitionError("dim declared twice")
            value = float(t.text)
            if value not in (2.0, 3.0):
                raise ModelDefinitionError(
                    f"dimension must be 2 or 3, got {t.text}"
                )
            dim = int(value)
        elif head.kind == "ident" and head.text == "param":
            p = _Parser(tokens[1:], text, offset + len(stmt))
            t = p._peek()
            if t is None or t.kind != "ident":
                raise ModelSyntaxError("expected parameter name", text, p._last_pos())
            p.k += 1
            name = t.text
            p._expect_op("=", "'=' after parameter name")
            sign = 1.0
            while p._take_op("-") is not None:
                sign = -sign
            t = p._peek()
            if t is None or t.kind != "num":
                raise ModelSyntaxError("expected parameter value", text, p._last_pos())
            p.k += 1
            p.finish(None)
            if name in STATE_VARIABLES or name == TIME_SYMBOL:
                raise ModelDefinitionError(
                    f"parameter name {name!r} shadows a state symbol"
                )
            if name in params:
                raise ModelDefinitionError(f"parameter {name!r} declared twice")
            params[name] = sign * float(t.text)
        elif (
            head.kind == "ident"
            and len(head.text) == 2
            and head.text[0] == "d"
            and len(tokens) >= 4
            and tokens[1].kind == "op"
            and tokens[1].text == "/"
            and tokens[2].kind == "ident"
            and tokens[2].text == "dt"
        ):
            var = head.text[1]
            if var not in STATE_VARIABLES:
                raise ModelDefinitionError(f"unknown state variable {var!r}")
            p = _Parser(tokens[3:], text, offset + len(stmt))
            p._expect_op("=", "'=' after d" + var + "/dt")
            node = p.finish(p.parse_expr())
            if any(v == var for v, _ in equations):
                raise ModelDefinitionError(f"equation for {var!r} given twice")
            equations.append((var, node))
        else:
            raise ModelSyntaxError("unrecognized statement", text, head.pos)

    if dim is None:
        raise ModelDefinitionError("missing dim declaration")
    names = STATE_VARIABLES[:dim]
    got = tuple(v for v, _ in equations)
    if got != names:
        raise ModelDefinitionError(
            f"expected equations for {', '.join(names)} in order, got "
            f"{', '.join(got) if got else 'none'}"
        )
    for var, node in equations:
        for s in sorted(node.symbols()):
            if s == TIME_SYMBOL:
                raise NonAutonomousError(
                    f"d{var}/dt references t; only autonomous systems are supported"
                )
            if s not in names and s not in params:
                raise UndeclaredSymbolError(
                    f"undeclared symbol {s!r} in d{var}/dt"
                )
    return VectorField(
        dimension=dim,
        components=tuple(node for _, node in equations),
        parameters=dict(params),
        variables=names,
    )


# -- the field object -------------------------------------------------

@dataclass(frozen=True, eq=False)
class VectorField:
    """An autonomous polynomial/elementary vector field on R^2 or R^3.

    Parameters are bound at construction and immutable; use
    with_parameters to derive a field with different values.
    """

    dimension: int
    components: tuple
    parameters: dict
    variables: tuple

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ModelDefinitionError(
                f"dimension must be 2 or 3, got {self.dimension}"
            )
        if len(self.components) != self.dimension:
            raise ModelDefinitionError(
                f"{self.dimension}-D field needs {self.dimension} components"
            )

    def _env(self, coords):
        env = dict(self.parameters)
        for name, value in zip(self.variables, coords):
            env[name] = value
        return env

    def velocity(self, X):
        """Velocity vector at a single state.

        Non-finite input is invalid (ValueError); a finite input that
        evaluates to a non-finite velocity raises FieldOverflowError.
        """
        X = np.asarray(X, dtype=float)
        if X.shape != (self.dimension,):
            raise ValueError(
                f"state must have shape ({self.dimension},), got {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("state contains non-finite values")
        env = self._env(X)
        with np.errstate(all="ignore"):
            v = np.array([float(c.evaluate(env)) for c in self.components])
        if not np.all(np.isfinite(v)):
            raise FieldOverflowError(
                f"velocity is non-finite at {X.tolist()}"
            )
        return v

    def velocity_many(self, XS):
        """Velocity at many states, coordinates-first.

        XS has shape (dimension, *batch); the result matches.  No
        finiteness filtering happens here; callers sampling wide
        windows should inspect the result.
        """
        XS = np.asarray(XS, dtype=float)
        if XS.shape[0] != self.dimension:
            raise ValueError(
                f"coordinate axis must have length {self.dimension}"
            )
        env = self._env(XS)
        batch = XS.shape[1:]
        with np.errstate(all="ignore"):
            comps = [
                np.broadcast_to(np.asarray(c.evaluate(env), dtype=float), batch)
                for c in self.components
            ]
        return np.stack(comps)

    def with_parameters(self, **overrides):
        """Copy of this field with some parameter values replaced."""
        params = dict(self.parameters)
        for name, value in overrides.items():
            if name not in params:
                raise ModelDefinitionError(
                    f"unknown parameter {name!r}; declared: "
                    f"{', '.join(sorted(params)) or 'none'}"
                )
            params[name] = float(value)
        return VectorField(
            dimension=self.dimension,
            components=self.components,
            parameters=params,
            variables=self.variables,
        )

    def pretty(self):
        """Model text that parses back to an equivalent field."""
        lines = [f"dim = {self.dimension}"]
        for name, value in self.parameters.items():
            lines.append(f"param {name} = {_fmt(value)}")
        for var, comp in zip(self.variables, self.components):
            lines.append(f"d{var}/dt = {comp.text()}")
        return "\n".join(lines) + "\n"


def eval_field(field, X):
    """Velocity of the field at state X (single point)."""
    return field.velocity(X)


# -- builtins ---------------------------------------------------------

_BUILTIN_TEXT = {
    "vdp": (
        "dim = 2\n"
        "param eps = 0.05\n"
        "dx/dt = (x + y - x^3/3)/eps\n"
        "dy/dt = -x\n"
    ),
    "lorenz": (
        "dim = 3\n"
        "param sigma = 10.0\n"
        "param r = 28.0\n"
        "param beta = 2.6666666666666665\n"
        "dx/dt = sigma*(y - x)\n"
        "dy/dt = -x*z + r*x - y\n"
        "dz/dt = x*y - beta*z\n"
    ),
    "harmonic": "dim = 2\ndx/dt = y\ndy/dt = -x\n",
    "linear2": "dim = 2\ndx/dt = -x\ndy/dt = -2*y\n",
}


BUILTIN_MODELS = tuple(sorted(_BUILTIN_TEXT))


def builtin(name, overrides=None):
    """Construct a builtin model by name: vdp, lorenz, harmonic,
    linear2.  overrides maps parameter names to replacement values."""
    text = _BUILTIN_TEXT.get(name)
    if text is None:
        raise ModelDefinitionError(
            f"unknown model {name!r}; builtins: "
            + ", ".join(sorted(_BUILTIN_TEXT))
        )
    field = parse_model(text)
    if overrides:
        field = field.with_parameters(**overrides)
    return field
