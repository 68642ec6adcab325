"""Model text parsing, expression trees, builtins, field evaluation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowcurv import jets
from flowcurv.errors import (
    EvaluationDomainError,
    FieldOverflowError,
    ModelDefinitionError,
    ModelSyntaxError,
    NonAutonomousError,
    UndeclaredSymbolError,
)
from flowcurv.models import (
    Add,
    Call,
    Const,
    Div,
    Mul,
    Neg,
    Pow,
    Sub,
    Sym,
    VectorField,
    builtin,
    eval_field,
    parse_expression,
    parse_model,
)

VDP_TEXT = "dim = 2\nparam eps = 0.05\ndx/dt = (x + y - x^3/3)/eps\ndy/dt = -x\n"


# -- parsing ----------------------------------------------------------

def test_parse_minimal_model():
    f = parse_model(VDP_TEXT)
    assert f.dimension == 2
    assert f.variables == ("x", "y")
    assert f.parameters == {"eps": 0.05}


def test_semicolons_and_comments():
    f = parse_model("dim=2; param eps=0.05  # relaxation\ndx/dt=(x + y - x^3/3)/eps; dy/dt=-x")
    g = parse_model(VDP_TEXT)
    assert f.components == g.components
    assert f.parameters == g.parameters


def test_syntax_error_position():
    text = "dim=2; dx/dt=y+"
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model(text)
    assert exc.value.position == text.index("+")


def test_unexpected_character_position():
    text = "dim = 2\ndx/dt = y $ 2\ndy/dt = -x"
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model(text)
    assert exc.value.position == text.index("$")


def test_unknown_function_rejected():
    with pytest.raises(ModelSyntaxError):
        parse_expression("sin2(x)")


def test_unbalanced_parenthesis():
    with pytest.raises(ModelSyntaxError):
        parse_expression("x + (y")


def test_exponent_must_be_numeric():
    with pytest.raises(ModelSyntaxError):
        parse_expression("x^y")
    assert parse_expression("x^-2") == Pow(Sym("x"), -2.0)
    assert parse_expression("x^2^3") == Pow(Sym("x"), 8.0)  # right-assoc
    assert parse_expression("x^2.5") == Pow(Sym("x"), 2.5)


def test_time_symbol_rejected():
    with pytest.raises(NonAutonomousError):
        parse_expression("sin(t)")
    with pytest.raises(NonAutonomousError):
        parse_model("dim=2\ndx/dt = y + t\ndy/dt = -x")


def test_undeclared_symbol():
    with pytest.raises(UndeclaredSymbolError):
        parse_model("dim=2\ndx/dt = y\ndy/dt = -k*x")
    with pytest.raises(UndeclaredSymbolError):
        parse_model("dim=2\ndx/dt = z\ndy/dt = -x")  # z needs dim=3


def test_bad_dimension():
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=4\ndx/dt=y\ndy/dt=-x")
    with pytest.raises(ModelDefinitionError):
        parse_model("dx/dt=y\ndy/dt=-x")  # missing dim


def test_equation_bookkeeping():
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\ndy/dt=-x\ndx/dt=y")  # out of order
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\ndx/dt=y")  # missing dy/dt
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\ndx/dt=y\ndx/dt=y\ndy/dt=-x")
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\ndw/dt=y\ndy/dt=-x")


def test_duplicate_and_shadowing_params():
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\nparam a=1\nparam a=2\ndx/dt=y\ndy/dt=-a*x")
    with pytest.raises(ModelDefinitionError):
        parse_model("dim=2\nparam x=1\ndx/dt=y\ndy/dt=-x")


def test_negative_parameter_value():
    f = parse_model("dim=2\nparam a = -1.5\ndx/dt = a*y\ndy/dt = -x")
    assert f.parameters["a"] == -1.5


# -- printing and round trips -----------------------------------------

_leaf = st.one_of(
    st.sampled_from([Sym("x"), Sym("y"), Sym("z"), Sym("eps")]),
    st.floats(min_value=0, max_value=100, allow_nan=False, allow_infinity=False).map(Const),
)


def _branch(children):
    pairs = st.tuples(children, children)
    return st.one_of(
        pairs.map(lambda ab: Add(*ab)),
        pairs.map(lambda ab: Sub(*ab)),
        pairs.map(lambda ab: Mul(*ab)),
        pairs.map(lambda ab: Div(*ab)),
        children.map(Neg),
        st.tuples(children, st.integers(-4, 4)).map(lambda t: Pow(t[0], float(t[1]))),
        st.tuples(
            children,
            st.floats(min_value=0.25, max_value=4, allow_nan=False),
        ).map(lambda t: Pow(t[0], t[1])),
        st.tuples(st.sampled_from(sorted(jets.FUNCTIONS)), children).map(
            lambda t: Call(*t)
        ),
    )


_expr_trees = st.recursive(_leaf, _branch, max_leaves=16)


@settings(max_examples=300, deadline=None)
@given(_expr_trees)
def test_text_parse_roundtrip_is_structural(tree):
    assert parse_expression(tree.text()) == tree


def test_negative_constant_roundtrips_by_value():
    tree = Mul(Const(-3.0), Sym("x"))
    back = parse_expression(tree.text())
    env = {"x": 1.7}
    assert back.evaluate(env) == tree.evaluate(env)


def test_model_pretty_roundtrip():
    rng = np.random.default_rng(11)
    f = builtin("lorenz")
    g = parse_model(f.pretty())
    assert g.components == f.components
    assert g.parameters == f.parameters
    pts = rng.uniform(-10, 10, size=(3, 50))
    assert np.array_equal(f.velocity_many(pts), g.velocity_many(pts))
    assert g.pretty() == f.pretty()


def test_vdp_text_variant_agrees_with_builtin():
    alt = parse_model(
        "dim = 2\nparam eps = 0.05\ndx/dt = (y + x - (x^3)/3)/eps\ndy/dt = -x\n"
    )
    f = builtin("vdp")
    rng = np.random.default_rng(2)
    pts = rng.uniform(-3, 3, size=(2, 1000))
    a = alt.velocity_many(pts)
    b = f.velocity_many(pts)
    denom = np.maximum(np.abs(b), 1e-300)
    assert np.max(np.abs(a - b) / denom) <= 1e-14


# -- builtins and evaluation ------------------------------------------

def test_builtin_vdp_velocity():
    f = builtin("vdp")
    v = f.velocity([2.0, 0.0])
    assert v == pytest.approx([-40.0 / 3.0, -2.0], rel=1e-15)


def test_builtin_lorenz_velocity():
    f = builtin("lorenz")
    assert f.parameters["beta"] == 8.0 / 3.0
    v = f.velocity([1.0, 1.0, 1.0])
    assert v == pytest.approx([0.0, 26.0, -5.0 / 3.0], abs=1e-15)


def test_builtin_harmonic_and_linear2():
    assert builtin("harmonic").velocity([1.0, 0.0]).tolist() == [0.0, -1.0]
    assert builtin("linear2").velocity([1.0, 1.0]).tolist() == [-1.0, -2.0]


def test_builtin_overrides():
    f = builtin("vdp", {"eps": 0.1})
    assert f.parameters["eps"] == 0.1
    with pytest.raises(ModelDefinitionError):
        builtin("vdp", {"mu": 3.0})
    with pytest.raises(ModelDefinitionError):
        builtin("roessler")


def test_with_parameters_immutable():
    f = builtin("vdp")
    g = f.with_parameters(eps=0.01)
    assert f.parameters["eps"] == 0.05
    assert g.parameters["eps"] == 0.01
    assert g.components is f.components


def test_velocity_input_validation():
    f = builtin("vdp")
    with pytest.raises(ValueError):
        f.velocity([1.0])
    with pytest.raises(ValueError):
        f.velocity([np.nan, 0.0])


def test_velocity_overflow_is_distinct():
    f = parse_model("dim=2\ndx/dt = exp(x*x)\ndy/dt = -x")
    with pytest.raises(FieldOverflowError):
        f.velocity([40.0, 0.0])
    g = parse_model("dim=2\ndx/dt = 1/x\ndy/dt = -x")
    with pytest.raises(EvaluationDomainError):
        g.velocity([0.0, 1.0])


def test_velocity_many_matches_single():
    f = builtin("lorenz")
    rng = np.random.default_rng(5)
    pts = rng.uniform(-20, 20, size=(3, 100))
    batch = f.velocity_many(pts)
    for i in range(100):
        assert np.array_equal(batch[:, i], f.velocity(pts[:, i]))


def test_velocity_many_constant_component_broadcasts():
    f = parse_model("dim=2\nparam c = 3.0\ndx/dt = c\ndy/dt = -x")
    out = f.velocity_many(np.zeros((2, 7)))
    assert out.shape == (2, 7)
    assert np.all(out[0] == 3.0)


def test_eval_field_wrapper():
    f = builtin("harmonic")
    assert np.array_equal(eval_field(f, [0.0, 1.0]), f.velocity([0.0, 1.0]))


def test_direct_construction_validation():
    with pytest.raises(ModelDefinitionError):
        VectorField(
            dimension=1,
            components=(Sym("x"),),
            parameters={},
            variables=("x",),
        )
    with pytest.raises(ModelDefinitionError):
        VectorField(
            dimension=2,
            components=(Sym("x"),),
            parameters={},
            variables=("x", "y"),
        )


def test_substitute_builds_new_trees():
    e = parse_expression("x^2 + sin(y)")
    swapped = e.substitute({"x": Sym("y"), "y": Sym("x")})
    assert swapped == parse_expression("y^2 + sin(x)")
