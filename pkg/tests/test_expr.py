import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballgalerkin.expr import ExpressionError, differentiate, parse_expression, substitute


def ev(text, **env):
    return float(parse_expression(text).evaluate(env))


def test_planar_right_side_at_origin():
    assert ev("cos(pi*s*t)/(1+u^2)", s=0.0, t=0.0, u=0.0) == 1.0


def test_fisher_root():
    assert ev("100*u*(1-u)", u=1.0) == 0.0


@pytest.mark.parametrize(
    "text, value",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("(-2)^2", 4.0),
        ("2*3+4", 10.0),
        ("2+3*4", 14.0),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("--3", 3.0),
        ("2^-1", 0.5),
        ("1e-3*1000", 1.0),
        (".5 + 1.", 1.5),
        ("sqrt(16) + abs(-2) + exp(0) + log(1)", 7.0),
    ],
)
def test_precedence(text, value):
    assert ev(text) == pytest.approx(value, rel=1e-15)


def test_whitespace_insensitive():
    a = parse_expression("cos( pi * s*t ) /(1+ u ^2)")
    b = parse_expression("cos(pi*s*t)/(1+u^2)")
    env = {"s": 0.3, "t": -0.7, "u": 1.1}
    assert a.evaluate(env) == b.evaluate(env)


def test_vectorised_evaluation():
    x = np.linspace(0, 1, 5)
    out = parse_expression("x^2 + 1").evaluate({"x": x})
    np.testing.assert_allclose(out, x**2 + 1)


@pytest.mark.parametrize(
    "text, offset",
    [("x +", 3), ("(x", 2), ("x $ y", 2), ("x y", 2), (")", 0), ("", 0), ("2 ^", 3)],
)
def test_syntax_errors_carry_offset(text, offset):
    with pytest.raises(ExpressionError) as info:
        parse_expression(text)
    assert info.value.offset == offset


def test_offset_counts_bytes():
    with pytest.raises(ExpressionError) as info:
        parse_expression("é + $")
    assert info.value.offset == 0
    with pytest.raises(ExpressionError) as info:
        parse_expression("x + é")
    assert info.value.offset == 4


def test_unknown_identifier_and_function():
    with pytest.raises(ExpressionError, match="unknown identifier 'w'"):
        parse_expression("w + 1")
    with pytest.raises(ExpressionError, match="unknown function 'tan'"):
        parse_expression("tan(x)")
    with pytest.raises(ExpressionError, match="unknown identifier 'u'"):
        parse_expression("u + x", variables=("x",))


def test_wrong_arity():
    with pytest.raises(ExpressionError, match="exactly 1 argument"):
        parse_expression("cos(x, y)")
    with pytest.raises(ExpressionError, match="argument list"):
        parse_expression("cos + 1")


def test_fisher_derivative():
    d = differentiate(parse_expression("100*u*(1-u)"), "u")
    assert float(d.evaluate({"u": 0.5})) == 0.0
    assert float(d.evaluate({"u": 0.0})) == 100.0


def test_derivative_of_u_free_expression_is_zero():
    d = differentiate(parse_expression("cos(pi*s*t) + x^3"), "u")
    assert float(d.evaluate({})) == 0.0


FD_CASES = [
    "cos(pi*s*t)/(1+u^2)",
    "100*u*(1-u)",
    "-exp(u) + sin(s)*t",
    "u^3 - sqrt(1 + u^2)*log(2 + u^2)",
    "u^u",
    "abs(u - 0.1)*exp(-u/2)",
    "(s + u)^2.5",
]


@pytest.mark.parametrize("text", FD_CASES)
def test_derivative_matches_finite_differences(text):
    rng = np.random.default_rng(7)
    e = parse_expression(text)
    d = differentiate(e, "u")
    s, t = rng.uniform(0.1, 0.9, 100), rng.uniform(-0.9, 0.9, 100)
    u = rng.uniform(0.2, 1.5, 100)
    h = 1e-6 * (1 + np.abs(u))
    fd = (e.evaluate({"s": s, "t": t, "u": u + h}) - e.evaluate({"s": s, "t": t, "u": u - h})) / (2 * h)
    exact = d.evaluate({"s": s, "t": t, "u": u})
    np.testing.assert_allclose(exact, fd, rtol=1e-6, atol=1e-8)


def test_substitute():
    e = substitute(parse_expression("s*t + u"), {"s": parse_expression("x - y"), "t": parse_expression("x + y")})
    assert float(e.evaluate({"x": 2.0, "y": 1.0, "u": 0.5})) == 3.5


# random expression trees for round-trip and derivative properties
_leaf = st.one_of(
    st.sampled_from(["x", "u", "pi", "s"]),
    st.floats(0.1, 5.0, allow_nan=False).map(lambda v: repr(round(v, 3))),
)


def _node(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/"), children).map(lambda p: f"({p[0]} {p[1]} {p[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda p: f"{p[0]}({p[1]})"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"({c})^2"),
    )


expressions = st.recursive(_leaf, _node, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(expressions)
def test_str_round_trip(text):
    e = parse_expression(text)
    again = parse_expression(str(e))
    env = {"x": 0.37, "u": -0.61, "s": 0.2}
    a, b = float(e.evaluate(env)), float(again.evaluate(env))
    if math.isfinite(a):
        assert b == pytest.approx(a, rel=1e-12, abs=1e-300)
    else:
        assert not math.isfinite(b) or abs(b) > 1e300


@settings(max_examples=100, deadline=None)
@given(expressions)
def test_random_derivatives_match_finite_differences(text):
    e = parse_expression(text)
    d = differentiate(e, "u")
    u0 = -0.61
    h = 1e-6
    base = {"x": 0.37, "s": 0.2}
    fp, fm = float(e.evaluate({**base, "u": u0 + h})), float(e.evaluate({**base, "u": u0 - h}))
    exact = float(d.evaluate({**base, "u": u0}))
    fd = (fp - fm) / (2 * h)
    if not all(math.isfinite(v) for v in (fp, fm, exact)) or abs(exact) > 1e6:
        return
    # FD rounding error scales with |f| / h
    scale = 1e-6 * max(1.0, abs(exact)) + 1e-9 * max(abs(fp), abs(fm)) / h
    assert abs(exact - fd) <= scale
