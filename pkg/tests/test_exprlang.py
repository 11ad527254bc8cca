from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fracmixed.errors import ValidationError
from fracmixed.exprlang import (
    Bin,
    Call,
    EvalError,
    Expression,
    ExprSyntaxError,
    Num,
    UnknownIdentifier,
    UnsupportedDerivative,
    Var,
    differentiate,
    evaluate,
    parse,
    to_string,
)

# {{{ parsing and evaluation


@pytest.mark.parametrize(
    ("src", "t", "expected"),
    [
        ("1 + 2*3", 0.0, 7.0),
        ("-2^2", 0.0, -4.0),
        ("2^3^2", 0.0, 512.0),
        ("(1 + t)/2", 3.0, 2.0),
        ("sin(pi*t)", 0.5, 1.0),
        ("exp(log(t))", 2.5, 2.5),
        ("sqrt(t) - t^0.5", 7.0, 0.0),
        ("1e-3*t", 2.0, 2e-3),
        (".5 + 2.", 0.0, 2.5),
        ("2 - 3 - 4", 0.0, -5.0),
        ("8/4/2", 0.0, 1.0),
        ("--t", 1.5, 1.5),
    ],
)
def test_evaluate_examples(src, t, expected):
    assert Expression(src)(t) == pytest.approx(expected, rel=1e-15, abs=1e-15)


def test_evaluate_arrays_and_constants():
    t = np.linspace(0, 1, 5)
    assert_allclose(Expression("t^2")(t), t**2)
    out = Expression("3")(t)
    assert out.shape == t.shape and np.all(out == 3.0)
    assert isinstance(Expression("t")(0.25), float)


def test_other_variable_name():
    e = Expression("x^2 + 1", variable="x")
    assert e(2.0) == 5.0
    with pytest.raises(UnknownIdentifier):
        parse("t + 1", variable="x")


@pytest.mark.parametrize(
    ("src", "offset"),
    [("1 +", 3), ("2 * (t", 6), ("t $ 2", 2), ("foo(t)", 0), ("sin t", 4), ("1 2", 2), ("", 0), ("t)", 1)],
)
def test_error_offsets(src, offset):
    with pytest.raises((ExprSyntaxError, UnknownIdentifier)) as info:
        parse(src)
    assert info.value.offset == offset
    assert isinstance(info.value, ValidationError)
    assert f"offset {offset}" in str(info.value)


@pytest.mark.parametrize(
    ("src", "t", "offset"),
    [("1/(t-1)", 1.0, 1), ("log(t)", 0.0, 0), ("sqrt(t)", -1.0, 0), ("t^0.5", -1.0, 1), ("t^-1", 0.0, 1)],
)
def test_evaluation_errors(src, t, offset):
    with pytest.raises(EvalError) as info:
        Expression(src)(t)
    assert info.value.offset == offset


def test_negative_base_integer_power_is_allowed():
    assert Expression("t^3")(-2.0) == -8.0


# }}}


# {{{ printing and differentiation


@pytest.mark.parametrize(
    ("src", "expected"),
    [
        ("t^2", "2*t"),
        ("3*t + 1", "3"),
        ("sin(t)", "cos(t)"),
        ("exp(2*t)", "exp(2*t)*2"),
        ("5", "0"),
        ("t", "1"),
    ],
)
def test_derivative_strings(src, expected):
    assert str(Expression(src).derivative()) == expected


def test_variable_exponent_has_no_derivative():
    with pytest.raises(UnsupportedDerivative):
        differentiate(parse("2^t"))


@pytest.mark.parametrize("src", ["1 - (t - 2)", "2/(3*t)", "-(t^2)", "(-t)^2", "t^(1/3)", "2^3^t", "-t^-2"])
def test_round_trip_strings(src):
    node = parse(src)
    assert parse(to_string(node)) == node


def _leaf() -> st.SearchStrategy:
    return st.one_of(
        st.just(Var("t")),
        st.floats(0.1, 4.0, allow_nan=False).map(lambda v: Num(round(v, 3))),
    )


def _extend(children: st.SearchStrategy) -> st.SearchStrategy:
    # every constructor keeps the expression finite and differentiable on [0.5, 1.5]
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda p: Bin(p[0], p[1], p[2])),
        st.tuples(children, children).map(lambda p: Bin("/", p[0], Bin("+", Num(2.0), Call("cos", p[1])))),
        st.tuples(children, st.integers(0, 3)).map(lambda p: Bin("^", p[0], Num(float(p[1])))),
        children.map(lambda c: Call("sin", c)),
        children.map(lambda c: Call("cos", c)),
        children.map(lambda c: Call("exp", Call("sin", c))),
        children.map(lambda c: Call("log", Bin("+", Num(2.0), Call("sin", c)))),
        children.map(lambda c: Call("sqrt", Bin("+", Num(1.0), Bin("^", c, Num(2.0))))),
    )


trees = st.recursive(_leaf(), _extend, max_leaves=8)


@settings(max_examples=50, deadline=None)
@given(trees)
def test_random_tree_round_trip(node):
    assert parse(to_string(node)) == node
    t = np.linspace(0.5, 1.5, 7)
    assert_allclose(evaluate(parse(to_string(node)), t), evaluate(node, t), rtol=1e-14, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(trees, st.floats(0.5, 1.5))
def test_random_tree_derivative_matches_difference(node, t):
    h = 1e-5
    f = lambda v: evaluate(node, v)
    numeric = (f(t + h) - f(t - h)) / (2 * h)
    scale = max(1.0, abs(f(t)), abs(f(t + h)) / h * 1e-10)
    exact = evaluate(differentiate(node), t)
    assert math.isfinite(exact)
    assert abs(exact - numeric) <= 1e-5 * max(scale, abs(exact))


# }}}
