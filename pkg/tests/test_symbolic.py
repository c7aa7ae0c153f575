import math
import pickle
from fractions import Fraction

import numpy as np
import pytest
from exprgen import random_expr
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_gauge.errors import DomainError, ExpressionSyntaxError, UnknownIdentifier
from jacobi_gauge.sampling import rng_for
from jacobi_gauge.symbolic import (
    Chart,
    Const,
    Func,
    Neg,
    Point,
    Power,
    Product,
    Sum,
    Var,
    add,
    compile_exprs,
    differentiate,
    evaluate,
    exp,
    mul,
    parse_expr,
    simplify,
    substitute,
    to_string,
)

CH2 = Chart.standard(2)
X1, X2 = CH2.vars


def at(x1, x2=0.0):
    return Point(CH2, (x1, x2))


# --- parser -----------------------------------------------------------------


def test_parse_sum_of_power_and_product():
    e = parse_expr("x1^2 + 2*x2", CH2)
    assert e == Sum(Power(X1, Const(2)), Product(Const(2), X2))


def test_parse_exp_of_negation_times_variable():
    e = parse_expr("exp(-x1)*x1", CH2)
    assert e == Product(Func("exp", Neg(X1)), X1)


def test_incomplete_input_reports_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expr("x1 + ", Chart(["x1"]))
    assert info.value.offset == 5


@pytest.mark.parametrize("text, offset", [("x1 * * x2", 5), ("(x1", 3), ("x1 $ 2", 3), ("sin x1", 4)])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expr(text, CH2)
    assert info.value.offset == offset


def test_unknown_identifier_named():
    with pytest.raises(UnknownIdentifier) as info:
        parse_expr("x1 + y", CH2)
    assert info.value.name == "y"


def test_unknown_function_is_identifier_error():
    with pytest.raises((UnknownIdentifier, ExpressionSyntaxError)):
        parse_expr("tan(x1)", CH2)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("2^3^2", 512.0),  # right associative
        ("-2^2", -4.0),  # power binds tighter than unary minus
        ("2*3/4", 1.5),
        ("8/2/2", 2.0),
        ("1 - 2 - 3", -4.0),
        ("2^-1", 0.5),
        ("1.5e1 + .5", 15.5),
    ],
)
def test_precedence_and_associativity(text, expected):
    assert evaluate(parse_expr(text, CH2), at(0.0)) == pytest.approx(expected, rel=1e-15)


def test_integer_literals_are_exact():
    e = parse_expr("1/3", CH2)
    assert simplify(e) == Const(Fraction(1, 3))


# --- differentiate -----------------------------------------------------------


def test_power_rule():
    assert simplify(differentiate(parse_expr("x1^2", CH2), "x1")) == simplify(mul(2, X1))


def test_exp_derivative():
    assert simplify(differentiate(exp(X1), "x1")) == exp(X1)


def test_independent_coordinate():
    assert simplify(differentiate(X2, "x1")).is_zero


def test_differentiate_unknown_coordinate():
    with pytest.raises(UnknownIdentifier):
        differentiate(X1, "y", CH2)


@pytest.mark.parametrize(
    "text, var, expected",
    [
        ("sin(x1)*x2", "x1", "cos(x1)*x2"),
        ("ln(x1)", "x1", "1/x1"),
        ("x1/x2", "x2", "-x1/x2^2"),
        ("x1^x2", "x2", "x1^x2*ln(x1)"),
        ("cos(x1^2)", "x1", "-2*x1*sin(x1^2)"),
    ],
)
def test_derivative_values(text, var, expected):
    d = differentiate(parse_expr(text, CH2), var)
    want = parse_expr(expected, CH2)
    for p in [(0.3, 0.7), (1.2, -0.4), (0.9, 2.0)]:
        assert evaluate(d, Point(CH2, p)) == pytest.approx(evaluate(want, Point(CH2, p)), rel=1e-13)


# --- evaluate ----------------------------------------------------------------


def test_evaluate_polynomial():
    assert evaluate(parse_expr("x1^2 + 2*x2", CH2), at(3, 1)) == 11


def test_evaluate_exp_zero():
    assert evaluate(parse_expr("exp(0)", CH2), at(0.4, -0.2)) == 1.0


def test_pole_raises_domain_error():
    e = parse_expr("1/x1", CH2)
    with pytest.raises(DomainError) as info:
        evaluate(e, at(0.0))
    assert info.value.expr == e


def test_domain_error_names_subexpression():
    e = parse_expr("x2 + ln(x1)", CH2)
    with pytest.raises(DomainError) as info:
        evaluate(e, at(-1.0, 3.0))
    assert info.value.expr == parse_expr("ln(x1)", CH2)


def test_compiled_matches_reference():
    rng = rng_for(5, 0)
    exprs = [random_expr(rng, CH2, 5) for _ in range(20)]
    X = rng.uniform(-1, 1, (30, 2))
    got = compile_exprs(exprs, CH2)(X)
    for r, e in enumerate(exprs):
        want = [evaluate(e, Point(CH2, x)) for x in X]
        np.testing.assert_allclose(got[r], want, rtol=1e-12, atol=1e-12)


def test_compiled_singular_points_are_nonfinite():
    vals = compile_exprs([parse_expr("1/x1", CH2)], CH2)(np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert not np.isfinite(vals[0, 0]) and vals[0, 1] == 0.5


# --- simplify ----------------------------------------------------------------


def test_neutral_elements():
    assert simplify(parse_expr("x1*1 + 0", CH2)) == X1


def test_constant_folding():
    assert simplify(parse_expr("2*3", CH2)) == Const(6)


def test_annihilator():
    assert simplify(parse_expr("exp(x1)*0", CH2)).is_zero


def test_power_one():
    assert simplify(parse_expr("x2^1", CH2)) == X2


# --- structure of nodes --------------------------------------------------------


def test_nodes_are_immutable():
    with pytest.raises(AttributeError):
        X1.name = "x2"


def test_structural_equality_and_hash():
    a = parse_expr("x1*exp(-x1) + 1", CH2)
    b = parse_expr("x1*exp(-x1) + 1", CH2)
    assert a == b and hash(a) == hash(b)
    assert a != parse_expr("x1*exp(-x1) + 2", CH2)


def test_int_and_float_constants_differ():
    assert Const(2) != Const(2.0)


def test_pickle_roundtrip():
    e = parse_expr("sin(x1)^2/(1 + x2)", CH2)
    assert pickle.loads(pickle.dumps(e)) == e


def test_substitute():
    e = substitute(parse_expr("x1*x2", CH2), {"x2": add(X1, 1)})
    assert evaluate(e, at(2.0, 99.0)) == 6.0


def test_nonfinite_constant_rejected():
    with pytest.raises(ValueError):
        Const(math.inf)


# --- seeded random oracles -------------------------------------------------------


def _fd(e, x, i, h=1e-5):
    def f(s):
        y = np.array(x, dtype=float)
        y[i] += s
        return evaluate(e, Point(CH2, y))

    return (f(h) - f(-h)) / (2 * h)


@pytest.mark.parametrize("seed", range(4))
def test_random_expressions_against_finite_differences(seed):
    rng = rng_for(1000 + seed, 0)
    for _ in range(25):
        e = random_expr(rng, CH2, 6)
        x = rng.uniform(-1, 1, 2)
        for i, c in enumerate(CH2.coordinates):
            d = evaluate(differentiate(e, c), Point(CH2, x))
            assert abs(_fd(e, x, i) - d) <= 1e-6 * (1 + abs(d)), to_string(e)


@pytest.mark.parametrize("seed", range(4))
def test_random_expressions_simplify_and_print(seed):
    rng = rng_for(2000 + seed, 0)
    for _ in range(25):
        e = random_expr(rng, CH2, 6)
        s = simplify(e)
        assert simplify(s) == s
        assert simplify(parse_expr(to_string(e), CH2)) == s
        for x in rng.uniform(-1, 1, (5, 2)):
            v = evaluate(e, Point(CH2, x))
            assert abs(evaluate(s, Point(CH2, x)) - v) <= 1e-12 * (1 + abs(v))


# --- hypothesis ----------------------------------------------------------------

leaves = st.one_of(
    st.sampled_from([X1, X2]),
    st.integers(-5, 5).map(Const),
    st.floats(-4, 4, allow_nan=False).map(Const),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: add(*t)),
        st.tuples(children, children).map(lambda t: mul(*t)),
        children.map(lambda c: Neg(c)),
        children.map(lambda c: Func("sin", c)),
        st.tuples(children, st.integers(0, 3)).map(lambda t: Power(t[0], Const(t[1]))),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_print_parse_roundtrip(e):
    assert simplify(parse_expr(to_string(e), CH2)) == simplify(e)


@settings(max_examples=150, deadline=None)
@given(exprs, st.floats(-1, 1), st.floats(-1, 1))
def test_simplify_preserves_value(e, x1, x2):
    p = at(x1, x2)
    try:
        v = evaluate(e, p)
    except DomainError:
        return
    assert evaluate(simplify(e), p) == pytest.approx(v, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(exprs, exprs)
def test_differentiation_is_linear(f, g):
    lhs = simplify(differentiate(add(f, g), "x1"))
    rhs = simplify(add(differentiate(f, "x1"), differentiate(g, "x1")))
    for x in [(0.3, -0.2), (-0.7, 0.5)]:
        try:
            want = evaluate(rhs, Point(CH2, x))
        except DomainError:
            continue
        assert evaluate(lhs, Point(CH2, x)) == pytest.approx(want, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("bad", ["1x", "x-1", "exp", "", "x 1"])
def test_chart_rejects_bad_names(bad):
    with pytest.raises(ValueError):
        Chart([bad])


def test_chart_rejects_duplicates():
    with pytest.raises(ValueError):
        Chart(["x1", "x1"])


def test_var_type():
    assert isinstance(CH2.var("x2"), Var) and CH2.var(1) == X2
