import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from pie_solver.errors import ArityError, ExpressionDomainError, ExpressionSyntaxError, InvalidArgumentError
from pie_solver.errors import UnknownIdentifierError
from pie_solver.expr import (
    BINARY_OPERATORS,
    FUNCTIONS,
    VARIABLES,
    BinOp,
    Call,
    Const,
    Neg,
    Var,
    evaluate,
    free_variables,
    parse,
    rename_variables,
    to_text,
)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1+2*3", 7.0),
        ("(1+2)*3", 9.0),
        ("2-3-4", -5.0),
        ("8/4/2", 1.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2^-1", 0.5),
        ("--3", 3.0),
        ("1.5e2 + .5", 150.5),
        ("2 * −3", -6.0),
        ("abs(-4) + sqrt(9)", 7.0),
    ],
)
def test_precedence_and_associativity(text, expected):
    assert evaluate(parse(text)) == expected


def test_kernel_string_with_unicode_minus():
    expr = parse("exp(x−s)*y")
    assert free_variables(expr) == {"x", "s", "y"}
    assert evaluate(expr, x=1.0, s=0.5, y=2.0) == pytest.approx(2 * math.exp(0.5))


def test_unknown_identifier_reports_byte_offset():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("2*foo")
    assert info.value.offset == 2
    assert "byte offset 2" in str(info.value)


def test_byte_offset_counts_multibyte_characters():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("x−$")
    # U+2212 is three bytes in UTF-8
    assert info.value.offset == 4


@pytest.mark.parametrize("text, offset", [("1e999", 0), ("x + 2e400*y", 4)])
def test_overflowing_literal_is_rejected(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert "overflows" in str(info.value)


@pytest.mark.parametrize("text", ["sin()", "exp(x, y)", "log x"])
def test_arity_errors(text):
    with pytest.raises(ArityError):
        parse(text)


@pytest.mark.parametrize("text", ["1+", "(x", "x y", "*2", ")"])
def test_syntax_errors(text):
    with pytest.raises(ExpressionSyntaxError):
        parse(text)


@pytest.mark.parametrize("text", ["", "   "])
def test_empty_text(text):
    with pytest.raises(InvalidArgumentError):
        parse(text)


@pytest.mark.parametrize(
    "text, point",
    [
        ("log(x)", {"x": 0.0}),
        ("sqrt(y-1)", {"y": 0.5}),
        ("1/(x-s)", {"x": 0.3, "s": 0.3}),
        ("(-8)^0.5", {}),
        ("0^(-1)", {}),
    ],
)
def test_domain_errors(text, point):
    with pytest.raises(ExpressionDomainError) as info:
        evaluate(parse(text), **point)
    assert info.value.subexpression


def test_array_evaluation_broadcasts():
    expr = parse("x*s + y")
    x = np.linspace(0, 1, 3)[:, None]
    s = np.linspace(0, 1, 4)[None, :]
    values = evaluate(expr, x=x, s=s, y=2.0)
    assert values.shape == (3, 4)
    assert values[2, 3] == pytest.approx(3.0)


def test_constant_expression_broadcasts_to_input_shape():
    values = evaluate(parse("1"), y=np.zeros(5))
    assert values.shape == (5,)


def test_array_domain_error_is_detected_anywhere():
    with pytest.raises(ExpressionDomainError):
        evaluate(parse("log(x)"), x=np.array([1.0, 2.0, -1.0]))


def test_rename_variables_swaps_simultaneously():
    expr = rename_variables(parse("x - 2*s"), {"x": "s", "s": "x"})
    assert evaluate(expr, x=1.0, s=5.0) == pytest.approx(3.0)
    with pytest.raises(InvalidArgumentError):
        rename_variables(expr, {"x": "t"})


def test_to_text_is_fully_parenthesized():
    assert to_text(parse("-x^2 + 1")) == "((-(x ^ 2.0)) + 1.0)"


constants = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(abs).map(Const)
leaves = st.one_of(constants, st.sampled_from(VARIABLES).map(Var))
trees = st.recursive(
    leaves,
    lambda children: st.one_of(
        children.map(Neg),
        st.builds(Call, st.sampled_from(FUNCTIONS), children),
        st.builds(BinOp, st.sampled_from(BINARY_OPERATORS), children, children),
    ),
    max_leaves=12,
)


@seed(1)
@settings(max_examples=300, deadline=None)
@given(node=trees)
def test_printed_expression_parses_back_to_the_same_tree(node):
    assert parse(to_text(node)).ast == node
