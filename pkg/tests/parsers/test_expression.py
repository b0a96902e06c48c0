import math

import numpy as np
import pytest

from app.core.exceptions import ExpressionSyntaxError
from app.parsers.expression import (
    BinaryOp,
    Negate,
    Number,
    compile_expression,
    coordinate_indices,
    parse_expression,
)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1 + 2 * 3", 7.0),
        ("(1 + 2) * 3", 9.0),
        ("2 ^ 3 ^ 2", 512.0),
        ("-2 ^ 2", -4.0),
        ("8 / 4 / 2", 1.0),
        ("10 - 4 - 3", 3.0),
        ("2 * pi", 2.0 * math.pi),
        ("1.5e1 + .5", 15.5),
    ],
)
def test_constant_expressions(text, expected):
    assert parse_expression(text).evaluate(np.zeros(1)) == pytest.approx(expected)


def test_unary_minus_binds_looser_than_power():
    assert parse_expression("-x1^2") == Negate(BinaryOp("^", parse_expression("x1"), Number(2.0)))


def test_coordinates_and_functions():
    fn = compile_expression(parse_expression("sin(x1)^2 * (1 - xn)^2"), 2)
    assert fn([math.pi / 2, 0.25]) == pytest.approx(0.5625)
    assert coordinate_indices(parse_expression("x1 * xn + x2"), 3) == [1, 2, 3]


def test_printing_round_trips():
    node = parse_expression("exp(-x2) * (x1 - 3)^2 / sqrt(2 + cos(xn))")
    assert parse_expression(str(node)) == node


def test_coordinate_beyond_dimension():
    with pytest.raises(ExpressionSyntaxError):
        compile_expression(parse_expression("x1 + x3"), 2)


@pytest.mark.parametrize(
    "text, column, reason",
    [
        ("sin(x1", 7, "expected ')'"),
        ("x1 $ 2", 4, "unexpected character"),
        ("foo(x1)", 1, "unknown name"),
        ("x0", 1, "unknown name"),
        ("1 +", 4, "unexpected"),
        ("1 2", 3, "unexpected '2'"),
    ],
)
def test_syntax_errors_carry_position(text, column, reason):
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression(text, line=3)
    assert exc.value.line == 3
    assert exc.value.column == column
    assert exc.value.reason.startswith(reason)
    assert exc.value.exit_code == 5
