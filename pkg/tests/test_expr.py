"""Tests for the coefficient expression parser, printer and evaluator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.coeff import ScalarFieldExpr, parse_expression
from src.coeff.expr import BinOp, Call, Const, Neg, Node, Var, norm_text, to_text
from src.errors import ExpressionEvaluationError, ExpressionSyntaxError

CORPUS = [
    "1",
    "0",
    "2.5",
    "1e-3",
    ".5",
    "x1",
    "-x1",
    "--x1",
    "+x1",
    "x1 + x2",
    "x1 - x2 - x3",
    "x1 - (x2 - x3)",
    "x1 * x2 / x3",
    "x1 / (x2 * x3)",
    "x1 / x2 / x3",
    "2^3^2",
    "(2^3)^2",
    "2^-1",
    "-2^2",
    "(-2)^2",
    "x1^2 + x2^2",
    "(1 + abs(x1))^2 * log(2 + abs(x1))",
    "(1 + x1^2)^2",
    "1.5 + 0.5 * sin(x1)",
    "exp(-x1^2 / 2)",
    "sqrt(x1^2 + x2^2 + x3^2)",
    "min(x1, x2)",
    "max(x1, x2, x3)",
    "min(1, max(x1, -1))",
    "cos(pi * x1)",
    "e^x1",
    "abs(x1 - x2) * abs(x2 - x3)",
    "1 / (1 + x1^2)",
    "(x1 + x2) * (x1 - x2)",
    "x1 * -x2",
    "x1 - -x2",
    "-(x1 + x2)",
    "-(x1 * x2)",
    "2 * (3 + 4) * 5",
    "((((x1))))",
    "x1 ** 2",
    "log(1 + exp(x1))",
    "sin(x1)^2 + cos(x1)^2",
    "3 - 2 + 1",
    "3 - (2 + 1)",
    "12 / 4 / 3",
    "12 / (4 / 3)",
    "max(0, x1)^0.5",
    "(1 + abs(x1))^2",
    "x1^2 * x2^2 * x3^2",
    "0.25 + x1 * x2 - x3 / 7",
    "exp(sin(cos(x1)))",
]

POINTS = np.array(
    [
        [0.3, -1.2, 2.0],
        [1.7, 0.4, -0.6],
        [-0.9, 2.2, 1.1],
    ]
)


class TestParsing:
    """Precedence, associativity and errors."""

    def test_constant(self) -> None:
        expr = parse_expression("1", 1)
        assert expr.at(0.0) == 1.0
        assert expr.at(5.0) == 1.0

    def test_tikhonov_boundary_expression_at_origin(self) -> None:
        expr = parse_expression("(1+abs(x1))^2 * log(2+abs(x1))", 1)
        assert expr.at(0.0) == pytest.approx(math.log(2.0))

    def test_power_is_right_associative(self) -> None:
        assert parse_expression("2^3^2", 1).at(0.0) == 512.0
        assert parse_expression("(2^3)^2", 1).at(0.0) == 64.0

    def test_unary_minus_binds_looser_than_power(self) -> None:
        assert parse_expression("-2^2", 1).at(0.0) == -4.0
        assert parse_expression("2^-1", 1).at(0.0) == 0.5

    def test_left_associative_subtraction_and_division(self) -> None:
        assert parse_expression("3 - 2 + 1", 1).at(0.0) == 2.0
        assert parse_expression("12 / 4 / 3", 1).at(0.0) == 1.0

    def test_double_star_is_power(self) -> None:
        assert parse_expression("x1 ** 3", 1).at(2.0) == 8.0

    def test_constants_and_variadic_functions(self) -> None:
        assert parse_expression("cos(pi)", 1).at(0.0) == pytest.approx(-1.0)
        assert parse_expression("max(x1, x2, x3)", 3).at(1.0, 5.0, 2.0) == 5.0

    def test_syntax_error_reports_position(self) -> None:
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expression("1 + * 2", 1)
        assert info.value.position == 4

    def test_unknown_identifier(self) -> None:
        with pytest.raises(ExpressionSyntaxError, match="unknown identifier 'tan'"):
            parse_expression("tan(x1)", 1)

    def test_variable_beyond_dimension(self) -> None:
        with pytest.raises(ExpressionSyntaxError, match="exceeds dimension"):
            parse_expression("x1 + x2", 1)

    def test_wrong_arity(self) -> None:
        with pytest.raises(ExpressionSyntaxError, match="exactly one argument"):
            parse_expression("sin(x1, x1)", 1)
        with pytest.raises(ExpressionSyntaxError, match="at least two"):
            parse_expression("min(x1)", 1)

    def test_empty_and_unbalanced(self) -> None:
        with pytest.raises(ExpressionSyntaxError):
            parse_expression("   ", 1)
        with pytest.raises(ExpressionSyntaxError):
            parse_expression("(x1 + 1", 1)


class TestEvaluation:
    """Vectorized evaluation raises instead of returning NaN."""

    def test_division_by_zero(self) -> None:
        expr = parse_expression("x1/x1", 1)
        with pytest.raises(ExpressionEvaluationError, match="division by zero") as info:
            expr.at(0.0)
        assert info.value.point == (0.0,)

    def test_log_of_non_positive(self) -> None:
        with pytest.raises(ExpressionEvaluationError, match="log of non-positive"):
            parse_expression("log(x1)", 1)(np.array([[1.0], [-1.0]]))

    def test_negative_base_fractional_exponent(self) -> None:
        with pytest.raises(ExpressionEvaluationError, match="non-integer exponent"):
            parse_expression("x1^0.5", 1).at(-4.0)

    def test_overflow_is_an_error(self) -> None:
        with pytest.raises(ExpressionEvaluationError, match="non-finite"):
            parse_expression("exp(x1)", 1).at(1000.0)

    def test_shape_mismatch(self) -> None:
        with pytest.raises(ExpressionEvaluationError, match="expected points"):
            parse_expression("x1", 2)(np.zeros((4, 3)))

    def test_vectorized_matches_pointwise(self) -> None:
        expr = parse_expression("(1 + x1^2) * cos(x2) - min(x1, x2)", 2)
        points = np.array([[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]])
        values = expr(points)
        expected = [(1 + x**2) * math.cos(y) - min(x, y) for x, y in points]
        np.testing.assert_allclose(values, expected, rtol=1e-15)

    def test_norm_text(self) -> None:
        assert parse_expression(norm_text(1), 1).at(-2.0) == 2.0
        assert parse_expression(norm_text(3), 3).at(1.0, 2.0, 2.0) == pytest.approx(3.0)


class TestRoundTrip:
    """print -> parse -> print is a fixed point and preserves values."""

    @pytest.mark.parametrize("text", CORPUS)
    def test_corpus_is_idempotent(self, text: str) -> None:
        expr = parse_expression(text, 3)
        printed = expr.to_text()
        reparsed = parse_expression(printed, 3)
        assert reparsed.node == expr.node
        assert reparsed.to_text() == printed

    def test_corpus_size(self) -> None:
        assert len(CORPUS) >= 50

    def test_whitespace_is_irrelevant(self) -> None:
        assert parse_expression("x1+2*x2", 2).node == parse_expression(" x1 + 2 * x2 ", 2).node


_leaves = st.one_of(
    st.integers(min_value=0, max_value=9).map(lambda v: Const(float(v))),
    st.sampled_from([Var(1), Var(2), Var(3)]),
)


def _extend(children: st.SearchStrategy[Node]) -> st.SearchStrategy[Node]:
    return st.one_of(
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(Neg, children),
        st.builds(lambda a: Call("sin", (a,)), children),
        st.builds(lambda a, b: Call("max", (a, b)), children, children),
    )


trees = st.recursive(_leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_printed_trees_reparse_to_themselves(node: Node) -> None:
    """Any tree prints to text that reparses to a tree printing identically."""
    text = to_text(node)
    reparsed = parse_expression(text, 3)
    assert to_text(reparsed.node) == text


@settings(max_examples=100, deadline=None)
@given(trees)
def test_printed_trees_evaluate_like_the_original(node: Node) -> None:
    """Printing never changes the value of a tree."""
    expr = parse_expression(to_text(node), 3)
    try:
        direct = ScalarFieldExpr(node, 3)(POINTS)
    except ExpressionEvaluationError:
        with pytest.raises(ExpressionEvaluationError):
            expr(POINTS)
        return
    np.testing.assert_array_equal(expr(POINTS), direct)
