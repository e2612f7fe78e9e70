"""
Coefficient expressions: tokenizer, precedence-climbing parser, printer, evaluator.

Grammar (lowest to highest binding):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?          # right associative, 2^-1 allowed
    atom   := number | "x"<k> | "pi" | "e" | func "(" args ")" | "(" expr ")"

Evaluation is vectorized over an (m, d) array of points. Undefined values
(division by zero, log of non-positive numbers, overflow) raise instead of
producing NaN.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import ExpressionEvaluationError, ExpressionSyntaxError

FloatArray = NDArray[np.float64]

MAX_DIMENSION = 3

UNARY_FUNCTIONS: dict[str, Callable[[FloatArray], FloatArray]] = {
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
}
VARIADIC_FUNCTIONS = {"min": np.minimum, "max": np.maximum}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)
_VARIABLE_RE = re.compile(r"x([1-9][0-9]*)")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Neg:
    operand: Node


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: Node
    right: Node


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Node, ...]


Node = Const | Var | Neg | BinOp | Call

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PRECEDENCE = 3
_ATOM_PRECEDENCE = 5


class _Token(NamedTuple):
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup or "op"
        value = match.group(kind)
        start = match.start(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append(_Token(kind, value, start))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, d: int):
        self.tokens = _tokenize(text)
        self.index = 0
        self.d = d

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> None:
        token = self.current
        if token.kind != "op" or token.text != text:
            found = token.text or "end of input"
            raise ExpressionSyntaxError(f"expected {text!r}, found {found!r}", token.position)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(
                f"unexpected token {self.current.text!r}", self.current.position
            )
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.current.kind == "op" and self.current.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            return self._name(token)
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected {found!r}", token.position)

    def _name(self, token: _Token) -> Node:
        name = token.text
        if var := _VARIABLE_RE.fullmatch(name):
            index = int(var.group(1))
            if index > self.d:
                raise ExpressionSyntaxError(
                    f"variable {name} exceeds dimension d={self.d}", token.position
                )
            return Var(index)
        if name in CONSTANTS:
            return Const(CONSTANTS[name])
        if name in UNARY_FUNCTIONS or name in VARIADIC_FUNCTIONS:
            self.expect("(")
            args = [self.expr()]
            while self.current.kind == "op" and self.current.text == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if name in UNARY_FUNCTIONS and len(args) != 1:
                raise ExpressionSyntaxError(
                    f"{name} takes exactly one argument, got {len(args)}", token.position
                )
            if name in VARIADIC_FUNCTIONS and len(args) < 2:
                raise ExpressionSyntaxError(
                    f"{name} takes at least two arguments", token.position
                )
            return Call(name, tuple(args))
        raise ExpressionSyntaxError(f"unknown identifier {name!r}", token.position)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return _NEG_PRECEDENCE
    if isinstance(node, Const) and node.value < 0:
        return _NEG_PRECEDENCE
    return _ATOM_PRECEDENCE


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(node: Node) -> str:
    """Print a node with the minimal parentheses that reparse to the same tree."""
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(arg) for arg in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _precedence(node.operand) < _NEG_PRECEDENCE:
            inner = f"({inner})"
        return f"-{inner}"

    prec = _PRECEDENCE[node.op]
    left = to_text(node.left)
    right = to_text(node.right)
    if node.op == "^":
        if _precedence(node.left) <= prec:
            left = f"({left})"
        if _precedence(node.right) < _NEG_PRECEDENCE:
            right = f"({right})"
        return f"{left}^{right}"
    if _precedence(node.left) < prec:
        left = f"({left})"
    if _precedence(node.right) <= prec:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _first_bad(points: FloatArray, mask: NDArray[np.bool_]) -> tuple[float, ...]:
    return tuple(float(v) for v in points[int(np.argmax(mask))])


def _checked(result: FloatArray, points: FloatArray, what: str) -> FloatArray:
    bad = ~np.isfinite(result)
    if bad.any():
        raise ExpressionEvaluationError(f"non-finite value in {what}", _first_bad(points, bad))
    return result


def _evaluate(node: Node, points: FloatArray) -> FloatArray:
    m = points.shape[0]
    if isinstance(node, Const):
        return np.full(m, node.value)
    if isinstance(node, Var):
        return points[:, node.index - 1].astype(np.float64, copy=True)
    if isinstance(node, Neg):
        return -_evaluate(node.operand, points)
    if isinstance(node, Call):
        args = [_evaluate(arg, points) for arg in node.args]
        if node.name in VARIADIC_FUNCTIONS:
            combine = VARIADIC_FUNCTIONS[node.name]
            result = args[0]
            for arg in args[1:]:
                result = combine(result, arg)
            return result
        (arg,) = args
        if node.name == "log":
            bad = arg <= 0.0
            if bad.any():
                raise ExpressionEvaluationError(
                    "log of non-positive value", _first_bad(points, bad)
                )
        elif node.name == "sqrt":
            bad = arg < 0.0
            if bad.any():
                raise ExpressionEvaluationError("sqrt of negative value", _first_bad(points, bad))
        with np.errstate(all="ignore"):
            return _checked(UNARY_FUNCTIONS[node.name](arg), points, node.name)

    left = _evaluate(node.left, points)
    right = _evaluate(node.right, points)
    with np.errstate(all="ignore"):
        if node.op == "+":
            return _checked(left + right, points, "addition")
        if node.op == "-":
            return _checked(left - right, points, "subtraction")
        if node.op == "*":
            return _checked(left * right, points, "product")
        if node.op == "/":
            bad = right == 0.0
            if bad.any():
                raise ExpressionEvaluationError("division by zero", _first_bad(points, bad))
            return _checked(left / right, points, "quotient")
        bad = (left < 0.0) & (right != np.round(right))
        if bad.any():
            raise ExpressionEvaluationError(
                "negative base with non-integer exponent", _first_bad(points, bad)
            )
        bad = (left == 0.0) & (right < 0.0)
        if bad.any():
            raise ExpressionEvaluationError("zero to a negative power", _first_bad(points, bad))
        return _checked(np.power(left, right), points, "power")


@dataclass(frozen=True)
class ScalarFieldExpr:
    """A parsed scalar function of x1..xd."""

    node: Node
    d: int

    def __call__(self, points: ArrayLike) -> FloatArray:
        """Evaluate at an (m, d) array of points (a single point is accepted too)."""
        arr = np.asarray(points, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise ExpressionEvaluationError(
                f"expected points of shape (m, {self.d}), got {np.shape(points)}"
            )
        if not np.isfinite(arr).all():
            raise ExpressionEvaluationError("non-finite evaluation point")
        return _evaluate(self.node, arr)

    def at(self, *coords: float) -> float:
        """Evaluate at a single point given as coordinates."""
        return float(self(np.array(coords, dtype=np.float64))[0])

    def to_text(self) -> str:
        return to_text(self.node)

    def __str__(self) -> str:
        return self.to_text()


def parse_expression(text: str, d: int) -> ScalarFieldExpr:
    """Parse ``text`` into an expression over x1..xd."""
    if not 1 <= d <= MAX_DIMENSION:
        raise ExpressionSyntaxError(f"dimension must be in 1..{MAX_DIMENSION}, got {d}", 0)
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return ScalarFieldExpr(_Parser(text, d).parse(), d)


def constant(value: float, d: int) -> ScalarFieldExpr:
    """Expression for a constant function."""
    if value < 0:
        return ScalarFieldExpr(Neg(Const(-float(value))), d)
    return ScalarFieldExpr(Const(float(value)), d)


def norm_text(d: int) -> str:
    """Expression text for the Euclidean norm |x| in dimension d."""
    if d == 1:
        return "abs(x1)"
    return "sqrt(" + " + ".join(f"x{i}^2" for i in range(1, d + 1)) + ")"
