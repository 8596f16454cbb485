"""
Real-valued expressions in the variables x, s and y.

Kernels and right-hand sides given as strings in job configs are parsed here
by a recursive-descent parser over an explicit token stream.

Grammar (whitespace is insignificant, '−' U+2212 is read as '-')::

    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := primary ("^" unary)?
    primary    := NUMBER | VARIABLE | FUNCTION "(" expression ")" | "(" expression ")"
    VARIABLE   := "x" | "s" | "y"
    FUNCTION   := "exp" | "log" | "sin" | "cos" | "sqrt" | "abs"

'^' binds tighter than unary minus and is right-associative, so
"-2^2" is -(2^2) and "2^3^2" is 2^(3^2).
"""

import logging
import re
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Union

import numpy as np

from pie_solver.errors import (
    ArityError,
    ExpressionDomainError,
    ExpressionSyntaxError,
    InvalidArgumentError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

VARIABLES = ("x", "s", "y")
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs")
BINARY_OPERATORS = ("+", "-", "*", "/", "^")

Number = Union[float, np.ndarray]


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expression:
    """Parsed expression: the AST plus the text it came from."""

    ast: Node
    source: str

    def __call__(self, x: Number = 0.0, s: Number = 0.0, y: Number = 0.0) -> Number:
        return evaluate(self, x, s, y)

    def __str__(self) -> str:
        return self.source


# ---------------------------------------------------------------- lexing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "name", "op", "end"
    text: str
    pos: int  # character offset into the normalized text


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(source: str, text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            pos = len(text)
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(
                f"unexpected character {text[bad]!r}", source, _byte_offset(source, bad),
                "number, variable, function, operator or parenthesis",
            )
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, source: str):
        self.source = source
        # U+2212 is one character, so character offsets survive normalization
        self.tokens = _tokenize(source, source.replace("−", "-"))
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _advance(self) -> _Token:
        token = self.current
        self.index += 1
        return token

    def _error(self, message: str, expected: str, token: Optional[_Token] = None, cls=ExpressionSyntaxError):
        token = token or self.current
        found = token.text or "end of input"
        raise cls(f"{message}, found {found!r}", self.source, _byte_offset(self.source, token.pos), expected)

    def _expect(self, text: str):
        if self.current.kind != "op" or self.current.text != text:
            self._error("syntax error", repr(text))
        self._advance()

    def parse(self) -> Node:
        node = self._expression()
        if self.current.kind != "end":
            self._error("unexpected trailing input", "operator or end of input")
        return node

    def _expression(self) -> Node:
        node = self._term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Node:
        if self.current.kind == "op" and self.current.text == "-":
            self._advance()
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Node:
        base = self._primary()
        if self.current.kind == "op" and self.current.text == "^":
            self._advance()
            return BinOp("^", base, self._unary())
        return base

    def _primary(self) -> Node:
        token = self.current
        if token.kind == "number":
            value = float(token.text)
            if not np.isfinite(value):
                self._error("number literal overflows a double", "finite number", token)
            self._advance()
            return Const(value)
        if token.kind == "name":
            self._advance()
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in FUNCTIONS:
                return self._call(token)
            self._error(
                f"unknown identifier {token.text!r}",
                "one of " + ", ".join(VARIABLES + FUNCTIONS), token, UnknownIdentifierError,
            )
        if token.kind == "op" and token.text == "(":
            self._advance()
            node = self._expression()
            self._expect(")")
            return node
        self._error("syntax error", "number, variable, function or '('")

    def _call(self, name: _Token) -> Node:
        if not (self.current.kind == "op" and self.current.text == "("):
            self._error(f"function {name.text!r} must be called", "'('", cls=ArityError)
        self._advance()
        if self.current.kind == "op" and self.current.text == ")":
            self._error(f"function {name.text!r} takes exactly one argument", "argument", cls=ArityError)
        arg = self._expression()
        if self.current.kind == "op" and self.current.text == ",":
            self._error(f"function {name.text!r} takes exactly one argument", "')'", cls=ArityError)
        self._expect(")")
        return Call(name.text, arg)


def parse(text: str) -> Expression:
    """
    Parse expression text into an Expression.

    Args:
        text: Non-empty expression in x, s, y

    Returns:
        Expression: AST and original source

    Raises:
        ExpressionSyntaxError: With byte offset and expected-token message
        UnknownIdentifierError: Identifier is neither variable nor function
        ArityError: Function called with no argument or more than one
    """
    if not isinstance(text, str) or text.strip() == "":
        raise InvalidArgumentError("expression text must be a non-empty string")
    return Expression(ast=_Parser(text).parse(), source=text)


# ---------------------------------------------------------------- printing

def _node_text(node: Node) -> str:
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_node_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_node_text(node.left)} {node.op} {_node_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({_node_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def to_text(expr: Union[Expression, Node]) -> str:
    """Fully parenthesized canonical text; parses back to the same AST."""
    node = expr.ast if isinstance(expr, Expression) else expr
    return _node_text(node)


def free_variables(expr: Expression) -> FrozenSet[str]:
    """Exact set of variables occurring in the AST."""
    found = set()
    stack = [expr.ast]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, Call):
            stack.append(node.arg)
    return frozenset(found)


def _rename(node: Node, mapping: dict) -> Node:
    if isinstance(node, Var):
        return Var(mapping.get(node.name, node.name))
    if isinstance(node, Neg):
        return Neg(_rename(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, _rename(node.left, mapping), _rename(node.right, mapping))
    if isinstance(node, Call):
        return Call(node.func, _rename(node.arg, mapping))
    return node


def rename_variables(expr: Expression, mapping: dict) -> Expression:
    """Simultaneous variable substitution, e.g. {"x": "s", "s": "x"} swaps x and s."""
    unknown = set(mapping) | set(mapping.values())
    if not unknown <= set(VARIABLES):
        raise InvalidArgumentError(f"can only rename among {VARIABLES}, got {sorted(unknown)}")
    ast = _rename(expr.ast, mapping)
    return Expression(ast=ast, source=_node_text(ast))


# ---------------------------------------------------------------- evaluation

def _domain_error(message: str, node: Node):
    raise ExpressionDomainError(message, _node_text(node))


def _eval(node: Node, env: dict) -> Number:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        arg = _eval(node.arg, env)
        if node.func == "log":
            if np.any(arg <= 0):
                _domain_error("log of non-positive argument", node)
            return np.log(arg)
        if node.func == "sqrt":
            if np.any(arg < 0):
                _domain_error("sqrt of negative argument", node)
            return np.sqrt(arg)
        if node.func == "exp":
            with np.errstate(over="ignore"):
                return np.exp(arg)
        if node.func == "sin":
            return np.sin(arg)
        if node.func == "cos":
            return np.cos(arg)
        return np.abs(arg)

    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            _domain_error("division by zero", node)
        return left / right
    # power
    base = np.asarray(left, dtype=float)
    exponent = np.asarray(right, dtype=float)
    base_b, exponent_b = np.broadcast_arrays(base, exponent)
    if np.any((base_b < 0) & (exponent_b != np.round(exponent_b))):
        _domain_error("negative base with non-integer exponent", node)
    if np.any((base_b == 0) & (exponent_b < 0)):
        _domain_error("zero raised to a negative power", node)
    with np.errstate(over="ignore"):
        result = np.power(base, exponent)
    return result


def evaluate(expr: Expression, x: Number = 0.0, s: Number = 0.0, y: Number = 0.0) -> Number:
    """
    Evaluate with real arithmetic at a point or on broadcastable arrays.

    Scalar arguments return a float; array arguments return an array of the
    broadcast shape. Domain violations raise instead of producing NaN.

    Args:
        expr: Parsed expression
        x, s, y: Variable values (scalars or numpy arrays)

    Returns:
        float or numpy.ndarray

    Raises:
        ExpressionDomainError: log/sqrt/power/division outside the real domain,
            naming the offending subexpression
    """
    env = {
        "x": np.asarray(x, dtype=float),
        "s": np.asarray(s, dtype=float),
        "y": np.asarray(y, dtype=float),
    }
    shape = np.broadcast(env["x"], env["s"], env["y"]).shape
    result = _eval(expr.ast, env)
    if shape == ():
        return float(result)
    return np.broadcast_to(np.asarray(result, dtype=float), shape).copy()
