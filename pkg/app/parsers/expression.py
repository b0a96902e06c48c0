"""
Metric-coefficient expression language.

    expr   := prefix (infix)*          Pratt loop on binding powers
    prefix := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")" | "-" expr
    infix  := ("+" | "-") expr  (10)  |  ("*" | "/") expr  (20)  |  "^" expr  (30, right)

Names are the coordinates x1..xn, the alias xn for the last coordinate and the
constant pi. Printing an expression and parsing it again gives the same tree.
"""

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Set, Union

import numpy as np

from app.core.exceptions import ExpressionSyntaxError

FUNCTIONS: Dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}
CONSTANTS: Dict[str, float] = {"pi": math.pi}

BINDING_POWER = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
UNARY_POWER = 25

_TOKEN = re.compile(
    r"(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)
_COORDINATE = re.compile(r"x(\d+|n)$")


# AST nodes
@dataclass(frozen=True)
class Number:
    value: float

    def evaluate(self, x: np.ndarray):
        return self.value

    def coordinates(self) -> Set[str]:
        return set()

    def __str__(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Name:
    name: str

    def evaluate(self, x: np.ndarray):
        if self.name in CONSTANTS:
            return CONSTANTS[self.name]
        index = self.name[1:]
        return x[-1] if index == "n" else x[int(index) - 1]

    def coordinates(self) -> Set[str]:
        return set() if self.name in CONSTANTS else {self.name}

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Negate:
    operand: "Node"

    def evaluate(self, x: np.ndarray):
        return -self.operand.evaluate(x)

    def coordinates(self) -> Set[str]:
        return self.operand.coordinates()

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"

    def evaluate(self, x: np.ndarray):
        a, b = self.left.evaluate(x), self.right.evaluate(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def coordinates(self) -> Set[str]:
        return self.left.coordinates() | self.right.coordinates()

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    function: str
    argument: "Node"

    def evaluate(self, x: np.ndarray):
        return FUNCTIONS[self.function](self.argument.evaluate(x))

    def coordinates(self) -> Set[str]:
        return self.argument.coordinates()

    def __str__(self) -> str:
        return f"{self.function}({self.argument})"


Node = Union[Number, Name, Negate, BinaryOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op, end
    text: str
    column: int


class ExpressionParser:
    def __init__(self, text: str, line: int = 1, column: int = 1):
        self._text = text
        self._line = line
        self._column = column
        self._tokens: Iterator[Token] = self._tokenize()
        self._token: Token = next(self._tokens)

    def parse(self) -> Node:
        node = self._expression(0)
        if self._token.kind != "end":
            self._fail(f"unexpected {self._token.text!r}", self._token)
        return node

    def _fail(self, message: str, token: Token):
        raise ExpressionSyntaxError(message, self._line, token.column)

    def _tokenize(self) -> Iterator[Token]:
        position = 0
        text = self._text.rstrip()
        while position < len(text):
            if text[position].isspace():
                position += 1
                continue
            match = _TOKEN.match(text, position)
            if match is None:
                raise ExpressionSyntaxError(
                    f"unexpected character {text[position]!r}", self._line, self._column + position
                )
            kind = match.lastgroup
            yield Token(kind, match.group(kind), self._column + match.start(kind))
            position = match.end()
        yield Token("end", "end of expression", self._column + len(text))

    def _advance(self) -> Token:
        token = self._token
        if token.kind != "end":
            self._token = next(self._tokens)
        return token

    def _expect(self, text: str) -> None:
        if self._token.text != text:
            self._fail(f"expected {text!r}, found {self._token.text!r}", self._token)
        self._advance()

    def _expression(self, rbp: int) -> Node:
        left = self._prefix(self._advance())
        while self._token.kind == "op" and rbp < BINDING_POWER.get(self._token.text, 0):
            left = self._infix(self._advance(), left)
        return left

    def _prefix(self, token: Token) -> Node:
        if token.kind == "number":
            return Number(float(token.text))
        if token.kind == "name":
            return self._name(token)
        if token.text == "(":
            node = self._expression(0)
            self._expect(")")
            return node
        if token.text == "-":
            return Negate(self._expression(UNARY_POWER))
        self._fail(f"unexpected {token.text!r}", token)

    def _name(self, token: Token) -> Node:
        name = token.text
        if name in FUNCTIONS:
            self._expect("(")
            argument = self._expression(0)
            self._expect(")")
            return Call(name, argument)
        if name in CONSTANTS:
            return Name(name)
        match = _COORDINATE.match(name)
        if match is None or match.group(1) == "0":
            self._fail(f"unknown name {name!r}", token)
        return Name(name)

    def _infix(self, token: Token, left: Node) -> Node:
        power = BINDING_POWER[token.text]
        # right associative
        if token.text == "^":
            power -= 1
        return BinaryOp(token.text, left, self._expression(power))


def parse_expression(text: str, line: int = 1, column: int = 1) -> Node:
    return ExpressionParser(text, line, column).parse()


def coordinate_indices(node: Node, n: int) -> List[int]:
    """1-based coordinate indices used by an expression; xn maps to n."""
    indices = []
    for name in node.coordinates():
        index = name[1:]
        indices.append(n if index == "n" else int(index))
    return sorted(indices)


def compile_expression(node: Node, n: int, line: Optional[int] = None) -> Callable[[np.ndarray], float]:
    out_of_range = [i for i in coordinate_indices(node, n) if i > n]
    if out_of_range:
        raise ExpressionSyntaxError(
            f"coordinate x{out_of_range[0]} exceeds the dimension {n}", line or 1, 1
        )
    return lambda x: float(node.evaluate(np.asarray(x, dtype=float)))
