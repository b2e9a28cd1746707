"""Arithmetic expression language for safety metrics.

Grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := number | identifier | accessor '(' identifier ')' | '(' expr ')'

Accessors `integrity`, `prob`, `count`, `sum` read values out of the safety
architecture or the run store; bare identifiers name measures or other metrics
and are resolved lazily at evaluation time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Union

ACCESSORS = ("integrity", "prob", "count", "sum")

_NUM_CHARS = set("0123456789")


class ExpressionSyntaxError(ValueError):
    """Raised on malformed expression text; carries the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


@dataclass(frozen=True)
class Num:
    value: float

    def to_text(self) -> str:
        if self.value == int(self.value) and abs(self.value) < 1e16:
            return str(int(self.value))
        return repr(self.value)


@dataclass(frozen=True)
class Ident:
    name: str

    def to_text(self) -> str:
        return self.name


@dataclass(frozen=True)
class Accessor:
    fn: str  # one of ACCESSORS
    target: str

    def to_text(self) -> str:
        return f"{self.fn}({self.target})"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: Expr
    right: Expr

    def to_text(self) -> str:
        return f"{_child_text(self, self.left, right=False)} {self.op} {_child_text(self, self.right, right=True)}"


Expr = Union[Num, Ident, Accessor, BinOp]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _child_text(parent: BinOp, child: Expr, *, right: bool) -> str:
    """Parenthesize a child only where reparsing would change the tree."""
    text = child.to_text()
    if not isinstance(child, BinOp):
        return text
    pp, cp = _PRECEDENCE[parent.op], _PRECEDENCE[child.op]
    if cp < pp or (right and cp == pp):
        return f"({text})"
    return text


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', 'op', 'lparen', 'rparen', 'eof'
    text: str
    pos: int


def _tokenize(text: str) -> Iterator[_Token]:
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/":
            yield _Token("op", c, i)
            i += 1
        elif c == "(":
            yield _Token("lparen", c, i)
            i += 1
        elif c == ")":
            yield _Token("rparen", c, i)
            i += 1
        elif c in _NUM_CHARS or (c == "." and i + 1 < n and text[i + 1] in _NUM_CHARS):
            start = i
            while i < n and (text[i] in _NUM_CHARS or text[i] == "."):
                i += 1
            # scientific notation: 1e-6, 2.5E+3
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j] in _NUM_CHARS:
                    i = j
                    while i < n and text[i] in _NUM_CHARS:
                        i += 1
            token = text[start:i]
            try:
                float(token)
            except ValueError:
                raise ExpressionSyntaxError(f"malformed number {token!r}", start) from None
            yield _Token("num", token, start)
        elif c.isalpha() or c == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            yield _Token("ident", text[start:i], start)
        else:
            raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
    yield _Token("eof", "", n)


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.current
        self.index += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        if self.current.kind != kind:
            raise ExpressionSyntaxError(f"expected {what}", self.current.pos)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.current.kind != "eof":
            raise ExpressionSyntaxError(f"unexpected {self.current.text!r}", self.current.pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        tok = self.current
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text in ACCESSORS and self.current.kind == "lparen":
                self.advance()
                target = self.expect("ident", "identifier inside accessor")
                self.expect("rparen", "')'")
                return Accessor(tok.text, target.text)
            return Ident(tok.text)
        if tok.kind == "lparen":
            self.advance()
            node = self.expr()
            self.expect("rparen", "')'")
            return node
        raise ExpressionSyntaxError("expected a number, identifier, or '('", tok.pos)


def parse_expression(text: str) -> Expr:
    """Parse expression text into a tree; raises ExpressionSyntaxError with position."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def references(node: Expr) -> set[str]:
    """Bare identifiers referenced by the tree (accessor targets excluded)."""
    if isinstance(node, Ident):
        return {node.name}
    if isinstance(node, BinOp):
        return references(node.left) | references(node.right)
    return set()


def accessor_refs(node: Expr) -> set[tuple[str, str]]:
    """(accessor, target) pairs appearing in the tree."""
    if isinstance(node, Accessor):
        return {(node.fn, node.target)}
    if isinstance(node, BinOp):
        return accessor_refs(node.left) | accessor_refs(node.right)
    return set()


def evaluate(
    node: Expr,
    resolve_ident: Callable[[str], float],
    resolve_accessor: Callable[[str, str], float],
) -> float:
    """Evaluate a tree with caller-supplied identifier/accessor resolution."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ident):
        return resolve_ident(node.name)
    if isinstance(node, Accessor):
        return resolve_accessor(node.fn, node.target)
    left = evaluate(node.left, resolve_ident, resolve_accessor)
    right = evaluate(node.right, resolve_ident, resolve_accessor)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if right == 0:
        raise ZeroDivisionError(f"division by zero in '{node.to_text()}'")
    return left / right
