"""Recursive-descent parser for the expression grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := base ('^' unary)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus and is right-associative, so ``-x^2``
is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Integer literals become exact
rationals; literals with a decimal point or exponent become floats.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from ..errors import ExpressionSyntaxError, UnknownIdentifier
from .chart import Chart
from .nodes import FUNCTIONS, Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var


class Token(NamedTuple):
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    offset: int


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    # offsets are byte offsets into the UTF-8 encoding
    byte_pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", text, byte_pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), byte_pos))
        byte_pos += len(m.group().encode())
        pos = m.end()
    tokens.append(Token("end", "", byte_pos))
    return tokens


def _number(text: str) -> Const:
    if re.fullmatch(r"\d+", text):
        return Const(Fraction(int(text)))
    return Const(float(text))


class _Parser:
    def __init__(self, text: str, chart: Chart | None):
        self.text = text
        self.chart = chart
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExpressionSyntaxError(f"{message}, found {found}", self.text, tok.offset)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "op":
            self.error(f"expected {text!r}")
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error("unexpected token")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Sum(*terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.unary()
            if op == "*":
                factors.append(rhs)
            else:
                left = factors[0] if len(factors) == 1 else Product(*factors)
                factors = [Quotient(left, rhs)]
        return factors[0] if len(factors) == 1 else Product(*factors)

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Power(base, self.unary())
        return base

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return _number(tok.text)
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(tok.text, arg)
            if self.chart is not None and tok.text not in self.chart.coordinates:
                raise UnknownIdentifier(tok.text, self.chart.coordinates)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected a number, identifier or '('")


def parse_expr(text: str, chart: Chart | None = None) -> Expr:
    """Parse ``text`` into an expression tree.

    With a ``chart``, every identifier that is not a reserved function must be
    one of its coordinates; otherwise ``UnknownIdentifier`` is raised.
    """
    return _Parser(text, chart).parse()
