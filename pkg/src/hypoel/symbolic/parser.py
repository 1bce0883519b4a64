"""Recursive-descent parser for coefficient expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' exponent)?
    exponent := ['-'] INT | '(' ['-'] INT ')'
    atom   := NUMBER | 'x'INT | 't' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := 'sin' | 'cos' | 'exp'

Numbers are kept exact (``Fraction``) when written as decimals.
"""
from __future__ import annotations

from fractions import Fraction
import math
import re

from .expr import Add, Const, Div, Expr, Mul, Neg, Pow, Sub, Time, UNARY, Var


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class VariableRangeError(ExprError):
    def __init__(self, index: int, dimension: int, offset: int):
        self.index = index
        self.offset = offset
        super().__init__(f"variable x{index} out of range for dimension {dimension} "
                         f"at offset {offset}")


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.dimension = dimension
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, _byte(self.text, tok[2]), self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}")
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        tok = self.peek()
        if tok[0] != "num" or not tok[1].isdigit():
            raise self.error("exponent must be an integer literal")
        self.take()
        if paren:
            self.expect(")")
        return sign * int(tok[1])

    def atom(self) -> Expr:
        tok = self.peek()
        kind, value, pos = tok
        if kind == "num":
            self.take()
            return Const(Fraction(value))
        if kind == "name":
            self.take()
            if value in UNARY:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return UNARY[value](arg)
            if value == "t":
                return Time()
            if value == "pi":
                return Const(math.pi)
            m = re.fullmatch(r"x(\d+)", value)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.dimension:
                    raise VariableRangeError(index, self.dimension, _byte(self.text, pos))
                return Var(index)
            raise UnknownIdentifierError(value, _byte(self.text, pos))
        if kind == "op" and value == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {value!r}")


def parse_expr(text: str, dimension: int) -> Expr:
    """Parse ``text`` into an (unsimplified) expression tree over x1..x_dimension."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    return _Parser(text, dimension).parse()
