"""Expression trees for coefficient fields.

Nodes are immutable and hashable.  ``simplify`` maps any tree to a canonical
form (expanded sum of monomials with collected coefficients), so two
expressions are equal as functions exactly when their canonical trees are
equal -- within the polynomial-in-atoms identities the normal form captures.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math
from typing import Union

import numpy as np

Number = Union[Fraction, float]


class Expr:
    """Base class; concrete nodes are frozen dataclasses."""

    __slots__ = ()
    precedence = 100

    # operator sugar, handy in tests and for building brackets
    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        return Pow(self, int(n))

    def __str__(self):
        return to_string(self)

    def variables(self) -> set:
        out = set()
        for node in walk(self):
            if isinstance(node, Var):
                out.add(node.index)
        return out


@dataclass(frozen=True)
class Const(Expr):
    value: Number
    precedence = 100


@dataclass(frozen=True)
class Var(Expr):
    """Spatial coordinate x_index (1-based)."""

    index: int
    precedence = 100


@dataclass(frozen=True)
class Time(Expr):
    precedence = 100


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    precedence = 30


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr
    precedence = 100


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr
    precedence = 100


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr
    precedence = 100


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr
    precedence = 10


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr
    precedence = 10


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr
    precedence = 20


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr
    precedence = 20


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    precedence = 40


UNARY = {"sin": Sin, "cos": Cos, "exp": Exp}
ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def children(e: Expr) -> tuple:
    if isinstance(e, (Neg, Sin, Cos, Exp)):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def walk(e: Expr):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


# ---------------------------------------------------------------- printing

def _format_number(v: Number) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        den = v.denominator
        for p in (2, 5):
            while den % p == 0:
                den //= p
        if den == 1:
            # terminating decimal, exact
            s = format(v.numerator / v.denominator, ".17g")
            if Fraction(s) == v:
                return s
        return f"({v.numerator}/{v.denominator})"
    if v == math.pi:
        return "pi"
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return f"{int(v)}.0"
    return repr(float(v))


def to_string(e: Expr) -> str:
    """Render in the parser grammar; ``parse_expr(to_string(e))`` rebuilds ``e``."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Time):
        return "t"
    if isinstance(e, (Sin, Cos, Exp)):
        return f"{type(e).__name__.lower()}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if e.arg.precedence < Neg.precedence:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if e.base.precedence <= Pow.precedence:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    left = to_string(e.left)
    if e.left.precedence < e.precedence:
        left = f"({left})"
    right = to_string(e.right)
    # binary operators are left-associative
    if e.right.precedence <= e.precedence:
        right = f"({right})"
    return f"{left} {op} {right}"


# -------------------------------------------------------------- evaluation

def evaluate(e: Expr, x, t: float = 0.0):
    """Evaluate at points ``x`` (sequence of d coordinate arrays, broadcastable)."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        if e.index < 1 or e.index > len(x):
            raise IndexError(f"x{e.index} out of range for dimension {len(x)}")
        return x[e.index - 1]
    if isinstance(e, Time):
        return t
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, t)
    if isinstance(e, Sin):
        return np.sin(evaluate(e.arg, x, t))
    if isinstance(e, Cos):
        return np.cos(evaluate(e.arg, x, t))
    if isinstance(e, Exp):
        return np.exp(evaluate(e.arg, x, t))
    if isinstance(e, Pow):
        base = evaluate(e.base, x, t)
        if e.exponent < 0:
            return 1.0 / np.power(base, -e.exponent)
        return np.power(base, e.exponent)
    a = evaluate(e.left, x, t)
    b = evaluate(e.right, x, t)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    return a / b


def evaluate_on(e: Expr, x, t: float = 0.0) -> np.ndarray:
    """Like :func:`evaluate` but always returns an array of the broadcast shape."""
    shape = np.broadcast_shapes(*(np.shape(c) for c in x)) if len(x) else ()
    return np.broadcast_to(np.asarray(evaluate(e, x, t), dtype=float), shape)


def is_constant(e: Expr) -> bool:
    return not any(isinstance(n, (Var, Time)) for n in walk(e))
