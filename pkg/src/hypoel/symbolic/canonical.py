"""Canonical normal form and symbolic differentiation.

Every expression is normalised to a sum of monomials over *atoms*
(coordinates, t, sin/cos/exp of a canonical argument, reciprocals of
non-monomial sums).  Monomials carry integer powers (negative allowed),
coefficients are exact Fractions whenever the inputs were exact.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
import math

from .expr import (
    Add, Const, Cos, Div, Exp, Expr, Mul, Neg, Pow, Sin, Sub, Time, Var,
    ONE, ZERO,
)

# Atom keys are nested tuples; ``_order`` gives a total, deterministic order.
# ("x", i) | ("t",) | ("sin", poly) | ("cos", poly) | ("exp", poly) | ("inv", poly)
# A poly is a tuple of (monomial, coeff) sorted by monomial order; a monomial
# is a tuple of (atom, power) sorted by atom order.

_ABS_TOL = 1e-15


def _order(key) -> str:
    return repr(key)


def _clean(c):
    if isinstance(c, float) and abs(c) < _ABS_TOL:
        return 0
    return c


def _poly(terms: dict) -> tuple:
    items = [(m, c) for m, c in terms.items() if _clean(c) != 0]
    items.sort(key=lambda mc: _order(mc[0]))
    return tuple(items)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    powers = dict(a)
    for atom, p in b:
        powers[atom] = powers.get(atom, 0) + p
    out = [(atom, p) for atom, p in powers.items() if p != 0]
    out.sort(key=lambda ap: _order(ap[0]))
    return tuple(out)


def p_const(c) -> tuple:
    return _poly({(): c})


P_ZERO: tuple = ()
P_ONE = p_const(Fraction(1))


def p_add(a: tuple, b: tuple) -> tuple:
    terms = dict(a)
    for m, c in b:
        terms[m] = terms.get(m, 0) + c
    return _poly(terms)


def p_scale(a: tuple, s) -> tuple:
    return _poly({m: c * s for m, c in a})


def p_mul(a: tuple, b: tuple) -> tuple:
    terms: dict = {}
    for ma, ca in a:
        for mb, cb in b:
            m = _mono_mul(ma, mb)
            terms[m] = terms.get(m, 0) + ca * cb
    return _poly(terms)


def p_constant_value(a: tuple):
    """Return the value if ``a`` is constant, else None."""
    if not a:
        return Fraction(0)
    if len(a) == 1 and a[0][0] == ():
        return a[0][1]
    return None


def p_pow(a: tuple, n: int) -> tuple:
    if n == 0:
        return P_ONE
    if n < 0:
        return p_pow(p_reciprocal(a), -n)
    out = P_ONE
    base = a
    while n:
        if n & 1:
            out = p_mul(out, base)
        base = p_mul(base, base)
        n >>= 1
    return out


def p_reciprocal(a: tuple) -> tuple:
    cv = p_constant_value(a)
    if cv is not None:
        if cv == 0:
            raise ZeroDivisionError("division by the zero expression")
        return p_const(1 / cv if isinstance(cv, float) else Fraction(1) / cv)
    if len(a) == 1:
        mono, c = a[0]
        inv_c = 1 / c if isinstance(c, float) else Fraction(1) / c
        return _poly({tuple((atom, -p) for atom, p in mono): inv_c})
    # pull out the leading coefficient so that inv(k*s) and inv(s) share an atom
    lead = a[0][1]
    inv_lead = 1 / lead if isinstance(lead, float) else Fraction(1) / lead
    normed = p_scale(a, inv_lead)
    return _poly({((("inv", normed), 1),): inv_lead})


def _unary(kind: str, arg: tuple) -> tuple:
    cv = p_constant_value(arg)
    if cv is not None:
        fn = {"sin": math.sin, "cos": math.cos, "exp": math.exp}[kind]
        if cv == 0:
            return P_ZERO if kind == "sin" else P_ONE
        return p_const(fn(float(cv)))
    # parity: sin(-a) = -sin(a), cos(-a) = cos(a) -- keeps leading coeff positive
    lead = arg[0][1]
    if kind in ("sin", "cos") and lead < 0:
        arg = p_scale(arg, -1)
        atom = _poly({(((kind, arg), 1),): 1})
        return p_scale(atom, -1) if kind == "sin" else atom
    return _poly({(((kind, arg), 1),): Fraction(1)})


@lru_cache(maxsize=65536)
def to_poly(e: Expr) -> tuple:
    if isinstance(e, Const):
        return p_const(e.value)
    if isinstance(e, Var):
        return _poly({((("x", e.index), 1),): Fraction(1)})
    if isinstance(e, Time):
        return _poly({((("t",), 1),): Fraction(1)})
    if isinstance(e, Neg):
        return p_scale(to_poly(e.arg), -1)
    if isinstance(e, Add):
        return p_add(to_poly(e.left), to_poly(e.right))
    if isinstance(e, Sub):
        return p_add(to_poly(e.left), p_scale(to_poly(e.right), -1))
    if isinstance(e, Mul):
        return p_mul(to_poly(e.left), to_poly(e.right))
    if isinstance(e, Div):
        return p_mul(to_poly(e.left), p_reciprocal(to_poly(e.right)))
    if isinstance(e, Pow):
        return p_pow(to_poly(e.base), e.exponent)
    if isinstance(e, (Sin, Cos, Exp)):
        return _unary(type(e).__name__.lower(), to_poly(e.arg))
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------- back to trees

def _num(c) -> Expr:
    return Const(c)


def _atom_expr(atom) -> Expr:
    kind = atom[0]
    if kind == "x":
        return Var(atom[1])
    if kind == "t":
        return Time()
    if kind == "inv":
        return Div(ONE, from_poly(atom[1]))
    cls = {"sin": Sin, "cos": Cos, "exp": Exp}[kind]
    return cls(from_poly(atom[1]))


def _term_expr(mono: tuple, c) -> Expr:
    """Term with nonnegative coefficient ``c``, as a left-nested product."""
    out = None if (c == 1 and mono) else _num(c)
    for atom, p in mono:
        base = _atom_expr(atom)
        factor = base if p == 1 else Pow(base, p)
        out = factor if out is None else Mul(out, factor)
    return out


@lru_cache(maxsize=65536)
def from_poly(p: tuple) -> Expr:
    if not p:
        return ZERO
    out = None
    for mono, c in p:
        neg = c < 0
        term = _term_expr(mono, -c if neg else c)
        if out is None:
            out = Neg(term) if neg else term
        else:
            out = Sub(out, term) if neg else Add(out, term)
    return out


def simplify(e: Expr) -> Expr:
    """Canonical form: constant folding, flattened sorted sums and products."""
    return from_poly(to_poly(e))


def is_zero(e: Expr) -> bool:
    return to_poly(e) == P_ZERO


def equivalent(a: Expr, b: Expr) -> bool:
    return to_poly(a) == to_poly(b)


# -------------------------------------------------------- differentiation

def _d_atom(atom, axis: int) -> tuple:
    kind = atom[0]
    if kind == "x":
        return P_ONE if atom[1] == axis else P_ZERO
    if kind == "t":
        return P_ZERO
    inner = atom[1]
    dinner = p_diff(inner, axis)
    if not dinner:
        return P_ZERO
    if kind == "sin":
        return p_mul(_unary("cos", inner), dinner)
    if kind == "cos":
        return p_scale(p_mul(_unary("sin", inner), dinner), -1)
    if kind == "exp":
        return p_mul(_unary("exp", inner), dinner)
    # d(1/s) = -s' / s^2
    inv = _poly({(((kind, inner), 1),): Fraction(1)})
    return p_scale(p_mul(p_mul(inv, inv), dinner), -1)


@lru_cache(maxsize=65536)
def p_diff(p: tuple, axis: int) -> tuple:
    out = P_ZERO
    for mono, c in p:
        for i, (atom, power) in enumerate(mono):
            da = _d_atom(atom, axis)
            if not da:
                continue
            rest = mono[:i] + ((atom, power - 1),) + mono[i + 1:]
            rest = tuple((a, q) for a, q in rest if q != 0)
            term = p_mul(_poly({rest: c * power}), da)
            out = p_add(out, term)
    return out


def diff_expr(e: Expr, axis: int, dimension: int | None = None) -> Expr:
    """Partial derivative along x_axis, canonically simplified."""
    if axis < 1 or (dimension is not None and axis > dimension):
        raise ValueError(f"axis {axis} out of range 1..{dimension}")
    return from_poly(p_diff(to_poly(e), axis))


def leading_sign(p: tuple) -> int:
    """Sign of the first nonzero coefficient in canonical order (0 for zero)."""
    if not p:
        return 0
    return 1 if p[0][1] > 0 else -1
