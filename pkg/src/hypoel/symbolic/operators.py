"""First-order differential operators a^j(x) D_j and their Lie algebra."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .canonical import (
    diff_expr, from_poly, is_zero, leading_sign, p_add, p_diff, p_mul, p_scale,
    simplify, to_poly, P_ZERO,
)
from .expr import Expr, as_expr, to_string
from .parser import parse_expr


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FirstOrderOperator:
    """The operator sum_j coeffs[j] * D_{j+1}; coefficients stored canonically."""

    coeffs: tuple
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(simplify(as_expr(c)) for c in self.coeffs))

    @classmethod
    def from_strings(cls, coeffs: Sequence[str], label: str | None = None):
        d = len(coeffs)
        return cls(tuple(parse_expr(c, d) for c in coeffs), label)

    @classmethod
    def unit(cls, axis: int, dimension: int):
        """The coordinate derivative D_axis."""
        return cls(tuple(1 if j == axis - 1 else 0 for j in range(dimension)), f"D{axis}")

    @property
    def dimension(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.coeffs)

    def polys(self) -> tuple:
        return tuple(to_poly(c) for c in self.coeffs)

    def scaled(self, s) -> "FirstOrderOperator":
        return FirstOrderOperator(tuple(from_poly(p_scale(p, s)) for p in self.polys()), self.label)

    def __neg__(self):
        return self.scaled(-1)

    def __add__(self, other: "FirstOrderOperator"):
        _check_dims(self, other)
        return FirstOrderOperator(
            tuple(from_poly(p_add(a, b)) for a, b in zip(self.polys(), other.polys())))

    def __sub__(self, other):
        return self + (-other)

    def canonical_key(self) -> tuple:
        """Key identifying the operator up to an overall sign."""
        polys = self.polys()
        sign = 0
        for p in polys:
            sign = leading_sign(p)
            if sign:
                break
        if sign < 0:
            polys = tuple(p_scale(p, -1) for p in polys)
        return polys

    def coefficient_strings(self) -> list:
        return [to_string(c) for c in self.coeffs]

    def __str__(self):
        terms = []
        for j, c in enumerate(self.coeffs, start=1):
            if not is_zero(c):
                terms.append(f"({to_string(c)})*D{j}")
        return " + ".join(terms) if terms else "0"


def _check_dims(F, G):
    if F.dimension != G.dimension:
        raise DimensionMismatch(f"operators of dimension {F.dimension} and {G.dimension}")


def lie_bracket(F: FirstOrderOperator, G: FirstOrderOperator) -> FirstOrderOperator:
    """[F, G]^j = F^i D_i G^j - G^i D_i F^j."""
    _check_dims(F, G)
    d = F.dimension
    fp, gp = F.polys(), G.polys()
    out = []
    for j in range(d):
        acc = P_ZERO
        for i in range(d):
            if fp[i]:
                acc = p_add(acc, p_mul(fp[i], p_diff(gp[j], i + 1)))
            if gp[i]:
                acc = p_add(acc, p_scale(p_mul(gp[i], p_diff(fp[j], i + 1)), -1))
        out.append(from_poly(acc))
    label = None
    if F.label and G.label:
        label = f"[{F.label},{G.label}]"
    return FirstOrderOperator(tuple(out), label)


def adjoint_zeroth(F: FirstOrderOperator) -> Expr:
    """c_F = -sum_i D_i F^i, so that F = D_i(F^i .) + c_F."""
    acc = P_ZERO
    for i, p in enumerate(F.polys(), start=1):
        acc = p_add(acc, p_diff(p, i))
    return from_poly(p_scale(acc, -1))


def hormander_drift(b: Sequence, sigma: Sequence[Sequence], theta: Sequence[Sequence]) -> list:
    """b~^j = b^j - 1/2 (sigma^{ik} D_i sigma^{jk} + theta^{ik} D_i theta^{jk}).

    ``sigma`` and ``theta`` are d x d1 nested sequences (row j, column k).
    """
    d = len(b)
    for name, m in (("sigma", sigma), ("theta", theta)):
        if len(m) != d:
            raise DimensionMismatch(f"{name} has {len(m)} rows, expected {d}")
    d1 = len(sigma[0]) if d else 0
    for name, m in (("sigma", sigma), ("theta", theta)):
        if any(len(row) != d1 for row in m):
            raise DimensionMismatch(f"{name} rows must all have {d1} columns")
    sp = [[to_poly(as_expr(c)) for c in row] for row in sigma]
    tp = [[to_poly(as_expr(c)) for c in row] for row in theta]
    out = []
    for j in range(d):
        acc = P_ZERO
        for k in range(d1):
            for i in range(d):
                for m in (sp, tp):
                    if m[i][k] and m[j][k]:
                        acc = p_add(acc, p_mul(m[i][k], p_diff(m[j][k], i + 1)))
        bj = to_poly(as_expr(b[j]))
        out.append(from_poly(p_add(bj, p_scale(acc, Fraction(-1, 2)))))
    return out


def columns_as_operators(matrix: Sequence[Sequence], prefix: str = "L") -> list:
    """Operators L_k = matrix[j][k] D_j for each column k."""
    d = len(matrix)
    d1 = len(matrix[0]) if d else 0
    return [FirstOrderOperator(tuple(matrix[j][k] for j in range(d)), f"{prefix}{k + 1}")
            for k in range(d1)]


__all__ = [
    "DimensionMismatch", "FirstOrderOperator", "lie_bracket", "adjoint_zeroth",
    "hormander_drift", "columns_as_operators", "diff_expr",
]
