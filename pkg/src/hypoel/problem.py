"""Problem declaration shared by the solver, the simulator and the Monte Carlo estimator."""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .symbolic import FirstOrderOperator, hormander_drift, is_zero, parse_expr, simplify
from .symbolic.expr import Expr, ZERO, as_expr, evaluate_on


class ProblemShapeError(ValueError):
    pass


def _matrix(rows, d, d1, name):
    if rows is None:
        return tuple(tuple(ZERO for _ in range(d1)) for _ in range(d))
    if len(rows) != d or any(len(r) != d1 for r in rows):
        raise ProblemShapeError(f"{name} must be {d} x {d1}")
    return tuple(tuple(as_expr(c) for c in r) for r in rows)


def _vector(vals, n, name):
    if vals is None:
        return tuple(ZERO for _ in range(n))
    if len(vals) != n:
        raise ProblemShapeError(f"{name} must have length {n}")
    return tuple(as_expr(c) for c in vals)


@dataclass
class BSPDEProblem:
    """Coefficients and data of

        -du = [1/2 (L_k^2 + M_k^2) u + M_k v^k + b~.Du + c u + gamma.v + f + L_k g^k
               + delta Lap u] dt - v dW,   u(T) = G,

    with L_k = sigma^{jk} D_j and M_k = theta^{jk} D_j.  ``b`` is the drift of the
    Ito process; the solver uses its Hormander-form transform b~.
    """

    d: int
    d1: int
    sigma: tuple = None
    theta: tuple = None
    b: tuple = None
    c: Expr = None
    gamma: tuple = None
    f: Expr = None
    g: tuple = None
    G: object = None  # Expr or GridField
    T: float = 1.0
    markovian: bool = True
    delta: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        d, d1 = self.d, self.d1
        if d < 1 or d1 < 1:
            raise ProblemShapeError("d and d1 must be positive")
        self.sigma = _matrix(self.sigma, d, d1, "sigma")
        self.theta = _matrix(self.theta, d, d1, "theta")
        self.b = _vector(self.b, d, "b")
        self.gamma = _vector(self.gamma, d1, "gamma")
        self.g = _vector(self.g, d1, "g")
        self.c = as_expr(self.c) if self.c is not None else ZERO
        self.f = as_expr(self.f) if self.f is not None else ZERO
        if self.G is None:
            self.G = ZERO
        elif not isinstance(self.G, Expr) and not hasattr(self.G, "grid"):
            self.G = as_expr(self.G)
        if self.T <= 0:
            raise ProblemShapeError("T must be positive")
        if self.delta < 0:
            raise ProblemShapeError("delta must be >= 0")

    @classmethod
    def from_strings(cls, d: int, d1: int, *, sigma=None, theta=None, b=None, c=None,
                     gamma=None, f=None, g=None, G=None, **kw) -> "BSPDEProblem":
        p = lambda s: parse_expr(str(s), d)  # noqa: E731
        mat = lambda m: None if m is None else [[p(x) for x in row] for row in m]  # noqa: E731
        vec = lambda v: None if v is None else [p(x) for x in v]  # noqa: E731
        return cls(d, d1, sigma=mat(sigma), theta=mat(theta), b=vec(b),
                   c=None if c is None else p(c), gamma=vec(gamma),
                   f=None if f is None else p(f), g=vec(g),
                   G=None if G is None else (G if hasattr(G, "grid") else p(G)), **kw)

    def L_ops(self) -> list:
        return [FirstOrderOperator(tuple(self.sigma[j][k] for j in range(self.d)), f"L{k + 1}")
                for k in range(self.d1)]

    def M_ops(self) -> list:
        return [FirstOrderOperator(tuple(self.theta[j][k] for j in range(self.d)), f"M{k + 1}")
                for k in range(self.d1)]

    def hormander_drift(self) -> list:
        return hormander_drift(self.b, self.sigma, self.theta)

    def max_sigma_sq(self, coords, t: float = 0.0) -> float:
        """max_x sum_{j,k} (sigma^{jk}^2 + theta^{jk}^2) over the given nodes."""
        total = 0.0
        for m in (self.sigma, self.theta):
            for row in m:
                for c in row:
                    if not is_zero(c):
                        total = total + evaluate_on(c, coords, t) ** 2
        return float(np.max(total)) if np.ndim(total) else float(total)

    def is_trivial_generator(self) -> bool:
        exprs = [c for m in (self.sigma, self.theta) for row in m for c in row]
        exprs += list(self.b) + [self.c, self.f] + list(self.g)
        return all(is_zero(simplify(e)) for e in exprs) and self.delta == 0

    def with_data(self, **changes) -> "BSPDEProblem":
        kw = dict(d=self.d, d1=self.d1, sigma=self.sigma, theta=self.theta, b=self.b, c=self.c,
                  gamma=self.gamma, f=self.f, g=self.g, G=self.G, T=self.T,
                  markovian=self.markovian, delta=self.delta, extra=dict(self.extra))
        kw.update(changes)
        return BSPDEProblem(**kw)


def as_point(x, d: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape[0] != d:
        raise ProblemShapeError(f"point must have {d} coordinates")
    return arr


__all__ = ["BSPDEProblem", "ProblemShapeError", "as_point"]
