"""Bracket generations and the pointwise spanning test."""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from typing import Sequence

import numpy as np

from .expr import evaluate_on
from .operators import DimensionMismatch, FirstOrderOperator, lie_bracket


@dataclass(frozen=True)
class Generation:
    level: int
    members: tuple  # of FirstOrderOperator, insertion-ordered

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def keys(self) -> set:
        return {m.canonical_key() for m in self.members}

    def coefficient_strings(self) -> list:
        return [m.coefficient_strings() for m in self.members]


def build_generations(fields: Sequence[FirstOrderOperator], n_max: int) -> list:
    """V_0 = fields, V_{n+1} = V_n plus [L_k, V] for V in V_n.

    Members are deduplicated up to sign after canonical simplification and
    zero operators are dropped.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one vector field")
    d = fields[0].dimension
    for F in fields:
        if F.dimension != d:
            raise DimensionMismatch("all vector fields must share one dimension")

    members: list = []
    seen: set = set()

    def add(op):
        if op.is_zero():
            return False
        key = op.canonical_key()
        if key in seen:
            return False
        seen.add(key)
        members.append(op)
        return True

    for F in fields:
        add(F)
    generations = [Generation(0, tuple(members))]
    frontier = list(members)
    for level in range(1, n_max + 1):
        new = []
        # brackets of the newest members are enough: older ones were bracketed already
        for L in fields:
            for V in frontier:
                op = lie_bracket(L, V)
                if add(op):
                    new.append(op)
        generations.append(Generation(level, tuple(members)))
        frontier = new
    return generations


@dataclass
class HormanderCertificate:
    n0: int
    eta: float
    generations: list
    tolerance: float
    singular_values: np.ndarray  # (n_points, d) at level n0, descending
    points: np.ndarray
    worst_point: list
    min_relative_sv: float

    def to_json(self) -> dict:
        return {
            "n0": self.n0,
            "eta": self.eta,
            "tolerance": self.tolerance,
            "generations": [g.coefficient_strings() for g in self.generations],
            "worst_point": [float(v) for v in self.worst_point],
            "min_relative_sv": float(self.min_relative_sv),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def __bool__(self):
        return True


@dataclass
class NotSatisfied:
    levels_checked: int
    worst_point: list
    rank_achieved: int
    min_relative_sv: float
    generations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "satisfied": False,
            "levels_checked": self.levels_checked,
            "worst_point": [float(v) for v in self.worst_point],
            "rank_achieved": self.rank_achieved,
            "min_relative_sv": float(self.min_relative_sv),
            "generations": [g.coefficient_strings() for g in self.generations],
        }

    def __bool__(self):
        return False


def eta_for(n0: int) -> float:
    return math.ldexp(1.0, -n0)


def coefficient_matrix(members, points: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Array (n_points, n_members, d) of coefficient vectors."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coords = [pts[:, j] for j in range(pts.shape[1])]
    out = np.empty((pts.shape[0], len(members), pts.shape[1]))
    for a, op in enumerate(members):
        for j, c in enumerate(op.coeffs):
            out[:, a, j] = evaluate_on(c, coords, t)
    return out


def _rank_test(members, points, tol, d):
    """(min relative sv, worst point index, rank at worst point, singular values)."""
    n = points.shape[0]
    if len(members) == 0:
        return 0.0, 0, 0, np.zeros((n, d))
    mats = coefficient_matrix(members, points)
    sv = np.linalg.svd(mats, compute_uv=False)  # (n, min(m, d)), descending
    full = np.zeros((n, d))
    full[:, :sv.shape[1]] = sv
    top = full[:, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(top > 0, full[:, d - 1] / np.where(top > 0, top, 1.0), 0.0)
    worst = int(np.argmin(rel))
    rank = int(np.sum(full[worst] > tol * max(full[worst, 0], np.finfo(float).tiny)))
    return float(rel[worst]), worst, rank, full


def check_hormander(fields: Sequence[FirstOrderOperator], sample_grid, tol: float = 1e-8,
                    n_max: int = 4):
    """Smallest level n0 whose generation spans R^d at every sample point.

    The span test at a point passes when the d-th singular value of the stacked
    coefficient vectors exceeds ``tol`` times the largest one.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    points = np.atleast_2d(np.asarray(sample_grid, dtype=float))
    if points.size == 0:
        raise ValueError("sample grid is empty")
    d = fields[0].dimension
    if points.shape[1] != d:
        raise DimensionMismatch(f"sample points have {points.shape[1]} coordinates, expected {d}")
    generations = build_generations(fields, n_max)
    last = None
    for gen in generations:
        rel, worst, rank, sv = _rank_test(gen.members, points, tol, d)
        last = (rel, worst, rank)
        if rel > tol:
            return HormanderCertificate(
                n0=gen.level, eta=eta_for(gen.level), generations=generations[:gen.level + 1],
                tolerance=tol, singular_values=sv, points=points,
                worst_point=list(points[worst]), min_relative_sv=rel)
    rel, worst, rank = last
    return NotSatisfied(levels_checked=n_max, worst_point=list(points[worst]),
                        rank_achieved=rank, min_relative_sv=rel, generations=generations)


def torus_sample_grid(d: int, n: int, period: float = 2 * math.pi) -> np.ndarray:
    """All points of the uniform n^d grid on [0, period)^d, shape (n^d, d)."""
    axis = np.arange(n) * (period / n)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
