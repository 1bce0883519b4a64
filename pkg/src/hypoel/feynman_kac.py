"""Conditional Monte Carlo for u(t, x) = E[ int_t^T f(r, X_r) dr + G(X_T) | F_t ].

Conditioning on F_t freezes the W-history on [0, t] (a ``Scenario``); the
estimator then averages over fresh, independent (B, W) continuations on [t, T].
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import json
import math
import os

import numpy as np

from .problem import BSPDEProblem, as_point
from .sde import NoiseGrid, simulate_path, uniform_mesh
from .symbolic import is_zero
from .symbolic.expr import Expr, evaluate_on

CHUNK = 1 << 13


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HYPOEL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    variance: float = 0.0

    def z(self, reference: float) -> float:
        diff = abs(self.mean - reference)
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr


def _terminal(problem: BSPDEProblem, X_T: np.ndarray) -> np.ndarray:
    G = problem.G
    if isinstance(G, Expr):
        return np.asarray(evaluate_on(G, [X_T[j] for j in range(problem.d)], problem.T),
                          dtype=float)
    # GridField terminal data: periodic trigonometric interpolant
    return G.at(X_T.T)


def _running(problem: BSPDEProblem, path) -> np.ndarray | float:
    """Trapezoidal quadrature of int f(r, X_r) dr along each path."""
    if is_zero(problem.f):
        return 0.0
    vals = np.stack([
        np.asarray(evaluate_on(problem.f, [path.values[k, j] for j in range(problem.d)],
                               path.times[k]), dtype=float) * np.ones(path.values.shape[2])
        for k in range(path.times.size)])
    dt = np.diff(path.times)[:, None]
    return (0.5 * (vals[1:] + vals[:-1]) * dt).sum(axis=0)


def sample_payoffs(problem: BSPDEProblem, t: float, x, n: int, seed: int, substream: int,
                   steps: int, scenario=None, model=None) -> np.ndarray:
    """One batch of path functionals int_t^T f dr + G(X_T)."""
    if model is not None:
        noise, drift, state = model.continuation(scenario, steps, n, seed, substream)
        path = simulate_path(problem, t, x, noise, drift=drift)
        return model.terminal(path.terminal, state) + _running(problem, path)
    mesh = uniform_mesh(t, problem.T, steps)
    noise = NoiseGrid.generate(mesh, problem.d1, n, seed, substream)
    path = simulate_path(problem, t, x, noise)
    return _terminal(problem, path.terminal) + _running(problem, path)


def _combine(stats):
    """Merge (n, mean, M2) triples in the given order (Chan et al.)."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def estimate_u(problem: BSPDEProblem, t: float, x, n_samples: int, seed: int,
               steps: int = 100, scenario=None, model=None) -> Estimate:
    """Sample mean of the Feynman-Kac functional from (t, x).

    Samples are split into fixed chunks, chunk i using substream i, and merged in
    chunk order, so results do not depend on the thread count.
    """
    if t >= problem.T:
        raise ValueError(f"t={t} must be smaller than T={problem.T}")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    x = as_point(x, problem.d)
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)

    def run(i):
        vals = sample_payoffs(problem, t, x, sizes[i], seed, i, steps, scenario, model)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite payoff encountered")
        mean = float(vals.mean())
        return vals.size, mean, float(((vals - mean) ** 2).sum())

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            stats = list(pool.map(run, range(len(sizes))))
    else:
        stats = [run(i) for i in range(len(sizes))]
    n, mean, m2 = _combine(stats)
    var = m2 / (n - 1)
    return Estimate(mean=mean, stderr=math.sqrt(var / n), n_samples=n, seed=seed, variance=var)


# --------------------------------------------------------- cross-checks

@dataclass
class ProbeResult:
    t: float
    x: tuple
    mc_mean: float
    stderr: float
    reference: float
    passed: bool

    @property
    def z(self) -> float:
        d = abs(self.mc_mean - self.reference)
        return d / self.stderr if self.stderr > 0 else (0.0 if d == 0 else math.inf)


@dataclass
class CrossValidationReport:
    rows: list = field(default_factory=list)
    confidence_k: float = 3.0
    budget: float = 0.0

    @property
    def n_probes(self) -> int:
        return len(self.rows)

    @property
    def n_pass(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def pass_rate(self) -> float:
        return self.n_pass / self.n_probes if self.rows else 1.0

    @property
    def max_z(self) -> float:
        return max((r.z for r in self.rows), default=0.0)

    def summary(self) -> dict:
        return {"n_probes": self.n_probes, "n_pass": self.n_pass, "max_z": self.max_z}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = len(self.rows[0].x) if self.rows else 1
        w.writerow(["t"] + [f"x{j + 1}" for j in range(d)]
                   + ["mc_mean", "stderr", "reference", "pass"])
        for r in self.rows:
            w.writerow([repr(r.t)] + [repr(float(v)) for v in r.x]
                       + [repr(r.mc_mean), repr(r.stderr), repr(r.reference),
                          "true" if r.passed else "false"])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _reference_value(reference, t: float, x) -> float:
    if callable(reference):
        return float(reference(t, x))
    # SolutionLedger
    return float(reference.value_at(t, x))


def cross_validate(probes, estimator, reference, confidence_k: float = 3.0,
                   budget: float = 0.0) -> CrossValidationReport:
    """Pass a probe when |mc_mean - reference| <= k * stderr + budget.

    ``estimator(t, x)`` returns an :class:`Estimate` (or anything with mean and
    stderr); ``reference`` is a callable (t, x) -> value or a solution ledger
    with snapshots at every probe time.
    """
    if not callable(reference):
        times = getattr(reference, "times", None)
        for t, _ in probes:
            if times is None or not np.any(np.isclose(times, t, rtol=0, atol=1e-12)):
                raise ValueError(f"probe time {t} is not covered by the reference")
    report = CrossValidationReport(confidence_k=confidence_k, budget=budget)
    for t, x in probes:
        est = estimator(t, x)
        ref = _reference_value(reference, t, x)
        ok = abs(est.mean - ref) <= confidence_k * est.stderr + budget
        report.rows.append(ProbeResult(float(t), tuple(np.atleast_1d(np.asarray(x, float))),
                                       float(est.mean), float(est.stderr), ref, bool(ok)))
    return report
