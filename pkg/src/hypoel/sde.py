"""Euler-Maruyama simulation of dX = b dt + sigma dB + theta dW, Brownian bridges,
and the closed-form random solution used as an oracle for the non-Markovian case.

Paths are simulated in batches: arrays carry the sample index last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .problem import BSPDEProblem, as_point
from .symbolic import diff_expr, is_zero, parse_expr
from .symbolic.expr import Expr, evaluate_on


def make_rng(seed: int, substream: int = 0) -> np.random.Generator:
    """Independent generator per (seed, substream)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(substream,))))


def uniform_mesh(t0: float, t1: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("mesh needs at least one step")
    mesh = t0 + (t1 - t0) * np.arange(steps + 1) / steps
    mesh[-1] = t1
    return mesh


@dataclass
class NoiseGrid:
    times: np.ndarray
    dW: np.ndarray  # (K, d1, M)
    dB: np.ndarray  # (K, d1, M)
    seed: int
    substream: int

    @classmethod
    def generate(cls, times, d1: int, n_paths: int, seed: int, substream: int = 0) -> "NoiseGrid":
        times = np.asarray(times, dtype=float)
        rng = make_rng(seed, substream)
        dt = np.diff(times)
        sq = np.sqrt(dt)[:, None, None]
        dW = rng.standard_normal((dt.size, d1, n_paths)) * sq
        dB = rng.standard_normal((dt.size, d1, n_paths)) * sq
        return cls(times, dW, dB, seed, substream)

    @property
    def n_paths(self) -> int:
        return self.dW.shape[2]

    @property
    def steps(self) -> int:
        return self.dW.shape[0]

    def W(self) -> np.ndarray:
        """Cumulative W on the mesh, starting from 0: (K+1, d1, M)."""
        out = np.zeros((self.steps + 1,) + self.dW.shape[1:])
        np.cumsum(self.dW, axis=0, out=out[1:])
        return out


@dataclass
class Path:
    s: float
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (K+1, d, M)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]


def _coeff(expr: Expr, X, t):
    if is_zero(expr):
        return None
    return evaluate_on(expr, [X[j] for j in range(X.shape[0])], t)


def simulate_path(problem: BSPDEProblem, s: float, x, noise: NoiseGrid,
                  drift: np.ndarray | None = None) -> Path:
    """Euler-Maruyama from (s, x) over the part of the noise mesh in [s, T].

    Coefficients are frozen at the left end of every step.  ``drift`` adds a
    precomputed random drift (K, d, M) -- e.g. one driven by an auxiliary state
    co-simulated on the same W stream.
    """
    d, d1 = problem.d, problem.d1
    times = noise.times
    hits = np.flatnonzero(np.isclose(times, s, rtol=0, atol=1e-12 * max(1.0, abs(s))))
    if hits.size == 0:
        raise ValueError(f"start time {s} is not on the noise mesh")
    k0 = int(hits[0])
    M = noise.n_paths
    x = np.asarray(x, dtype=float)
    X = np.empty((times.size - k0, d, M))
    X[0] = x.reshape(d, -1) if x.ndim > 1 else as_point(x, d)[:, None]
    for k in range(k0, times.size - 1):
        t = times[k]
        dt = times[k + 1] - t
        cur = X[k - k0]
        nxt = cur.copy()
        for j in range(d):
            bj = _coeff(problem.b[j], cur, t)
            if bj is not None:
                nxt[j] += bj * dt
            for kk in range(d1):
                sjk = _coeff(problem.sigma[j][kk], cur, t)
                if sjk is not None:
                    nxt[j] += sjk * noise.dB[k, kk]
                tjk = _coeff(problem.theta[j][kk], cur, t)
                if tjk is not None:
                    nxt[j] += tjk * noise.dW[k, kk]
        if drift is not None:
            nxt += drift[k] * dt
        X[k - k0 + 1] = nxt
    return Path(s=s, x=x, times=times[k0:], values=X)


def brownian_bridge(start, endpoint: float, mesh, seed: int, n_paths: int = 1,
                    substream: int = 0) -> np.ndarray:
    """Exact conditional Gaussian sampling of a bridge pinned at ``endpoint``.

    Given H(t_k), H(t_{k+1}) is normal with mean H(t_k) + (e - H(t_k)) dt/(T - t_k)
    and variance dt (T - t_{k+1}) / (T - t_k).  Returns (K+1, n_paths); the last
    row equals ``endpoint`` bit for bit.
    """
    mesh = np.asarray(mesh, dtype=float)
    if mesh.size < 2:
        raise ValueError("bridge mesh needs at least one step")
    T = mesh[-1]
    rng = make_rng(seed, substream)
    z = rng.standard_normal((mesh.size - 1, n_paths))
    H = np.empty((mesh.size, n_paths))
    H[0] = start
    for k in range(mesh.size - 2):
        dt = mesh[k + 1] - mesh[k]
        rem = T - mesh[k]
        mean = H[k] + (endpoint - H[k]) * dt / rem
        var = dt * (T - mesh[k + 1]) / rem
        H[k + 1] = mean + math.sqrt(var) * z[k]
    H[-1] = endpoint
    return H


def bridge_drift(H: np.ndarray, mesh, endpoint: float = 0.0) -> np.ndarray:
    """b(t_k) = (endpoint - H_k) / (T - t_k) on the first K nodes."""
    mesh = np.asarray(mesh, dtype=float)
    T = mesh[-1]
    return (endpoint - H[:-1]) / (T - mesh[:-1])[:, None]


# --------------------------------------------------------------- example

@dataclass
class Scenario:
    """A frozen W-history on [0, t] and the states derived from it."""

    t: float
    times: np.ndarray
    W: np.ndarray  # (k+1,) one-dimensional W on times
    H: np.ndarray  # auxiliary state on the same mesh
    alpha: float = 0.0
    seed: int = 0
    states: dict = field(default_factory=dict)

    @property
    def W_t(self) -> float:
        return float(self.W[-1])

    @property
    def H_t(self) -> float:
        return float(self.H[-1])

    @property
    def M_t(self) -> float:
        return math.exp(self.alpha * self.W_t - 0.5 * self.alpha ** 2 * self.t)


@dataclass
class Example12:
    """d = d1 = 1, sigma = 0, theta = 1, f = 0, G(x) = U(x - H_T) M_T.

    ``bridge=False``: H = eta0 + W (zero auxiliary drift), the case with a random
    terminal value.  ``bridge=True``: H is the Brownian bridge from eta0 to 0,
    X inherits the random drift b(t) = -H_t/(T - t), and alpha should be 0.
    """

    U: Expr
    alpha: float = 0.0
    T: float = 1.0
    eta0: float = 0.0
    bridge: bool = False

    @classmethod
    def from_string(cls, U: str, **kw) -> "Example12":
        return cls(parse_expr(U, 1), **kw)

    @property
    def dU(self) -> Expr:
        return diff_expr(self.U, 1)

    def problem(self) -> BSPDEProblem:
        return BSPDEProblem(1, 1, theta=[[1]], T=self.T, markovian=False)

    def history(self, t: float, steps: int, seed: int, substream: int = 0,
                total_steps: int | None = None) -> Scenario:
        """Freeze W (and H) on [0, t] using ``steps`` steps."""
        mesh = uniform_mesh(0.0, t, steps) if t > 0 else np.array([0.0])
        if self.bridge:
            total = total_steps or steps
            full = uniform_mesh(0.0, self.T, total)
            k = int(round(t / self.T * total))
            if not math.isclose(full[k], t, abs_tol=1e-12):
                raise ValueError("t must lie on the bridge mesh")
            H = brownian_bridge(self.eta0, 0.0, full, seed, 1, substream)[:, 0]
            b = bridge_drift(H[:, None], full)[:, 0]
            dW = np.diff(H) - b * np.diff(full)
            W = np.concatenate([[0.0], np.cumsum(dW)])
            return Scenario(t, full[:k + 1], W[:k + 1], H[:k + 1], self.alpha, seed)
        if t == 0:
            W = np.array([0.0])
        else:
            rng = make_rng(seed, substream)
            dW = rng.standard_normal(steps) * np.sqrt(np.diff(mesh))
            W = np.concatenate([[0.0], np.cumsum(dW)])
        return Scenario(t, mesh, W, self.eta0 + W, self.alpha, seed)

    def continuation(self, scenario: Scenario, steps: int, n_paths: int, seed: int,
                     substream: int = 0):
        """Fresh (B, W) on [t, T]: returns (noise, random drift or None, state at T)."""
        mesh = uniform_mesh(scenario.t, self.T, steps)
        noise = NoiseGrid.generate(mesh, 1, n_paths, seed, substream)
        if self.bridge:
            H = brownian_bridge(scenario.H_t, 0.0, mesh, seed, n_paths, substream + (1 << 20))
            b = bridge_drift(H, mesh)
            noise.dW[:, 0, :] = np.diff(H, axis=0) - b * np.diff(mesh)[:, None]
            drift = b[:, None, :]
            H_T = H[-1]
        else:
            drift = None
            H_T = scenario.H_t + noise.dW[:, 0, :].sum(axis=0)
        W_T = scenario.W_t + noise.dW[:, 0, :].sum(axis=0)
        M_T = np.exp(self.alpha * W_T - 0.5 * self.alpha ** 2 * self.T)
        return noise, drift, {"W": W_T, "H": H_T, "M": M_T}

    def terminal(self, X_T: np.ndarray, state: dict) -> np.ndarray:
        return evaluate_on(self.U, [X_T[0] - state["H"]]) * state["M"]


@dataclass(frozen=True)
class ClosedForm:
    u: float | np.ndarray
    v: float | np.ndarray


def example12_oracle(scenario: Scenario, alpha: float, U: Expr, t: float, x) -> ClosedForm:
    """u = U(x - H_t) M_t and v = alpha U(x - H_t) M_t - U'(x - H_t) M_t."""
    if not math.isclose(t, scenario.t, abs_tol=1e-12):
        raise ValueError("scenario is frozen at a different time")
    M = math.exp(alpha * scenario.W_t - 0.5 * alpha ** 2 * t)
    y = np.asarray(x, dtype=float) - scenario.H_t
    Uy = evaluate_on(U, [y])
    dUy = evaluate_on(diff_expr(U, 1), [y])
    return ClosedForm(u=Uy * M, v=(alpha * Uy - dUy) * M)
