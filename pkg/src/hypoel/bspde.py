"""Backward method-of-lines solver for the Markovian reduction (v = 0), viscosity
continuation, weak residuals and the energy / smoothing ledgers.

Time runs backwards: with tau = T - t the semidiscrete system is
du/dtau = A(t) u + F(t), integrated by classical RK4 from u(tau=0) = G.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import math
from typing import Callable, Sequence

import numpy as np

from .feynman_kac import thread_count
from .problem import BSPDEProblem
from .sobolev import (
    CoefficientCache, GridField, TorusGrid, apply_operator, h_norm, spectral_tail_mass,
)
from .symbolic import FirstOrderOperator, HormanderCertificate, is_zero
from .symbolic.expr import Expr, evaluate_on

C_STAB = 0.25
BLOWUP = 1e6


class StabilityError(RuntimeError):
    pass


class NotMarkovianError(ValueError):
    pass


def terminal_field(problem: BSPDEProblem, grid: TorusGrid) -> GridField:
    G = problem.G
    if isinstance(G, Expr):
        return GridField.from_expr(grid, G, problem.T)
    if isinstance(G, GridField):
        if G.grid != grid:
            raise ValueError("terminal field lives on a different grid")
        return G
    if callable(G):
        out = G(grid)
        if out.grid != grid:
            raise ValueError("terminal builder returned a field on the wrong grid")
        return out
    raise TypeError(f"unsupported terminal data {type(G).__name__}")


def stable_dt(problem: BSPDEProblem, grid: TorusGrid, c_stab: float = C_STAB) -> float:
    """Largest step allowed by dt <= c_stab dx^2 / (max |sigma|^2 + |theta|^2 + 2 delta)."""
    s2 = problem.max_sigma_sq(grid.coords) + 2 * problem.delta
    if s2 == 0:
        return math.inf
    return c_stab * grid.dx ** 2 / s2


class Generator:
    """Right-hand side A(t)u + F(t) of the backward system on one grid."""

    def __init__(self, problem: BSPDEProblem, grid: TorusGrid, include_viscosity: bool = True):
        self.problem = problem
        self.grid = grid
        self.cache = CoefficientCache(grid)
        self.L = [op for op in problem.L_ops() if not op.is_zero()]
        self.M = [op for op in problem.M_ops() if not op.is_zero()]
        self.L_all = problem.L_ops()
        self.drift = FirstOrderOperator(tuple(problem.hormander_drift()))
        self.include_viscosity = include_viscosity and problem.delta > 0
        self.has_source = not is_zero(problem.f) or any(not is_zero(g) for g in problem.g)

    def source(self, t: float) -> np.ndarray | None:
        if not self.has_source:
            return None
        p = self.problem
        out = np.zeros(self.grid.shape)
        if not is_zero(p.f):
            out = out + self.cache(p.f, t)
        for L, g in zip(self.L_all, p.g):
            if is_zero(g) or L.is_zero():
                continue
            gf = GridField(self.grid, self.cache(g, t))
            out = out + apply_operator(L, gf, t, self.cache).values
        return out

    def homogeneous(self, u: GridField, t: float) -> np.ndarray:
        """A(t)u without the source."""
        p = self.problem
        out = np.zeros(self.grid.shape)
        for op in self.L + self.M:
            out += 0.5 * apply_operator(op, apply_operator(op, u, t, self.cache), t, self.cache).values
        if not self.drift.is_zero():
            out += apply_operator(self.drift, u, t, self.cache).values
        if not is_zero(p.c):
            out += self.cache(p.c, t) * u.values
        if self.include_viscosity:
            out += p.delta * np.fft.ifftn(-self.grid.xi_sq * u.spectrum).real
        return out

    def __call__(self, u: GridField, t: float) -> np.ndarray:
        out = self.homogeneous(u, t)
        src = self.source(t)
        return out if src is None else out + src


@dataclass
class SolutionLedger:
    grid: TorusGrid
    T: float
    dt: float
    times: np.ndarray  # snapshot times, ascending
    snapshots: list  # GridField per snapshot time
    step_times: np.ndarray  # every recorded step time, ascending
    norms: dict = field(default_factory=dict)  # (kind, order) -> squared norms at step_times
    orders: tuple = (0.0,)
    delta: float = 0.0

    def snapshot(self, t: float) -> GridField:
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-9 * max(1.0, self.T)))
        if idx.size == 0:
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[int(idx[0])]

    def value_at(self, t: float, x) -> float:
        return float(self.snapshot(t).at(np.atleast_2d(x))[0])

    def norm(self, kind: str, order: float) -> np.ndarray:
        """sqrt of the recorded squared norms ``kind`` at ``step_times``."""
        return np.sqrt(self.norms[(kind, float(order))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "kind", "order", "value"])
        for (kind, order), vals in sorted(self.norms.items()):
            for t, v in zip(self.step_times, vals):
                w.writerow([repr(float(t)), kind, repr(order), repr(float(math.sqrt(v)))])
        return buf.getvalue()


def _align_steps(T: float, span: float, dt: float, snapshot_times: Sequence[float]) -> int:
    K = max(1, math.ceil(span / dt - 1e-12))
    for cand in range(K, 4 * K + 1):
        if all(abs((T - s) / span * cand - round((T - s) / span * cand)) < 1e-9 for s in snapshot_times):
            return cand
    return K


def _record(ledger_norms, gen: Generator, u: GridField, t: float, orders, problem):
    grid = gen.grid
    derivs = None
    for m in orders:
        m = float(m)
        ledger_norms.setdefault(("u", m), []).append(h_norm(u, m) ** 2)
        ledger_norms.setdefault(("Lu", m), []).append(
            sum(h_norm(apply_operator(L, u, t, gen.cache), m) ** 2 for L in gen.L))
        if derivs is None:
            spec = u.spectrum
            derivs = [GridField(grid, np.fft.ifftn(spec * s).real) for s in grid.derivative_symbols]
        ledger_norms.setdefault(("Du", m), []).append(sum(h_norm(g, m) ** 2 for g in derivs))
        theta_sq = 0.0
        for k in range(problem.d1):
            acc = np.zeros(grid.shape)
            nonzero = False
            for i in range(problem.d):
                th = problem.theta[i][k]
                if not is_zero(th):
                    acc = acc + derivs[i].values * gen.cache(th, t)
                    nonzero = True
            if nonzero:
                theta_sq += h_norm(GridField(grid, acc), m) ** 2
        ledger_norms.setdefault(("Du_theta", m), []).append(theta_sq)
        fsq = 0.0
        if not is_zero(problem.f):
            fsq = h_norm(GridField(grid, gen.cache(problem.f, t)), m) ** 2
        ledger_norms.setdefault(("f", m), []).append(fsq)
        gsq = sum(h_norm(GridField(grid, gen.cache(g, t)), m) ** 2
                  for g in problem.g if not is_zero(g))
        ledger_norms.setdefault(("g", m), []).append(gsq)


def solve_backward(problem: BSPDEProblem, grid: TorusGrid, dt: float | None = None,
                   snapshot_times: Sequence[float] | None = None, norm_orders=(0.0,),
                   record_norms: bool = True, exp_viscosity: bool = False,
                   c_stab: float = C_STAB, enforce_rule: bool = True,
                   t_stop: float = 0.0) -> SolutionLedger:
    """March u from u(T) = G down to ``t_stop`` (default 0) with RK4 in tau = T - t.

    ``dt`` defaults to the stability rule; an explicit ``dt`` above the rule is
    rejected unless ``enforce_rule`` is False, in which case only blow-up
    (norm growth beyond 1e6 times the data scale) stops the run.  With
    ``exp_viscosity`` the delta*Laplacian term is integrated exactly through an
    integrating factor (Lawson RK4).
    """
    if not problem.markovian:
        raise NotMarkovianError("solve_backward handles deterministic (Markovian) problems only")
    if problem.d != grid.d:
        raise ValueError(f"problem dimension {problem.d} != grid dimension {grid.d}")
    T = problem.T
    # with the integrating factor the viscosity no longer constrains the step
    limit = stable_dt(problem.with_data(delta=0.0) if exp_viscosity else problem, grid, c_stab)
    if dt is None:
        dt = min(limit, T / 16)
    elif enforce_rule and dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.3g} exceeds the stability rule bound {limit:.3g}")
    if not 0 <= t_stop < T:
        raise ValueError("t_stop must lie in [0, T)")
    span = T - t_stop
    extra = () if snapshot_times is None else snapshot_times
    snaps = sorted({float(T), float(t_stop), *(float(s) for s in extra)})
    for s in snaps:
        if not t_stop <= s <= T:
            raise ValueError(f"snapshot time {s} outside [{t_stop}, T]")
    K = _align_steps(T, span, dt, snaps)
    h = span / K
    snap_index = {int(round((T - s) / span * K)): s for s in snaps}

    gen = Generator(problem, grid, include_viscosity=not exp_viscosity)
    G = terminal_field(problem, grid)
    u = GridField(grid, G.values.copy())
    scale = max(G.l2(), 1e-300)
    src_T = gen.source(T)
    if src_T is not None:
        scale = max(scale, T * GridField(grid, src_T).l2())

    if exp_viscosity and problem.delta > 0:
        E_half = np.exp(-problem.delta * grid.xi_sq * h / 2)
        E_full = E_half * E_half
    else:
        E_half = E_full = None

    def E(arr, which):
        if E_half is None:
            return arr
        m = E_half if which == "half" else E_full
        return np.fft.ifftn(np.fft.fftn(arr) * m).real

    snap_list: dict = {}
    norms: dict = {}
    rec_times = []
    orders = tuple(float(m) for m in norm_orders)

    if 0 in snap_index:
        snap_list[T] = GridField(grid, G.values.copy())
    if record_norms:
        _record(norms, gen, u, T, orders, problem)
        rec_times.append(T)

    for n in range(K):
        t = T - n * h
        un = u.values
        k1 = gen(u, t)
        a = E(un + 0.5 * h * k1, "half")
        k2 = gen(GridField(grid, a), t - 0.5 * h)
        b = E(un, "half") + 0.5 * h * k2
        k3 = gen(GridField(grid, b), t - 0.5 * h)
        c = E(un, "full") + h * E(k3, "half")
        k4 = gen(GridField(grid, c), t - h)
        new = E(un, "full") + (h / 6.0) * (E(k1, "full") + 2.0 * E(k2 + k3, "half") + k4)
        u = GridField(grid, new)
        t_new = T - (n + 1) * h if n + 1 < K else float(t_stop)
        nrm = u.l2()
        if not math.isfinite(nrm) or nrm > BLOWUP * scale:
            raise StabilityError(f"solution norm {nrm:.3g} blew up at t={t_new:.4g}")
        if n + 1 in snap_index:
            snap_list[snap_index[n + 1]] = GridField(grid, new.copy())
        if record_norms:
            _record(norms, gen, u, t_new, orders, problem)
            rec_times.append(t_new)

    times = np.array(sorted(snap_list))
    ledger = SolutionLedger(
        grid=grid, T=T, dt=h, times=times, snapshots=[snap_list[s] for s in sorted(snap_list)],
        step_times=np.array(rec_times[::-1]),
        norms={k: np.array(v[::-1]) for k, v in norms.items()},
        orders=orders, delta=problem.delta)
    return ledger


def viscosity_continuation(problem: BSPDEProblem, grid: TorusGrid, ladder: Sequence[float],
                           dt: float | None = None, **kw) -> list:
    """One solve of the delta-regularised equation per rung, delta strictly decreasing."""
    ladder = [float(x) for x in ladder]
    if not ladder:
        raise ValueError("empty viscosity ladder")
    if any(x < 0 for x in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly decreasing and nonnegative")
    if dt is None:
        dt = min(stable_dt(problem.with_data(delta=ladder[0]), grid), problem.T / 16)

    def run(delta):
        return solve_backward(problem.with_data(delta=delta), grid, dt, **kw)

    workers = thread_count()
    if workers > 1 and len(ladder) > 1:
        with ThreadPoolExecutor(min(workers, len(ladder))) as pool:
            return list(pool.map(run, ladder))
    return [run(x) for x in ladder]


# ------------------------------------------------------------ residuals

@dataclass
class TestFunction:
    """zeta(s, x) = phi(s) psi(x)."""

    phi: Callable
    dphi: Callable
    psi: GridField
    label: str = ""


def default_test_bank(grid: TorusGrid, T: float, max_mode: int = 2) -> list:
    """Low trigonometric modes in x times {1, s/T, cos(pi s / T)} in time."""
    time_parts = [
        (lambda s: np.ones_like(np.asarray(s, float)), lambda s: np.zeros_like(np.asarray(s, float)), "1"),
        (lambda s: np.asarray(s, float) / T, lambda s: np.ones_like(np.asarray(s, float)) / T, "s/T"),
        (lambda s: np.cos(math.pi * np.asarray(s, float) / T),
         lambda s: -math.pi / T * np.sin(math.pi * np.asarray(s, float) / T), "cos"),
    ]
    bank = []
    for j in range(grid.d):
        x = grid.coords[j] / grid.period_scale
        for k in range(0, max_mode + 1):
            for name, fn in (("cos", np.cos), ("sin", np.sin)):
                if k == 0 and name == "sin":
                    continue
                psi = GridField(grid, fn(k * x))
                for phi, dphi, tl in time_parts:
                    bank.append(TestFunction(phi, dphi, psi, f"{tl}*{name}({k}x{j + 1})"))
    return bank


def _trap_tail(vals: np.ndarray, times: np.ndarray) -> np.ndarray:
    """out[i] = int_{times[i]}^{times[-1]} by the trapezoidal rule."""
    seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(times)
    out = np.zeros_like(vals)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def weak_residual(u_snapshots: Sequence[GridField], v_snapshots, problem: BSPDEProblem,
                  test_bank: Sequence[TestFunction], times, dW=None, v_covariation=None,
                  source: Sequence[GridField] | None = None) -> float:
    """Largest normalised defect of the distributional identity over the bank.

    For every test function and every snapshot time t the defect is

        <zeta(t), u(t)> - <zeta(T), G> + int_t^T <d_s zeta, u> ds
        + int_t^T <zeta, v^r> dW^r - int_t^T <zeta, A(u, v)> ds,

    with time integrals by the trapezoidal rule on the snapshot mesh and the
    stochastic integral by left-point Ito sums along the supplied increments
    ``dW`` (K, d1).  ``v_covariation`` (the densities d<v^r, W^r>/ds) adds the
    second-order term 1/2 q (dW^2 - ds), lifting that sum to strong order one.
    ``source`` replaces f + L_k g^k when given.  The defect is divided by
    sup_s |phi(s)| * ||psi||_{L^2}.
    """
    if not test_bank:
        raise ValueError("empty test bank")
    times = np.asarray(times, dtype=float)
    K = times.size - 1
    if len(u_snapshots) != times.size:
        raise ValueError("one u snapshot per time is required")
    grid = u_snapshots[0].grid
    gen = Generator(problem, grid)
    d1 = problem.d1
    have_v = v_snapshots is not None
    if have_v:
        if dW is None:
            raise ValueError("stochastic term needs the frozen increments dW")
        dW = np.asarray(dW, dtype=float).reshape(K, d1)
    ds = np.diff(times)

    # A(u, v)(s) on the grid for every snapshot
    A = []
    for i, s in enumerate(times):
        u = u_snapshots[i]
        val = gen.homogeneous(u, s)
        if source is not None:
            val = val + source[i].values
        else:
            src = gen.source(s)
            if src is not None:
                val = val + src
        if have_v:
            vs = v_snapshots[i]
            vs = vs if isinstance(vs, (list, tuple)) else [vs]
            for r, M in enumerate(problem.M_ops()):
                if not M.is_zero():
                    val = val + apply_operator(M, vs[r], s, gen.cache).values
                if not is_zero(problem.gamma[r]):
                    val = val + gen.cache(problem.gamma[r], s) * vs[r].values
        A.append(val)
    A = np.stack(A)
    U = np.stack([u.values for u in u_snapshots])
    if have_v:
        V = np.stack([np.stack([f.values for f in (vs if isinstance(vs, (list, tuple)) else [vs])])
                      for vs in v_snapshots])  # (K+1, d1, ...)
        Q = None
        if v_covariation is not None:
            Q = np.stack([np.stack([f.values for f in (q if isinstance(q, (list, tuple)) else [q])])
                          for q in v_covariation])

    w = grid.weight
    axes = tuple(range(1, grid.d + 1))
    worst = 0.0
    for tf in test_bank:
        psi = tf.psi.values
        phi = np.asarray(tf.phi(times), dtype=float) * np.ones(times.size)
        dphi = np.asarray(tf.dphi(times), dtype=float) * np.ones(times.size)
        pu = w * np.tensordot(U, psi, axes=(axes, tuple(range(grid.d))))  # <psi, u(s)>
        pA = w * np.tensordot(A, psi, axes=(axes, tuple(range(grid.d))))
        lhs = phi * pu - phi[-1] * pu[-1] + _trap_tail(dphi * pu, times)
        rhs = _trap_tail(phi * pA, times)
        if have_v:
            pv = w * np.tensordot(V, psi, axes=(tuple(range(2, grid.d + 2)), tuple(range(grid.d))))
            incr = (phi[:-1, None] * pv[:-1] * dW).sum(axis=1)
            if Q is not None:
                pq = w * np.tensordot(Q, psi, axes=(tuple(range(2, grid.d + 2)), tuple(range(grid.d))))
                incr = incr + 0.5 * (phi[:-1, None] * pq[:-1] * (dW ** 2 - ds[:, None])).sum(axis=1)
            stoch = np.zeros(times.size)
            stoch[:-1] = np.cumsum(incr[::-1])[::-1]
            lhs = lhs + stoch
        norm = np.max(np.abs(phi)) * tf.psi.l2()
        if norm == 0:
            continue
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / norm)
    return worst


def ledger_residual(ledger: SolutionLedger, problem: BSPDEProblem, test_bank=None) -> float:
    """Weak residual of a solver ledger (v = 0) on its snapshot mesh."""
    bank = test_bank or default_test_bank(ledger.grid, ledger.T)
    return weak_residual(ledger.snapshots, None, problem, bank, ledger.times)


def weighted_shift_check(ledger: SolutionLedger, problem: BSPDEProblem, test_bank=None) -> float:
    """Residual of u_bar = (T - t) u against the same generator with source
    (T - t)(f + L_k g^k) + u and terminal value 0."""
    T = ledger.T
    grid = ledger.grid
    gen = Generator(problem, grid)
    ubar, src = [], []
    for s, u in zip(ledger.times, ledger.snapshots):
        ubar.append(GridField(grid, (T - s) * u.values))
        extra = gen.source(s)
        val = u.values.copy()
        if extra is not None:
            val = val + (T - s) * extra
        src.append(GridField(grid, val))
    bank = test_bank or default_test_bank(grid, T)
    shifted = problem.with_data(G=0)
    return weak_residual(ubar, None, shifted, bank, ledger.times, source=src)


# --------------------------------------------------------------- ledgers

@dataclass
class EnergyLedger:
    times: np.ndarray
    lhs: np.ndarray
    rhs: float
    ratio: float


def energy_ledger(ledger: SolutionLedger, m: float = 0.0) -> EnergyLedger:
    """lhs(t) = ||u(t)||_m^2 + int_t^T (delta ||Du||_m^2 + sum_k ||L_k u||_m^2 + ||Du theta||_m^2) ds
    against rhs = ||G||_m^2 + int_0^T (||f||_m^2 + ||g||_m^2) ds; ratio = sup_t lhs / rhs."""
    m = float(m)
    if ("u", m) not in ledger.norms:
        raise KeyError(f"ledger has no norms of order {m}")
    ts = ledger.step_times
    u2 = ledger.norms[("u", m)]
    dens = ledger.delta * ledger.norms[("Du", m)] + ledger.norms[("Lu", m)] + ledger.norms[("Du_theta", m)]
    lhs = u2 + _trap_tail(dens, ts)
    data = ledger.norms[("f", m)] + ledger.norms[("g", m)]
    rhs = float(u2[-1] + _trap_tail(data, ts)[0])
    ratio = float(np.max(lhs) / rhs) if rhs > 0 else 0.0
    return EnergyLedger(ts, lhs, rhs, ratio)


def epsilon_schedule(eps: float, J: int) -> list:
    """eps_j = sum_{i=1..j} eps / 2^i, j = 0..J."""
    out = [0.0]
    for j in range(1, J + 1):
        out.append(out[-1] + eps / 2 ** j)
    return out


@dataclass
class SmoothingRow:
    j: int
    t: float
    order: float
    value: float
    tail_mass: float
    tail_fraction: float  # tail mass relative to its value at T
    resolved: bool


@dataclass
class SmoothingTable:
    rows: list
    eta: float
    grid: TorusGrid
    warnings: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "order", "value", "tail_mass"])
        for r in self.rows:
            w.writerow([repr(r.t), repr(r.order), repr(r.value), repr(r.tail_mass)])
        return buf.getvalue()


def resolved_fraction(phi: GridField, order: float) -> float:
    """Share of ||phi||_order^2 carried by the top octave (max |k_j| > N/4)."""
    g = phi.grid
    power = np.abs(phi.spectrum) ** 2 * (1.0 + g.xi_sq) ** order
    k = np.abs(g.wavenumbers)
    top = np.zeros(g.shape, dtype=bool)
    for j in range(g.d):
        shape = [1] * g.d
        shape[j] = g.n
        top = top | (k.reshape(shape) > g.n // 4)
    total = power.sum()
    return float(power[top].sum() / total) if total > 0 else 0.0


def _certificate_eta(problem: BSPDEProblem, certificate, eta):
    if isinstance(certificate, HormanderCertificate):
        base = {op.canonical_key() for op in certificate.generations[0].members}
        mine = {op.canonical_key() for op in problem.L_ops() if not op.is_zero()}
        if base != mine:
            raise ValueError("certificate was issued for different vector fields")
        return certificate.eta if eta is None else eta
    if eta is None:
        raise ValueError("an uncertified problem needs an explicit eta for the comparison")
    return eta


def smoothing_study(problem: BSPDEProblem, certificate, grid: TorusGrid, m: float = 0.0,
                    eps: float = 0.5, J: int = 4, dt: float | None = None, eta: float | None = None,
                    tail_axis: int | None = None, tail_cutoff: float | None = None,
                    resolution_tol: float = 0.05) -> SmoothingTable:
    """||u(T - eps_j)||_{m + j eta} and degenerate-direction tail mass for j = 0..J.

    ``certificate`` may be a NotSatisfied (control runs); eta must then be given.
    Entries whose weighted spectrum puts more than ``resolution_tol`` of its mass
    in the top octave are marked unresolved and listed in ``warnings``.
    """
    eta = _certificate_eta(problem, certificate, eta)
    if not 0 < eps < min(problem.T, 1.0):
        raise ValueError("eps must lie in (0, min(T, 1))")
    sched = epsilon_schedule(eps, J)
    times = [problem.T - e for e in sched]
    ledger = solve_backward(problem, grid, dt, snapshot_times=times, record_norms=False,
                            t_stop=min(times))
    axis = tail_axis or grid.d
    cutoff = tail_cutoff if tail_cutoff is not None else grid.n / 8
    tail_T = spectral_tail_mass(ledger.snapshot(problem.T), axis, cutoff)
    rows, warnings = [], []
    for j, t in enumerate(times):
        u = ledger.snapshot(t)
        order = m + j * eta
        tail = spectral_tail_mass(u, axis, cutoff)
        frac = tail / tail_T if tail_T > 0 else 0.0
        top = resolved_fraction(u, order)
        ok = top <= resolution_tol
        if not ok:
            warnings.append(f"order {order:g} at t={t:.6g} unresolved on N={grid.n} "
                            f"(top-octave share {top:.3f})")
        rows.append(SmoothingRow(j, float(t), float(order), h_norm(u, order), tail, frac, ok))
    return SmoothingTable(rows, eta, grid, warnings)


# ------------------------------------------------ closed-form random pair

def example12_fields(model, grid: TorusGrid, times, W) -> tuple:
    """Closed-form u, v and d<v, W>/dt snapshots along one frozen W-path.

    Only the case H = eta0 + W is covered; there the drift vanishes and the
    pair solves the equation with theta = 1, sigma = b = c = gamma = f = g = 0.
    """
    if model.bridge:
        raise ValueError("frozen-path residuals cover the H = eta0 + W case only")
    times = np.asarray(times, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.shape != times.shape:
        raise ValueError("W must be sampled on the snapshot times")
    a = model.alpha
    U, dU = model.U, model.dU
    from .symbolic import diff_expr
    d2U = diff_expr(dU, 1)
    x = grid.coords[0]
    us, vs, qs = [], [], []
    for s, w in zip(times, W):
        y = [x - (model.eta0 + w)]
        M = math.exp(a * w - 0.5 * a * a * s)
        u0 = np.asarray(evaluate_on(U, y), float) * np.ones(grid.shape)
        u1 = np.asarray(evaluate_on(dU, y), float) * np.ones(grid.shape)
        u2 = np.asarray(evaluate_on(d2U, y), float) * np.ones(grid.shape)
        us.append(GridField(grid, u0 * M))
        vs.append(GridField(grid, (a * u0 - u1) * M))
        qs.append(GridField(grid, (a * a * u0 - 2 * a * u1 + u2) * M))
    return us, vs, qs


def example12_residual(model, grid: TorusGrid, times, W, test_bank=None,
                       second_order: bool = True) -> float:
    """Weak residual of the closed-form pair on the W-path sampled at ``times``."""
    us, vs, qs = example12_fields(model, grid, times, W)
    problem = model.problem()
    bank = test_bank or default_test_bank(grid, model.T)
    dW = np.diff(np.asarray(W, dtype=float))[:, None]
    return weak_residual(us, vs, problem, bank, times, dW=dW,
                         v_covariation=qs if second_order else None)
