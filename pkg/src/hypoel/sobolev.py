"""Spectral calculus on the periodic torus [0, 2*pi*P)^d.

Transform convention: ``spectrum = numpy.fft.fftn(values)`` (unnormalised
forward transform).  With quadrature weight ``w = (2*pi*P/N)^d`` Parseval reads

    ||phi||_{L^2}^2 = w * sum |phi_j|^2 = (w / N^d) * sum |spectrum_k|^2,

and every norm below uses that one identity.  The frequency attached to index
k is xi = k / P, with k taken from ``fftfreq`` (symmetric about zero; the
Nyquist index, when N is even, is treated as +-N/2 alike by |xi|).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
import io
import math
import struct

import numpy as np

from .symbolic import FirstOrderOperator, is_zero, lie_bracket
from .symbolic.expr import Expr, Time, evaluate_on, walk


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    d: int
    n: int
    period_scale: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 4, got {self.n}")
        if not self.period_scale > 0:
            raise ValueError("period scale must be positive")

    @property
    def length(self) -> float:
        return 2 * math.pi * self.period_scale

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def weight(self) -> float:
        return self.dx ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def coords(self) -> tuple:
        """d arrays of shape (n,)*d holding the coordinates of every node."""
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer mode index per axis position (fftfreq order)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def xi(self) -> tuple:
        """Broadcastable frequency arrays xi_j, one per axis."""
        k = self.wavenumbers / self.period_scale
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for x in self.xi:
            total = total + x ** 2
        return total

    @cached_property
    def derivative_symbols(self) -> tuple:
        """i*xi_j with the Nyquist mode zeroed (odd derivatives of real data)."""
        k = self.wavenumbers / self.period_scale
        if self.n % 2 == 0:
            k = k.copy()
            k[self.n // 2] = 0.0
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(1j * k.reshape(shape))
        return tuple(out)

    def bessel_multiplier(self, order: float) -> np.ndarray:
        return (1.0 + self.xi_sq) ** (order / 2.0)

    def refine(self, factor: int = 2) -> "TorusGrid":
        return TorusGrid(self.d, self.n * factor, self.period_scale)


@dataclass(eq=False)
class GridField:
    grid: TorusGrid
    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(f"values have shape {self.values.shape}, grid wants {self.grid.shape}")

    @classmethod
    def from_spectrum(cls, grid: TorusGrid, spectrum: np.ndarray) -> "GridField":
        values = np.fft.ifftn(spectrum).real
        return cls(grid, values)

    @classmethod
    def from_expr(cls, grid: TorusGrid, expr: Expr, t: float = 0.0) -> "GridField":
        return cls(grid, np.array(evaluate_on(expr, grid.coords, t), dtype=float))

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "GridField":
        return cls(grid, np.asarray(fn(*grid.coords), dtype=float) * np.ones(grid.shape))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "GridField":
        return cls(grid, np.zeros(grid.shape))

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = np.fft.fftn(self.values)
        return self._spectrum

    def _check(self, other):
        if isinstance(other, GridField) and other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        o = other.values if isinstance(other, GridField) else other
        return GridField(self.grid, self.values + o)

    __radd__ = __add__

    def __sub__(self, other):
        self._check(other)
        o = other.values if isinstance(other, GridField) else other
        return GridField(self.grid, self.values - o)

    def __mul__(self, other):
        self._check(other)
        o = other.values if isinstance(other, GridField) else other
        return GridField(self.grid, self.values * o)

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def copy(self) -> "GridField":
        return GridField(self.grid, self.values.copy())

    def mean(self) -> float:
        return float(self.values.mean())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        return float(math.sqrt(self.grid.weight * np.sum(self.values ** 2)))

    def inner(self, other: "GridField") -> float:
        self._check(other)
        return float(self.grid.weight * np.sum(self.values * other.values))

    def at(self, points) -> np.ndarray:
        """Trigonometric interpolant evaluated at arbitrary points, shape (m, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        spec = self.spectrum.ravel()
        ks = np.stack([np.broadcast_to(x, self.grid.shape).ravel() for x in self.grid.xi], axis=1)
        keep = np.abs(spec) > 1e-14 * max(np.abs(spec).max(), 1e-300)
        phase = np.exp(1j * pts @ ks[keep].T)
        return (phase @ spec[keep]).real / self.grid.n ** self.grid.d

    # -- serialisation -------------------------------------------------

    def to_bytes(self) -> bytes:
        header = struct.pack("<qqd", self.grid.d, self.grid.n, float(self.grid.period_scale))
        return header + np.ascontiguousarray(self.values, dtype="<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridField":
        d, n, p = struct.unpack_from("<qqd", data, 0)
        grid = TorusGrid(int(d), int(n), float(p))
        payload = np.frombuffer(data, dtype="<f8", offset=24)
        if payload.size != n ** d:
            raise ValueError(f"payload holds {payload.size} values, expected {n ** d}")
        return cls(grid, payload.reshape(grid.shape).astype(float))

    def to_csv(self, max_points: int = 1 << 16) -> str:
        if self.values.size > max_points:
            raise ValueError(f"grid too large for CSV ({self.values.size} > {max_points} nodes)")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(self.grid.d)] + ["value"])
        flat = [c.ravel() for c in self.grid.coords]
        for i, v in enumerate(self.values.ravel()):
            w.writerow([repr(float(c[i])) for c in flat] + [repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, period_scale: float = 1.0) -> "GridField":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        d = len(header) - 1
        n = round(len(body) ** (1.0 / d))
        grid = TorusGrid(d, n, period_scale)
        vals = np.array([float(r[-1]) for r in body]).reshape(grid.shape)
        return cls(grid, vals)


# -------------------------------------------------------------- operators

def bessel_apply(phi: GridField, order: float) -> GridField:
    """I^n phi = (1 - Laplacian)^{n/2} phi as the multiplier (1 + |xi|^2)^{n/2}."""
    if order == 0:
        return phi.copy()
    return GridField.from_spectrum(phi.grid, phi.spectrum * phi.grid.bessel_multiplier(order))


def h_norm(phi: GridField, order: float) -> float:
    """||phi||_n = ||I^n phi||_{L^2}, computed in spectral space."""
    g = phi.grid
    power = np.abs(phi.spectrum) ** 2
    if order != 0:
        power = power * (1.0 + g.xi_sq) ** order
    return float(math.sqrt(g.weight / g.n ** g.d * power.sum()))


def gradient(phi: GridField) -> list:
    spec = phi.spectrum
    return [GridField.from_spectrum(phi.grid, spec * sym) for sym in phi.grid.derivative_symbols]


def partial(phi: GridField, axis: int) -> GridField:
    """Spectral derivative along x_axis (1-based)."""
    return GridField.from_spectrum(phi.grid, phi.spectrum * phi.grid.derivative_symbols[axis - 1])


def laplacian(phi: GridField) -> GridField:
    return GridField.from_spectrum(phi.grid, -phi.grid.xi_sq * phi.spectrum)


class CoefficientCache:
    """Grid samples of operator coefficients, keyed by (expression, t)."""

    def __init__(self, grid: TorusGrid):
        self.grid = grid
        self._store: dict = {}
        self._time_free: dict = {}

    def __call__(self, expr: Expr, t: float = 0.0) -> np.ndarray:
        if expr not in self._time_free:
            self._time_free[expr] = not any(isinstance(n, Time) for n in walk(expr))
        key = (expr, 0.0 if self._time_free[expr] else float(t))
        out = self._store.get(key)
        if out is None:
            out = np.array(evaluate_on(expr, self.grid.coords, t), dtype=float)
            if not np.all(np.isfinite(out)):
                raise FloatingPointError(f"coefficient {expr} is not finite on the grid")
            self._store[key] = out
        return out


def apply_operator(F: FirstOrderOperator, phi: GridField, t: float = 0.0,
                   cache: CoefficientCache | None = None) -> GridField:
    """Samples of sum_j F^j(x) D_j phi(x): derivatives spectral, products pointwise."""
    if F.dimension != phi.grid.d:
        raise GridMismatch(f"operator dimension {F.dimension} != grid dimension {phi.grid.d}")
    cache = cache or CoefficientCache(phi.grid)
    out = np.zeros(phi.grid.shape)
    spec = None
    for j, c in enumerate(F.coeffs):
        if is_zero(c):
            continue
        if spec is None:
            spec = phi.spectrum
        dphi = np.fft.ifftn(spec * phi.grid.derivative_symbols[j]).real
        out += cache(c, t) * dphi
    return GridField(phi.grid, out)


# ------------------------------------------------------------ mollifier

_QUAD_POINTS = 64


def bump(r):
    """Unnormalised C-infinity bump exp(-1/(1-r^2)) on the unit ball."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _marginal(y1: np.ndarray, d: int) -> np.ndarray:
    """m(y1) = integral of the bump over the slice {y1} x R^{d-1}."""
    if d == 1:
        return bump(np.abs(y1))
    nodes, weights = np.polynomial.legendre.leggauss(_QUAD_POINTS)
    a = np.sqrt(np.clip(1.0 - y1 ** 2, 0.0, None))[:, None]
    rho = 0.5 * a * (nodes + 1.0)  # radial variable on [0, a]
    sphere = 2 * math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2)
    vals = bump(np.sqrt(y1[:, None] ** 2 + rho ** 2)) * rho ** (d - 2)
    return sphere * 0.5 * a[:, 0] * (vals @ weights)


def kernel_transform(omega, d: int) -> np.ndarray:
    """rho^(omega) for the unit-mass bump by panelled 64-point Gauss-Legendre.

    The kernel is radial, so the transform is a cosine transform of its
    marginal along e_1.  The number of panels grows with max |omega| so the
    oscillatory integrand stays resolved.
    """
    om = np.asarray(omega, dtype=float)
    flat, inverse = np.unique(np.abs(om.ravel()), return_inverse=True)
    top = float(np.max(np.abs(flat))) if flat.size else 0.0
    panels = max(2, int(math.ceil(top / 8.0)))
    nodes, weights = np.polynomial.legendre.leggauss(_QUAD_POINTS)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    y = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half * nodes
    w = (half * weights).ravel()
    y = y.ravel()
    m = _marginal(y, d) * w
    mass = m.sum()
    out = np.empty(flat.size)
    for i0 in range(0, flat.size, 4096):
        out[i0:i0 + 4096] = np.cos(np.outer(flat[i0:i0 + 4096], y)) @ m / mass
    return out[inverse].reshape(om.shape)


def kernel_mass_ok(scale: float, grid: TorusGrid) -> bool:
    return 1.0 / scale <= grid.length / 2


def mollify(G: GridField, scale: float) -> GridField:
    """G_N = G * rho_N with rho_N(y) = N^d rho(N y): multiplier rho^(xi / N)."""
    if scale < 1:
        raise ValueError("mollifier scale must be >= 1")
    if not kernel_mass_ok(scale, G.grid):
        raise ValueError(f"kernel radius 1/{scale} exceeds half the period {G.grid.length / 2:.4g}")
    mult = kernel_transform(np.sqrt(G.grid.xi_sq) / scale, G.grid.d)
    return GridField.from_spectrum(G.grid, G.spectrum * mult)


# -------------------------------------------------------- probes & tails

@dataclass(frozen=True)
class CommutatorRatio:
    lhs: float
    rhs: float
    ratio: float


def commutator_ratio(Lt: FirstOrderOperator, L: FirstOrderOperator, phi: GridField,
                     m: float, eps: float) -> CommutatorRatio:
    """||[Lt,L]phi||_{m-1+eps/2} against ||Lt phi||_{m-1+eps} + ||L phi||_m + ||phi||_m."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    cache = CoefficientCache(phi.grid)
    bracket = lie_bracket(Lt, L)
    lhs = h_norm(apply_operator(bracket, phi, cache=cache), m - 1 + eps / 2)
    rhs = (h_norm(apply_operator(Lt, phi, cache=cache), m - 1 + eps)
           + h_norm(apply_operator(L, phi, cache=cache), m)
           + h_norm(phi, m))
    ratio = lhs / rhs if rhs > 0 else 0.0
    return CommutatorRatio(lhs, rhs, ratio)


def _shell(r: int, d: int):
    """Integer vectors with max-norm exactly r, in lexicographic order."""
    if r == 0:
        yield (0,) * d
        return
    rng = range(-r, r + 1)
    for k in np.ndindex(*([2 * r + 1] * d)):
        v = tuple(rng[i] for i in k)
        if max(abs(c) for c in v) == r:
            yield v


def random_band_limited(grid: TorusGrid, seed: int, band: float, decay: float) -> GridField:
    """Random real field with modes |xi| <= band and amplitude (1+|xi|^2)^(-decay/2).

    Modes are drawn shell by shell (max-norm of the integer index), so a field
    with a larger band or on a finer grid shares every lower mode with the
    coarser one.
    """
    kmax = int(math.floor(band * grid.period_scale))
    if kmax >= grid.n // 2:
        raise ValueError(f"band {band} not resolved on a grid with N={grid.n}")
    rng = np.random.default_rng(seed)
    spec = np.zeros(grid.shape, dtype=complex)
    scale = float(grid.n ** grid.d)
    for r in range(kmax + 1):
        vecs = list(_shell(r, grid.d))
        draws = rng.standard_normal((len(vecs), 2))
        for v, (a, b) in zip(vecs, draws):
            xi2 = sum((c / grid.period_scale) ** 2 for c in v)
            if xi2 > band ** 2:
                continue
            amp = (1.0 + xi2) ** (-decay / 2.0)
            idx = tuple(c % grid.n for c in v)
            spec[idx] = scale * amp * (a + 1j * b)
    return GridField.from_spectrum(grid, spec)


def spectral_tail_mass(phi: GridField, axis: int, cutoff: float) -> float:
    """Squared L^2 mass carried by modes with |xi_axis| >= cutoff."""
    g = phi.grid
    mask = np.broadcast_to(np.abs(g.xi[axis - 1]) >= cutoff, g.shape)
    power = np.abs(phi.spectrum) ** 2
    return float(g.weight / g.n ** g.d * power[mask].sum())


def square_wave(grid: TorusGrid, axis: int) -> GridField:
    """sign(sin(x_axis)) as its Fourier series truncated below the Nyquist index."""
    x = grid.coords[axis - 1] / grid.period_scale
    out = np.zeros(grid.shape)
    for k in range(1, grid.n // 2, 2):
        out += (4.0 / (math.pi * k)) * np.sin(k * x)
    return GridField(grid, out)
