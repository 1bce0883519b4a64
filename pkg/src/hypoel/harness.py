"""Config-driven experiment runner behind the ``hypoel`` command.

One TOML file fully determines an experiment.  Outputs are written atomically
into the output directory together with ``manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from . import bspde
from .feynman_kac import cross_validate, estimate_u, thread_count
from .problem import BSPDEProblem
from .sde import Example12, NoiseGrid, example12_oracle, make_rng, simulate_path, uniform_mesh
from .sobolev import (
    TorusGrid, commutator_ratio, random_band_limited, square_wave,
)
from .symbolic import (
    ExprError, FirstOrderOperator, NotSatisfied, check_hormander,
    parse_expr, torus_sample_grid,
)

KINDS = ("certify", "solve", "simulate", "cross-validate", "smoothing-study",
         "lemma42-probe", "example12-verify")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------- schema

ANY = object()
_MATRIX = ANY
_PROBLEM = {"d": int, "d1": int, "sigma": _MATRIX, "theta": _MATRIX, "b": list, "c": str,
            "gamma": list, "f": str, "g": list, "G": ANY, "T": float, "delta": float}
_GRID = {"n": int, "period_scale": float}
_SCHEMA = {
    "kind": str, "seed": int, "out": str, "description": str,
    "problem": _PROBLEM,
    "grid": _GRID,
    "solver": {"dt": float, "snapshot_times": list, "norm_orders": list,
               "exp_viscosity": bool, "ladder": list, "c_stab": float},
    "certify": {"fields": list, "d": int, "sample_n": int, "tol": float, "n_max": int},
    "simulate": {"s": float, "x": list, "steps": int, "n_paths": int, "substream": int,
                 "dump_paths": int},
    "cross_validate": {"probes": list, "n_samples": int, "steps": int, "confidence_k": float,
                       "budget": float},
    "smoothing": {"m": float, "eps": float, "J": int, "eta": float, "tail_cutoff": float,
                  "tail_axis": int, "sample_n": int, "tol": float, "n_max": int,
                  "control": {"sigma": _MATRIX, "d1": int}},
    "lemma42": {"fields": list, "n_list": list, "m": float, "eps": list, "n_probes": int,
                "band": float, "decay": float},
    "example12": {"U": str, "alpha": float, "T": float, "eta0": float, "t": float,
                  "x": list, "n_samples": int, "steps": int, "history_steps": int,
                  "residual_levels": list, "residual_paths": int, "residual_alpha": float},
}


def _check_keys(data: dict, schema: dict, prefix: str = ""):
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        want = schema[key]
        if isinstance(want, dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a table")
            _check_keys(value, want, path + ".")
        elif want is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(path, "expected a number")
        elif want is not ANY:
            if not isinstance(value, want) or (want is int and isinstance(value, bool)):
                raise ConfigError(path, f"expected {want.__name__}")


_REQUIRED = {
    "certify": ("certify",),
    "solve": ("problem", "grid"),
    "simulate": ("problem", "simulate"),
    "cross-validate": ("problem", "grid", "cross_validate"),
    "smoothing-study": ("problem", "grid", "smoothing"),
    "lemma42-probe": ("lemma42",),
    "example12-verify": ("example12",),
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    out: Path
    data: dict
    source: Path | None = None

    def section(self, name: str) -> dict:
        return self.data.get(name, {})


def load_config(path, kind: str | None = None, seed: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"TOML parse error: {exc}") from None
    return config_from_dict(data, kind, seed, out, source=path)


def config_from_dict(data: dict, kind: str | None = None, seed: int | None = None,
                     out: str | None = None, source: Path | None = None) -> ExperimentConfig:
    _check_keys(data, _SCHEMA)
    file_kind = data.get("kind")
    kind = kind or file_kind
    if kind is None:
        raise ConfigError("kind", "experiment kind missing")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}")
    if file_kind is not None and file_kind != kind:
        raise ConfigError("kind", f"config is for {file_kind!r}, not {kind!r}")
    for name in _REQUIRED[kind]:
        if name not in data:
            raise ConfigError(name, f"required for {kind}")
    grid = data.get("grid")
    if grid is not None:
        n = grid.get("n", 64)
        if n < 4 or n & (n - 1):
            raise ConfigError("grid.n", "must be a power of two >= 4")
    cfg = ExperimentConfig(kind, int(seed if seed is not None else data.get("seed", 0)),
                           Path(out or data.get("out", "hypoel-out")), data, source)
    # parse every expression up front so errors carry the key path
    if "problem" in data:
        build_problem(cfg)
    return cfg


# -------------------------------------------------------------- builders

def _parse(text, d, key):
    try:
        return parse_expr(str(text), d)
    except ExprError as exc:
        raise ConfigError(key, str(exc)) from None


def build_grid(cfg: ExperimentConfig, d: int) -> TorusGrid:
    g = cfg.section("grid")
    return TorusGrid(d, int(g.get("n", 64)), float(g.get("period_scale", 1.0)))


def _terminal(spec, d, grid, key):
    if isinstance(spec, dict):
        if "square_wave" in spec:
            if grid is None:
                raise ConfigError(key, "square-wave data needs a [grid] table")
            return square_wave(grid, int(spec["square_wave"]))
        if "random" in spec:
            r = spec["random"]
            return random_band_limited(grid, int(r.get("seed", 0)), float(r["band"]),
                                       float(r.get("decay", 2.0)))
        raise ConfigError(key, "expected an expression or {square_wave = axis}")
    return _parse(spec, d, key)


def build_problem(cfg: ExperimentConfig, sigma_override=None, d1_override=None) -> BSPDEProblem:
    p = cfg.section("problem")
    d = int(p.get("d", 1))
    d1 = int(d1_override or p.get("d1", 1))

    def mat(name, raw=None):
        raw = raw if raw is not None else p.get(name)
        if raw is None:
            return None
        if len(raw) != d or any(len(r) != d1 for r in raw):
            raise ConfigError(f"problem.{name}", f"must be {d} x {d1}")
        return [[_parse(v, d, f"problem.{name}[{i}][{k}]") for k, v in enumerate(row)]
                for i, row in enumerate(raw)]

    def vec(name, n):
        raw = p.get(name)
        if raw is None:
            return None
        if len(raw) != n:
            raise ConfigError(f"problem.{name}", f"must have length {n}")
        return [_parse(v, d, f"problem.{name}[{i}]") for i, v in enumerate(raw)]

    grid = build_grid(cfg, d) if "grid" in cfg.data else None
    G = p.get("G")
    return BSPDEProblem(
        d, d1, sigma=mat("sigma", sigma_override),
        theta=None if sigma_override is not None else mat("theta"),
        b=vec("b", d), c=None if "c" not in p else _parse(p["c"], d, "problem.c"),
        gamma=None if sigma_override is not None else vec("gamma", d1),
        f=None if "f" not in p else _parse(p["f"], d, "problem.f"),
        g=None if sigma_override is not None else vec("g", d1),
        G=None if G is None else _terminal(G, d, grid, "problem.G"),
        T=float(p.get("T", 1.0)), delta=float(p.get("delta", 0.0)))


def _fields(raw, d, key):
    ops = []
    for i, coeffs in enumerate(raw):
        if len(coeffs) != d:
            raise ConfigError(f"{key}[{i}]", f"needs {d} coefficients")
        ops.append(FirstOrderOperator(tuple(_parse(c, d, f"{key}[{i}]") for c in coeffs),
                                      f"F{i + 1}"))
    return ops


# --------------------------------------------------------------- outputs

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write(path: Path, data: bytes | str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_outputs(results: dict, out_dir, manifest_extra: dict | None = None) -> list:
    """Write ``{relative path: str | bytes}`` atomically; returns the sorted paths."""
    out_dir = Path(out_dir)
    names = sorted(results)
    for name in names:
        atomic_write(out_dir / name, results[name])
    manifest = {"artifacts": names}
    manifest.update(manifest_extra or {})
    atomic_write(out_dir / "manifest.json", json_text(manifest))
    return names


# ------------------------------------------------------------- experiments

def run_certify(cfg: ExperimentConfig) -> tuple:
    c = cfg.section("certify")
    if "fields" not in c:
        raise ConfigError("certify.fields", "required")
    d = int(c.get("d", len(c["fields"][0])))
    fields = _fields(c["fields"], d, "certify.fields")
    cert = check_hormander(fields, torus_sample_grid(d, int(c.get("sample_n", 32))),
                           float(c.get("tol", 1e-8)), int(c.get("n_max", 4)))
    body = cert.to_json()
    if not isinstance(cert, NotSatisfied):
        body["satisfied"] = True
    return {"certificate.json": json_text(body)}, {"satisfied": bool(cert)}


def _solver_kw(cfg):
    s = cfg.section("solver")
    kw = {}
    if "dt" in s:
        kw["dt"] = float(s["dt"])
    if "snapshot_times" in s:
        kw["snapshot_times"] = [float(v) for v in s["snapshot_times"]]
    kw["norm_orders"] = tuple(float(v) for v in s.get("norm_orders", [0.0]))
    kw["exp_viscosity"] = bool(s.get("exp_viscosity", False))
    kw["c_stab"] = float(s.get("c_stab", bspde.C_STAB))
    return kw


def _ledger_outputs(ledger, problem, prefix=""):
    out = {f"{prefix}norms.csv": ledger.to_csv().replace("\n", "\r\n")}
    for i, (t, u) in enumerate(zip(ledger.times, ledger.snapshots)):
        out[f"{prefix}snapshots/u_{i:03d}.bin"] = u.to_bytes()
    energy = {}
    for m in ledger.orders:
        e = bspde.energy_ledger(ledger, m)
        energy[repr(m)] = {"ratio": e.ratio, "rhs": e.rhs, "lhs_max": float(np.max(e.lhs))}
    summary = {"snapshot_times": [float(t) for t in ledger.times], "dt": ledger.dt,
               "delta": ledger.delta, "energy": energy,
               "weak_residual": bspde.ledger_residual(ledger, problem)}
    out[f"{prefix}solve.json"] = json_text(summary)
    return out


def run_solve(cfg: ExperimentConfig) -> tuple:
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem.d)
    kw = _solver_kw(cfg)
    ladder = cfg.section("solver").get("ladder")
    if not ladder:
        ledger = bspde.solve_backward(problem, grid, **kw)
        return _ledger_outputs(ledger, problem), {}
    dt = kw.pop("dt", None)
    ledgers = bspde.viscosity_continuation(problem, grid, ladder, dt=dt, **kw)
    out, rows = {}, []
    base = ledgers[-1].snapshot(0.0)
    for i, (delta, led) in enumerate(zip(ladder, ledgers)):
        out.update(_ledger_outputs(led, problem.with_data(delta=float(delta)), f"rung_{i:02d}/"))
        u0 = led.snapshot(0.0)
        rows.append([float(delta), u0.l2(), (u0 - base).l2()])
    out["ladder.csv"] = csv_text(["delta", "u0_l2", "diff_to_last_l2"], rows)
    return out, {}


def run_simulate(cfg: ExperimentConfig) -> tuple:
    problem = build_problem(cfg)
    s = cfg.section("simulate")
    start = float(s.get("s", 0.0))
    x = np.asarray(s.get("x", [0.0] * problem.d), dtype=float)
    steps = int(s.get("steps", 100))
    n = int(s.get("n_paths", 1000))
    mesh = uniform_mesh(start, problem.T, steps)
    noise = NoiseGrid.generate(mesh, problem.d1, n, cfg.seed, int(s.get("substream", 0)))
    path = simulate_path(problem, start, x, noise)
    XT = path.terminal
    mean = XT.mean(axis=1)
    var = XT.var(axis=1, ddof=1)
    stats = {"n_paths": n, "steps": steps, "mean": mean.tolist(), "variance": var.tolist(),
             "stderr": np.sqrt(var / n).tolist()}
    rows = []
    for p in range(min(int(s.get("dump_paths", 4)), n)):
        for k, t in enumerate(path.times):
            rows.append([p, float(t)] + [float(v) for v in path.values[k, :, p]])
    header = ["path", "t"] + [f"x{j + 1}" for j in range(problem.d)]
    return {"terminal.json": json_text(stats), "paths.csv": csv_text(header, rows)}, {}


def run_cross_validate(cfg: ExperimentConfig) -> tuple:
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem.d)
    c = cfg.section("cross_validate")
    probes = [(float(p[0]), [float(v) for v in p[1:]]) for p in c["probes"]]
    n_samples = int(c.get("n_samples", 20000))
    steps = int(c.get("steps", 50))
    times = sorted({t for t, _ in probes})
    kw = _solver_kw(cfg)
    kw["snapshot_times"] = times
    ledger = bspde.solve_backward(problem, grid, record_norms=False,
                                  **{k: v for k, v in kw.items() if k != "norm_orders"})

    def estimator(t, x):
        return estimate_u(problem, t, x, n_samples, cfg.seed + int(round(t * 1e6)), steps)

    report = cross_validate(probes, estimator, ledger, float(c.get("confidence_k", 3.0)),
                            float(c.get("budget", 0.0)))
    return ({"cross_validation.csv": report.to_csv().replace("\n", "\r\n"),
             "summary.json": json_text(report.summary())},
            {"pass_rate": report.pass_rate})


def _certify_problem(problem, sm, grid):
    pts = torus_sample_grid(problem.d, int(sm.get("sample_n", 32)), grid.length)
    ops = [op for op in problem.L_ops() if not op.is_zero()]
    return check_hormander(ops, pts, float(sm.get("tol", 1e-8)), int(sm.get("n_max", 4)))


def _smoothing_table(problem, grid, sm, eta):
    cert = _certify_problem(problem, sm, grid)
    table = bspde.smoothing_study(
        problem, cert, grid, m=float(sm.get("m", 0.0)), eps=float(sm.get("eps", 0.5)),
        J=int(sm.get("J", 4)), eta=eta, tail_axis=sm.get("tail_axis"),
        tail_cutoff=sm.get("tail_cutoff"))
    return cert, table


def run_smoothing(cfg: ExperimentConfig) -> tuple:
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem.d)
    sm = cfg.section("smoothing")
    eta = sm.get("eta")
    cert = _certify_problem(problem, sm, grid)
    if eta is None:
        if isinstance(cert, NotSatisfied):
            raise ConfigError("smoothing.eta", "problem is not certified; give eta explicitly")
        eta = cert.eta
    units = [("", problem)]
    ctrl = sm.get("control")
    if ctrl:
        units.append(("control/", build_problem(cfg, ctrl["sigma"], ctrl.get("d1"))))

    def run(unit):
        prefix, prob = unit
        c, table = _smoothing_table(prob, grid, sm, eta)
        flags = [{"t": r.t, "order": r.order, "resolved": r.resolved,
                  "tail_fraction": r.tail_fraction} for r in table.rows]
        meta = {"certificate": c.to_json(), "eta": table.eta, "rows": flags,
                "warnings": table.warnings, "grid_n": grid.n}
        return {f"{prefix}smoothing.csv": table.to_csv().replace("\n", "\r\n"),
                f"{prefix}smoothing.json": json_text(meta)}, table

    with ThreadPoolExecutor(min(thread_count(), len(units))) as pool:
        done = list(pool.map(run, units))
    out = {}
    for files, _ in done:
        out.update(files)
    info = {}
    if len(done) == 2:
        tc, tu = done[0][1].rows[1], done[1][1].rows[1]
        contrast = tu.tail_mass / tc.tail_mass if tc.tail_mass > 0 else math.inf
        out["contrast.json"] = json_text({"t": tc.t, "certified_tail_fraction": tc.tail_fraction,
                                          "control_tail_fraction": tu.tail_fraction,
                                          "tail_ratio": contrast})
        info["tail_ratio"] = contrast
    return out, info


def lemma42_rows(fields, n_list, m, eps_list, n_probes, band, decay, seed):
    """Max ratio per (N, eps, bracket pair) over ``n_probes`` random fields."""
    d = fields[0].dimension
    pairs = [(i, j) for i in range(len(fields)) for j in range(len(fields))]
    rows = []
    for n in n_list:
        grid = TorusGrid(d, int(n))
        probes = [random_band_limited(grid, seed + k, band, decay) for k in range(n_probes)]
        for eps in eps_list:
            for i, j in pairs:
                worst = max(commutator_ratio(fields[i], fields[j], phi, m, eps).ratio
                            for phi in probes)
                rows.append((int(n), float(eps), f"{i + 1}-{j + 1}", worst))
    return rows


def run_lemma42(cfg: ExperimentConfig) -> tuple:
    c = cfg.section("lemma42")
    d = len(c["fields"][0])
    fields = _fields(c["fields"], d, "lemma42.fields")
    n_list = [int(v) for v in c.get("n_list", [64, 128])]
    rows = lemma42_rows(fields, n_list, float(c.get("m", 0.0)),
                        [float(v) for v in c.get("eps", [0.0, 0.5, 1.0])],
                        int(c.get("n_probes", 100)), float(c.get("band", 8)),
                        float(c.get("decay", 1.0)), cfg.seed)
    by_key: dict = {}
    for n, eps, pair, r in rows:
        by_key.setdefault((eps, pair), {})[n] = r
    drift = {}
    for (eps, pair), vals in sorted(by_key.items()):
        ns = sorted(vals)
        lo, hi = vals[ns[0]], vals[ns[-1]]
        drift[f"eps={eps!r},pair={pair}"] = abs(hi - lo) / lo if lo > 0 else 0.0
    summary = {"max_drift": max(drift.values(), default=0.0), "drift": drift}
    return ({"lemma42.csv": csv_text(["N", "eps", "pair", "max_ratio"], rows),
             "lemma42.json": json_text(summary)}, {"max_drift": summary["max_drift"]})


def example12_residual_levels(model, levels, n_paths, seed):
    """RMS over ``n_paths`` frozen W-paths of the weak residual at each (K, N) level.

    Each path is drawn once on the finest time mesh and restricted to coarser
    meshes, so all levels see the same Brownian path.
    """
    k_fine = max(k for k, _ in levels)
    res = np.zeros((n_paths, len(levels)))
    for p in range(n_paths):
        rng = make_rng(seed, p)
        dW = rng.standard_normal(k_fine) * math.sqrt(model.T / k_fine)
        W = np.concatenate([[0.0], np.cumsum(dW)])
        for i, (k, n) in enumerate(levels):
            if k_fine % k:
                raise ValueError("residual levels must divide the finest step count")
            res[p, i] = bspde.example12_residual(model, TorusGrid(1, n),
                                                 uniform_mesh(0.0, model.T, k), W[::k_fine // k])
    return np.sqrt((res ** 2).mean(axis=0))


def run_example12(cfg: ExperimentConfig) -> tuple:
    c = cfg.section("example12")
    U = _parse(c.get("U", "cos(x1)"), 1, "example12.U")
    T = float(c.get("T", 1.0))
    eta0 = float(c.get("eta0", 0.5))
    alpha = float(c.get("alpha", 0.0))
    t = float(c.get("t", 0.5))
    xs = [float(v) for v in c.get("x", [0.0, 1.0])]
    n = int(c.get("n_samples", 100000))
    steps = int(c.get("steps", 50))
    hist = int(c.get("history_steps", 50))
    rows = []
    for case, bridge in (("i", False), ("ii", True)):
        model = Example12(U, alpha=0.0 if bridge else alpha, T=T, eta0=eta0, bridge=bridge)
        total = hist + steps if bridge else None
        scen = model.history(t, hist, cfg.seed, 0, total_steps=total)
        for x in xs:
            est = estimate_u(model.problem(), t, [x], n, cfg.seed + 1, steps, scen, model)
            ref = float(example12_oracle(scen, model.alpha, U, t, x).u)
            rows.append([case, t, x, est.mean, est.stderr, est.variance, ref,
                         abs(est.mean - ref)])
    out = {"example12.csv": csv_text(
        ["case", "t", "x", "mc_mean", "stderr", "variance", "oracle", "abs_error"], rows)}
    levels = [tuple(int(v) for v in lv) for lv in c.get("residual_levels", [[64, 16], [128, 32], [256, 64]])]
    model = Example12(U, alpha=float(c.get("residual_alpha", 0.5)), T=T, eta0=eta0)
    rms = example12_residual_levels(model, levels, int(c.get("residual_paths", 16)), cfg.seed)
    rrows = [[k, nn, r] for (k, nn), r in zip(levels, rms)]
    out["residual.csv"] = csv_text(["steps", "N", "rms_residual"], rrows)
    ratios = [float(a / b) for a, b in zip(rms[:-1], rms[1:])]
    return out, {"residual_ratios": ratios}


RUNNERS = {
    "certify": run_certify, "solve": run_solve, "simulate": run_simulate,
    "cross-validate": run_cross_validate, "smoothing-study": run_smoothing,
    "lemma42-probe": run_lemma42, "example12-verify": run_example12,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    base = {"kind": cfg.kind, "seed": cfg.seed, "config": str(cfg.source) if cfg.source else None,
            "versions": {"hypoel": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "threads": thread_count()}
    try:
        results, info = RUNNERS[cfg.kind](cfg)
    except ConfigError:
        raise
    except Exception as exc:  # runtime failure: partial manifest, nonzero exit
        base.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                    wall_time=time.perf_counter() - start)
        emit_outputs({}, cfg.out, base)
        print(f"hypoel: {cfg.kind} failed: {exc}", file=sys.stderr)
        return 1
    base.update(status="ok", summary=info, wall_time=time.perf_counter() - start)
    emit_outputs(results, cfg.out, base)
    return 0


def reference_config(kind: str) -> Path:
    """Path of the bundled reference config for ``kind``."""
    if kind not in KINDS:
        raise KeyError(kind)
    return Path(str(resources.files("hypoel") / "configs" / f"{kind}.toml"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hypoel", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.kind, args.seed, args.out)
    except ConfigError as exc:
        print(f"hypoel: config error at {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hypoel: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"hypoel: config error at {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
