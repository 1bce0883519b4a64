import math

import numpy as np
import pytest

from hypoel.problem import BSPDEProblem
from hypoel.sde import (
    Example12, NoiseGrid, brownian_bridge, bridge_drift, example12_oracle, make_rng,
    simulate_path, uniform_mesh,
)
from hypoel.symbolic import parse_expr

N = 100_000


def prob(d=1, d1=1, **kw):
    return BSPDEProblem.from_strings(d, d1, **kw)


def within(sample_mean, target, stderr, k=3.0):
    return abs(sample_mean - target) <= k * stderr


def test_no_dynamics():
    mesh = uniform_mesh(0, 1, 10)
    noise = NoiseGrid.generate(mesh, 1, 5, seed=1)
    path = simulate_path(prob(), 0.0, [0.3], noise)
    assert np.all(path.values == 0.3)


def test_deterministic_drift():
    mesh = uniform_mesh(0.2, 1.0, 16)
    noise = NoiseGrid.generate(mesh, 1, 3, seed=1)
    path = simulate_path(prob(b=["1"]), 0.2, [0.5], noise)
    expect = 0.5 + (path.times - 0.2)
    assert np.allclose(path.values[:, 0, :], expect[:, None], rtol=0, atol=1e-14)
    assert np.all(path.values[0] == 0.5)


def test_start_must_be_on_mesh():
    noise = NoiseGrid.generate(uniform_mesh(0, 1, 10), 1, 2, seed=0)
    with pytest.raises(ValueError):
        simulate_path(prob(), 0.05, [0.0], noise)


def test_start_midway_uses_tail_of_mesh():
    noise = NoiseGrid.generate(uniform_mesh(0, 1, 10), 1, 2, seed=0)
    path = simulate_path(prob(theta=[["1"]]), 0.5, [0.0], noise)
    assert path.times[0] == pytest.approx(0.5) and path.values.shape[0] == 6
    assert np.allclose(path.terminal[0], noise.dW[5:, 0].sum(axis=0))


def test_gaussian_moments():
    s, T, x = 0.25, 1.0, 0.7
    noise = NoiseGrid.generate(uniform_mesh(s, T, 20), 1, N, seed=3)
    XT = simulate_path(prob(sigma=[["1"]], T=T), s, [x], noise).terminal[0]
    var = XT.var(ddof=1)
    assert within(XT.mean(), x, math.sqrt(var / N))
    # stderr of the sample variance of a Gaussian
    assert within(var, T - s, (T - s) * math.sqrt(2 / (N - 1)))


def test_noise_reproducible_and_independent():
    mesh = uniform_mesh(0, 1, 50)
    a = NoiseGrid.generate(mesh, 2, 100, seed=9, substream=4)
    b = NoiseGrid.generate(mesh, 2, 100, seed=9, substream=4)
    c = NoiseGrid.generate(mesh, 2, 100, seed=9, substream=5)
    assert np.array_equal(a.dW, b.dW) and np.array_equal(a.dB, b.dB)
    assert not np.array_equal(a.dW, c.dW)
    big = NoiseGrid.generate(uniform_mesh(0, 1, 1000), 1, 100, seed=2)
    dw, db = big.dW.ravel(), big.dB.ravel()
    assert abs(np.corrcoef(dw, db)[0, 1]) <= 3 / math.sqrt(dw.size)
    assert dw.var() * 1000 == pytest.approx(1.0, rel=0.02)


def test_paths_and_bridges_reproducible():
    mesh = uniform_mesh(0, 1, 20)
    p = prob(sigma=[["sin(x1)"]], theta=[["1"]], b=["-x1"])
    one = simulate_path(p, 0, [0.1], NoiseGrid.generate(mesh, 1, 50, 7, 1))
    two = simulate_path(p, 0, [0.1], NoiseGrid.generate(mesh, 1, 50, 7, 1))
    assert np.array_equal(one.values, two.values)
    assert np.array_equal(brownian_bridge(0.4, 0.0, mesh, 3, 10), brownian_bridge(0.4, 0.0, mesh, 3, 10))


def _coarsen(noise, factor):
    K = noise.steps // factor
    dW = noise.dW.reshape(K, factor, *noise.dW.shape[1:]).sum(axis=1)
    dB = noise.dB.reshape(K, factor, *noise.dB.shape[1:]).sum(axis=1)
    return NoiseGrid(noise.times[::factor], dW, dB, noise.seed, noise.substream)


def test_weak_order_with_common_random_numbers():
    # Ornstein-Uhlenbeck: the driftless linear problem has no Euler bias at all.
    p = prob(sigma=[["1"]], theta=[["1"]], b=["-x1"], T=1.0)
    fine = NoiseGrid.generate(uniform_mesh(0, 1, 400), 1, 20_000, seed=12)
    means = {}
    for K in (50, 100, 200, 400):
        XT = simulate_path(p, 0, [1.0], _coarsen(fine, 400 // K)).terminal[0]
        means[K] = np.mean(XT ** 2)
    d1 = abs(means[50] - means[100])
    d2 = abs(means[100] - means[200])
    d3 = abs(means[200] - means[400])
    order = math.log2(math.sqrt(d1 * d2) / math.sqrt(d2 * d3))
    assert order >= 0.8
    exact = math.exp(-2) + (1 - math.exp(-2))
    assert abs(means[400] - exact) < 0.02


def test_driftless_linear_problem_is_exact_in_law():
    p = prob(sigma=[["1"]], theta=[["1"]], T=1.0)
    for K in (50, 100, 200):
        XT = simulate_path(p, 0, [0.0], NoiseGrid.generate(uniform_mesh(0, 1, K), 1, N, 4)).terminal[0]
        stderr = 2 * math.sqrt(2 / N)
        assert within(np.mean(XT ** 2), 2.0, stderr)


# ------------------------------------------------------------------ bridge

def test_bridge_single_step():
    H = brownian_bridge(0.8, 0.0, [0.0, 1.0], seed=1, n_paths=3)
    assert np.array_equal(H, np.array([[0.8] * 3, [0.0] * 3]))


def test_bridge_empty_mesh():
    with pytest.raises(ValueError):
        brownian_bridge(0.0, 0.0, [0.0], seed=0)


def test_bridge_moments_and_endpoint():
    T, eta0 = 1.0, 0.6
    mesh = uniform_mesh(0, T, 10)
    H = brownian_bridge(eta0, 0.0, mesh, seed=5, n_paths=N)
    assert np.all(H[-1] == 0.0)
    for k in (3, 7):
        t = mesh[k]
        var = t * (T - t) / T
        assert within(H[k].mean(), eta0 * (T - t) / T, math.sqrt(var / N))
        assert within(H[k].var(ddof=1), var, var * math.sqrt(2 / (N - 1)))


def test_bridge_nonzero_endpoint():
    H = brownian_bridge(0.0, 2.0, uniform_mesh(0, 2, 8), seed=1, n_paths=4)
    assert np.all(H[-1] == 2.0)


def test_bridge_drift_formula():
    mesh = uniform_mesh(0, 1, 4)
    H = np.array([[1.0], [0.5], [0.25], [0.1], [0.0]])
    b = bridge_drift(H, mesh)
    assert np.allclose(b[:, 0], -H[:-1, 0] / (1 - mesh[:-1]))


# ----------------------------------------------------- closed-form model

def test_oracle_alpha_zero():
    model = Example12.from_string("cos(x1)", eta0=0.2)
    scen = model.history(0.5, 20, seed=1)
    out = example12_oracle(scen, 0.0, model.U, 0.5, 0.9)
    y = 0.9 - scen.H_t
    assert out.u == pytest.approx(math.cos(y))
    assert out.v == pytest.approx(math.sin(y))


def test_oracle_formula_with_alpha():
    model = Example12.from_string("cos(x1)", eta0=0.2, alpha=0.7)
    scen = model.history(0.4, 16, seed=2)
    x = np.array([0.0, 1.0, 2.5])
    out = example12_oracle(scen, 0.7, model.U, 0.4, x)
    M = math.exp(0.7 * scen.W_t - 0.5 * 0.49 * 0.4)
    y = x - scen.H_t
    assert np.allclose(out.v, 0.7 * np.cos(y) * M + np.sin(y) * M)
    assert np.allclose(out.u, np.cos(y) * M)
    with pytest.raises(ValueError):
        example12_oracle(scen, 0.7, model.U, 0.3, x)


def test_exponential_martingale_mean():
    alpha, T = 0.8, 1.0
    W = make_rng(3).standard_normal(N) * math.sqrt(T)
    M = np.exp(alpha * W - 0.5 * alpha ** 2 * T)
    assert within(M.mean(), 1.0, M.std(ddof=1) / math.sqrt(N))


def test_flow_telescopes_on_the_mesh():
    for bridge in (False, True):
        model = Example12.from_string("cos(x1)", eta0=0.4, bridge=bridge)
        scen = model.history(0.5, 10, seed=3, total_steps=20)
        noise, drift, state = model.continuation(scen, 10, 64, seed=4)
        path = simulate_path(model.problem(), 0.5, [1.1], noise, drift=drift)
        assert np.allclose(path.terminal[0], 1.1 - scen.H_t + state["H"], rtol=0, atol=1e-13)
        if bridge:
            assert np.all(state["H"] == 0.0)


def test_bridge_history_derives_W_from_H():
    model = Example12.from_string("cos(x1)", eta0=0.4, bridge=True)
    scen = model.history(0.5, 10, seed=3, total_steps=20)
    dW = np.diff(scen.W)
    dH = np.diff(scen.H)
    b = -scen.H[:-1] / (1.0 - scen.times[:-1])
    assert np.allclose(dH, b * np.diff(scen.times) + dW)
    assert scen.H[0] == 0.4


def test_scenario_states_are_deterministic():
    model = Example12.from_string("cos(x1)", eta0=0.4, alpha=0.3)
    a = model.history(0.5, 10, seed=8)
    b = model.history(0.5, 10, seed=8)
    assert np.array_equal(a.W, b.W) and a.M_t == b.M_t
    assert a.H_t == pytest.approx(0.4 + a.W_t)
    assert parse_expr("cos(x1)", 1) == model.U
