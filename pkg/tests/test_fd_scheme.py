from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhi.errors import BlowUpError, ConfigError, ContractError
from fhi.fd_scheme import (
    Field,
    SchemeParams,
    initial_row,
    laplacian_1d,
    simulate,
    simulate_paths,
    stability_check,
    step,
)
from fhi.fractional_calculus import caputo_weights
from fhi.grid import GridSpec
from fhi.inclusion import SelectorPolicy

SMALL = GridSpec(L=10.0, N_x=40, T=2.0, N_t=200)


def heat_params(**kw):
    base = dict(alpha=0.999, lam=0.1, sigma=0.0, k1=0.0, k2=0.0, scheme_variant="l1_standard",
                ic="gaussian", ic_width=0.5)
    base.update(kw)
    return SchemeParams(**base)


def gaussian_l2_error(field: Field, t: float, w0=0.5, lam=0.1) -> float:
    x = field.grid.x
    v = w0 * w0 + 2 * lam * t
    exact = np.exp(-x * x / (2 * v)) / np.sqrt(2 * np.pi * v)
    y = field.Y[field.grid.step_index(t)]
    return float(np.linalg.norm(y - exact) / np.linalg.norm(exact))


# {{{ stencil and single steps


def test_laplacian_exact_cases():
    x = np.linspace(-1, 1, 21)
    dx = x[1] - x[0]
    np.testing.assert_allclose(laplacian_1d(3 * x + 1, dx)[1:-1], 0.0, atol=1e-11)
    np.testing.assert_allclose(laplacian_1d(x * x, dx)[1:-1], 2.0, rtol=1e-11)
    out = laplacian_1d(x * x, dx)
    assert out[0] == 0.0 and out[-1] == 0.0


def test_laplacian_sine_truncation_bound():
    dx = 0.01
    x = np.arange(0, 2 * np.pi, dx)
    err = np.abs(laplacian_1d(np.sin(x), dx)[1:-1] + np.sin(x[1:-1]))
    assert err.max() <= dx * dx / 12 * 1.0 + 1e-9


def test_laplacian_too_short():
    with pytest.raises(ContractError):
        laplacian_1d([1.0, 2.0], 0.1)


def test_zero_fixed_point_step():
    p = SchemeParams(sigma=0.0, k1=0.0, k2=0.0)
    w = caputo_weights(p.alpha, 0.01, p.m_star)
    out = step(np.zeros(11), np.zeros((3, 11)), w, 0.0, None, p, 0.5)
    np.testing.assert_array_equal(out, 0.0)


def test_first_step_is_euler_heat_step():
    g = GridSpec(L=2.0, N_x=20, T=1.0, N_t=100)
    p = SchemeParams(alpha=0.999, sigma=0.0, k1=0.0, k2=0.0)
    y0 = initial_row(p, g)
    w = caputo_weights(p.alpha, g.dt, p.m_star)
    y1 = step(y0, np.zeros((0, y0.size)), w, 0.0, None, p, g.dx)
    c = g.N_x // 2
    r = p.lam * g.dt / g.dx**2
    assert y1[c] == pytest.approx((1 - 2 * r) / g.dx, rel=1e-14)
    assert y1[c - 1] == pytest.approx(r / g.dx, rel=1e-14)
    assert y1[c + 1] == pytest.approx(r / g.dx, rel=1e-14)
    assert np.count_nonzero(y1) == 3


def _hand_step(prev, hist, alpha, dt, dx, lam, k, noise, variant):
    """Loop transcription of the two update rules, used as an oracle."""
    K = prev.size
    g2 = math.gamma(2 - alpha)
    wj = [((j ** (1 - alpha)) - (j - 1) ** (1 - alpha)) / (g2 * dt**alpha) for j in range(1, 16)]
    out = np.zeros(K)
    for i in range(1, K - 1):
        lap = (prev[i + 1] - 2 * prev[i] + prev[i - 1]) / dx**2
        drift = lam * lap - k * prev[i]
        if variant == "paper_literal":
            mem = sum(wj[j] * hist[j][i] for j in range(len(hist)))
            out[i] = prev[i] + dt * (drift - mem) + noise[i]
        else:
            mem = sum(wj[j + 1] * hist[j][i] for j in range(len(hist)))
            out[i] = prev[i] + (drift - mem + noise[i] / dt) / wj[0]
    return out


@pytest.mark.parametrize("variant", ["paper_literal", "l1_standard"])
def test_step_matches_hand_summation(variant):
    rng = np.random.default_rng(4)
    K, dt, dx = 9, 0.02, 0.5
    prev = rng.normal(size=K)
    hist = rng.normal(size=(4, K))
    noise = 0.1 * rng.normal(size=K)
    p = SchemeParams(alpha=0.8, scheme_variant=variant)
    w = caputo_weights(0.8, dt, 15)
    got = step(prev, hist, w, 0.3, noise, p, dx)
    expected = _hand_step(prev, hist, 0.8, dt, dx, 0.1, 0.3, noise, variant)
    np.testing.assert_allclose(got, expected, rtol=1e-13, atol=1e-13)


def test_source_sign_flips_absorption():
    K = 7
    prev = np.linspace(0, 1, K)
    w = caputo_weights(0.8, 0.01, 15)
    sink = step(prev, np.zeros((0, K)), w, 0.4, None, SchemeParams(absorption_sign="sink"), 1.0)
    src = step(prev, np.zeros((0, K)), w, 0.4, None, SchemeParams(absorption_sign="source"), 1.0)
    np.testing.assert_allclose((src - sink)[1:-1], 2 * 0.01 * 0.4 * prev[1:-1])


# }}}


# {{{ stability


def test_stability_examples():
    ok = stability_check(SchemeParams(lam=0.1), GridSpec(L=10.0, N_x=10, T=1.0, N_t=100))
    assert ok.passed and ok.r == pytest.approx(0.001)
    bad = stability_check(SchemeParams(lam=0.1), GridSpec(L=1.0, N_x=10, T=100.0, N_t=10))
    assert not bad.passed and bad.r == pytest.approx(100.0)
    assert bad.suggested_dt is not None and bad.suggested_dt < 10.0
    shipped = stability_check(SchemeParams(), GridSpec(L=100.0, N_x=200, T=30.0, N_t=3000))
    assert shipped.passed and shipped.r == pytest.approx(0.004)
    assert isinstance(shipped.w1, float)


def test_suggested_dt_passes():
    g = GridSpec(L=1.0, N_x=10, T=100.0, N_t=10)
    p = SchemeParams()
    dt = stability_check(p, g).suggested_dt
    n = math.ceil(g.T / dt)
    assert stability_check(p, GridSpec(L=1.0, N_x=10, T=100.0, N_t=n)).passed


def test_unstable_config_refused():
    with pytest.raises(ConfigError):
        simulate(SchemeParams(), GridSpec(L=1.0, N_x=10, T=100.0, N_t=10))


def test_blow_up_reports_location():
    with pytest.raises(BlowUpError) as info:
        simulate(SchemeParams(sigma=0.0), GridSpec(L=100.0, N_x=200, T=30000.0, N_t=200), override=True)
    loc = info.value.location
    assert {"step", "node", "path"} <= set(loc)
    assert info.value.diagnostic["r"] > 0.5


# }}}


# {{{ simulate


def test_dirichlet_and_determinism():
    p = SchemeParams(sigma=0.5)
    f1, r1 = simulate(p, SMALL, seed=9)
    f2, r2 = simulate(p, SMALL, seed=9)
    np.testing.assert_array_equal(f1.Y, f2.Y)
    assert np.all(f1.Y[:, 0] == 0) and np.all(f1.Y[:, -1] == 0)
    assert r1.to_json(stable=True) == r2.to_json(stable=True)
    f3, _ = simulate(p, SMALL, seed=10)
    assert not np.array_equal(f1.Y, f3.Y)


def test_zero_fixed_point():
    f, _ = simulate(SchemeParams(sigma=0.0, k1=0.0, k2=0.0, ic="zero"), SMALL)
    assert np.all(f.Y == 0.0)


@given(st.integers(0, 1000), st.sampled_from(["paper_literal", "l1_standard"]))
def test_nonnegative_without_noise(seed, variant):
    g = GridSpec(L=10.0, N_x=40, T=2.0, N_t=100)
    p = SchemeParams(sigma=0.0, scheme_variant=variant, ic="gaussian")
    assert stability_check(p, g).passed
    f, _ = simulate(p, g, seed=seed)
    assert np.all(f.Y >= 0.0)


def test_report_contents():
    p = SchemeParams()
    f, rep = simulate(p, SMALL, SelectorPolicy("uniform_per_step", rng_seed=3), seed=1)
    d = rep.diagnostics
    assert p.k1 <= d["selector"]["min"] <= d["selector"]["max"] <= p.k2
    assert d["max_abs_Y"] == pytest.approx(float(np.abs(f.Y).max()))
    assert d["boundary_max_abs"] == 0.0
    assert d["stability"]["passed"]
    assert rep.seed == 1 and rep.config["scheme_variant"] == "paper_literal"


def test_batched_paths_match_single_runs():
    p = SchemeParams(sigma=0.5)
    pol = SelectorPolicy("uniform_per_step", rng_seed=5)
    batch = simulate_paths(p, SMALL, pol, 5, [0, 1, 2], store=True)
    for j in range(3):
        single, _ = simulate(p, SMALL, pol, 5, path=j)
        np.testing.assert_array_equal(batch[j], single.Y)


def test_heat_limit_self_convergence():
    # alpha = 0.999 is not exactly the heat equation, so measure the time error by dt halving;
    # full memory keeps the discrete operator the same model at every dt
    ys = []
    for n_t in (160, 320, 640):
        f, _ = simulate(heat_params(m_star=n_t), GridSpec(L=10.0, N_x=200, T=1.0, N_t=n_t))
        ys.append(f.Y[-1])
    e1 = np.linalg.norm(ys[0] - ys[1])
    e2 = np.linalg.norm(ys[1] - ys[2])
    assert 1.8 < e1 / e2 < 2.2


def test_heat_limit_l2():
    f, _ = simulate(heat_params(), GridSpec(L=10.0, N_x=200, T=1.0, N_t=160))
    assert gaussian_l2_error(f, 1.0) < 0.02


def test_discrete_delta_needs_even_nodes():
    with pytest.raises(ConfigError):
        initial_row(SchemeParams(), GridSpec(L=10.0, N_x=41, T=1.0, N_t=10))


@pytest.mark.parametrize("kw", [dict(alpha=1.0), dict(alpha=0.0), dict(lam=0.0), dict(sigma=-1.0),
                                dict(k1=0.6, k2=0.5), dict(m_star=0), dict(scheme_variant="implicit"),
                                dict(ic="gaussian", ic_width=0.0)])
def test_params_validated(kw):
    with pytest.raises(ConfigError):
        SchemeParams(**kw)


# }}}
