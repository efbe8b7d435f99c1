from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fhi.errors import BlowUpError, ConfigError, ContractError
from fhi.grid import GridSpec
from fhi.inclusion import (
    IntervalMap,
    OdeKind,
    SelectorMode,
    SelectorPolicy,
    aumann_bounds,
    derive_rng,
    ode_inclusion_solve,
    ode_inclusion_verify,
    random_selector,
    selector_sample,
)

GRID = GridSpec(L=10.0, N_x=20, T=1.0, N_t=50)


def test_constant_selector():
    tab = selector_sample(SelectorPolicy("constant", constant=0.3), IntervalMap.linear(0.1, 0.5), GRID)
    assert np.all(tab.values == 0.3)
    with pytest.raises(ConfigError):
        selector_sample(SelectorPolicy("constant", constant=0.7), IntervalMap.linear(0.1, 0.5), GRID)


def test_extremal_selectors():
    imap = IntervalMap.linear(0.1, 0.5)
    assert np.all(selector_sample(SelectorPolicy("lower_extremal"), imap, GRID).values == 0.1)
    assert np.all(selector_sample(SelectorPolicy("upper_extremal"), imap, GRID).values == 0.5)


def test_uniform_per_step_deterministic():
    pol = SelectorPolicy("uniform_per_step", rng_seed=11)
    a = selector_sample(pol, IntervalMap.linear(0.1, 0.5), GRID)
    b = selector_sample(pol, IntervalMap.linear(0.1, 0.5), GRID)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.values.shape == (GRID.N_t,)
    c = selector_sample(SelectorPolicy("uniform_per_step", rng_seed=12), IntervalMap.linear(0.1, 0.5), GRID)
    assert not np.array_equal(a.values, c.values)


def test_uniform_per_step_mean():
    g = GridSpec(L=1.0, N_x=2, T=1.0, N_t=10_000)
    tab = selector_sample(SelectorPolicy("uniform_per_step", rng_seed=3), IntervalMap.linear(0.1, 0.5), g)
    sigma = 0.4 / math.sqrt(12 * 1e4)
    assert abs(tab.values.mean() - 0.3) < 3 * sigma


@pytest.mark.parametrize("mode", list(SelectorMode))
def test_selector_containment(mode):
    g = GridSpec(L=4.0, N_x=99, T=1.0, N_t=100)  # 10^4 node evaluations
    pol = SelectorPolicy(mode, rng_seed=5, constant=0.25)
    imap = IntervalMap.absolute(lambda t, x, y: 0.1 + 0.05 * np.sin(x) ** 2 + 0.0 * t,
                                lambda t, x, y: 0.4 + 0.1 * np.cos(x) ** 2 + 0.0 * t)
    tab = selector_sample(pol, imap, g)
    vals = np.broadcast_to(tab.values.reshape(g.N_t, -1), (g.N_t, g.N_x + 1))
    tt, xx = np.meshgrid(g.t[1:], g.x, indexing="ij")
    lo, hi = imap.bounds(tt, xx)
    assert np.all(vals >= lo) and np.all(vals <= hi)


def test_linear_map_validation():
    with pytest.raises(ConfigError):
        IntervalMap.linear(0.5, 0.5)
    with pytest.raises(ConfigError):
        IntervalMap.linear(-0.1, 0.5)


def test_per_node_table_shape():
    tab = selector_sample(SelectorPolicy("uniform_per_node", rng_seed=1), IntervalMap.linear(0, 1), GRID)
    assert tab.per_node and tab.values.shape == (GRID.N_t, GRID.N_x + 1)
    assert not tab.values.flags.writeable


def test_derive_rng_streams_differ():
    a = derive_rng(7, 0).random(5)
    b = derive_rng(7, 1).random(5)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, derive_rng(7, 0).random(5))


# {{{ Aumann integral


def test_aumann_examples():
    x = 0.7
    iv = aumann_bounds(lambda t: 0.0, lambda t: 1.0, 0.0, x)
    assert (iv.lo, iv.hi) == pytest.approx((0.0, x))
    iv = aumann_bounds(lambda t: t, lambda t: 2 * t, 0.0, 1.0)
    assert (iv.lo, iv.hi) == pytest.approx((0.5, 1.0), abs=1e-12)
    iv = aumann_bounds(lambda t: math.sin(t) ** 2, lambda t: 1.0, 0.0, math.pi)
    assert (iv.lo, iv.hi) == pytest.approx((math.pi / 2, math.pi), abs=1e-10)


@given(st.integers(0, 10_000))
def test_aumann_consistency(seed):
    g = random_selector(derive_rng(seed), 0.05, 0.95)
    iv = aumann_bounds(lambda t: 0.05, lambda t: 0.95, 0.0, 2.0)
    val, err = integrate.quad(g, 0.0, 2.0)
    assert iv.contains(val, slack=iv.abserr + err)


# }}}


# {{{ ODE inclusions


def test_reciprocal_boundary_case():
    x = np.linspace(0, 0.9, 91)
    f = ode_inclusion_solve("reciprocal_type", lambda t: np.ones_like(t), x, allow_boundary=True)
    np.testing.assert_allclose(f, 1 / (1 - x), atol=1e-10)


def test_boundary_needs_flag():
    with pytest.raises(ContractError):
        ode_inclusion_solve("reciprocal_type", 1.0, np.linspace(0, 0.9, 10))


def test_reciprocal_blow_up_location():
    x = np.linspace(0, 2, 21)
    with pytest.raises(BlowUpError) as info:
        ode_inclusion_solve("reciprocal_type", 0.9, x)
    # int_0^x 0.9 dt reaches 1 first at x = 1.2 on this grid
    assert info.value.location["index"] == 12


def test_solver_examples():
    assert ode_inclusion_solve("exp_type", 0.5, np.linspace(0, 2, 201))[-1] == pytest.approx(math.e, rel=1e-12)
    x = np.linspace(0, 1, 1001)
    # g(0) = 0 sits on the closed boundary
    f = ode_inclusion_solve("sqrt_type", lambda t: t / 2, x, allow_boundary=True)
    assert f[-1] == pytest.approx(math.sqrt(1.5), rel=1e-7)
    assert f[0] == 1.0


def test_verify_examples():
    x = np.linspace(0, 2, 101)
    assert ode_inclusion_verify("exp_type", x, np.exp(x / 2)).passed
    rep = ode_inclusion_verify("exp_type", x, np.ones_like(x))
    assert not rep.passed and rep.first_failure() == pytest.approx(x[1])
    x = np.linspace(0, 1, 101)
    assert ode_inclusion_verify("reciprocal_type", x, 1 / (1 - 0.5 * x)).passed


@pytest.mark.parametrize("kind", list(OdeKind))
def test_round_trip(kind):
    x = np.linspace(0, 1, 201)
    h = x[1] - x[0]
    rng = derive_rng(99, list(OdeKind).index(kind))
    for _ in range(25):
        f = ode_inclusion_solve(kind, random_selector(rng), x)
        assert ode_inclusion_verify(kind, x, f, 10 * h * h).passed


# }}}
