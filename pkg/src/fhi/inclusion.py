"""Interval-valued drifts, their selectors, and the scalar ODE inclusions

    f' in (0, f),    f' in (0, 1/f),    f' in (0, f**2),    f(0) = 1,

whose solutions are parametrized by a selector ``g`` with values in (0, 1).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from fhi.errors import AccuracyError, BlowUpError, ConfigError, ContractError
from fhi.grid import GridSpec

__all__ = [
    "EPS",
    "Interval",
    "IntervalMap",
    "OdeKind",
    "SelectorMode",
    "SelectorPolicy",
    "SelectorTable",
    "VerifyReport",
    "aumann_bounds",
    "derive_rng",
    "ode_inclusion_solve",
    "ode_inclusion_verify",
    "random_selector",
    "selector_sample",
]

#: margin that keeps sampled selectors inside the open interval (0, 1)
EPS = 1e-6


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox stream for ``(seed, *key)``; streams for distinct keys are independent."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# {{{ interval maps and selectors


class MapKind(str, enum.Enum):
    absolute = "absolute"
    linear = "linear"


@dataclass(frozen=True)
class IntervalMap:
    """Interval-valued map ``(t, x, y) -> [lo, hi]``.

    For the ``linear`` kind the bounds are ``k1*y`` and ``k2*y`` and selectors
    are represented by their coefficient ``k`` in ``[k1, k2]``.
    """

    lo: Callable
    hi: Callable
    kind: MapKind = MapKind.absolute
    k1: float | None = None
    k2: float | None = None

    @classmethod
    def linear(cls, k1: float, k2: float) -> IntervalMap:
        if not (0.0 <= k1 < k2 and math.isfinite(k2)):
            raise ConfigError(f"need 0 <= k1 < k2, got k1={k1!r}, k2={k2!r}", field="k1")
        return cls(lo=lambda t, x, y: k1 * y, hi=lambda t, x, y: k2 * y,
                   kind=MapKind.linear, k1=float(k1), k2=float(k2))

    @classmethod
    def absolute(cls, lo: Callable, hi: Callable) -> IntervalMap:
        return cls(lo=lo, hi=hi, kind=MapKind.absolute)

    def bounds(self, t, x, y=0.0):
        """Broadcast ``(lo, hi)``; for the linear kind these are the coefficient bounds."""
        if self.kind is MapKind.linear:
            return self.k1, self.k2
        lo = np.asarray(self.lo(t, x, y), dtype=float)
        hi = np.asarray(self.hi(t, x, y), dtype=float)
        if np.any(lo > hi):
            raise ContractError("interval map has lo > hi somewhere on the grid")
        return lo, hi


class SelectorMode(str, enum.Enum):
    constant = "constant"
    lower_extremal = "lower_extremal"
    upper_extremal = "upper_extremal"
    uniform_per_step = "uniform_per_step"
    uniform_per_node = "uniform_per_node"


@dataclass(frozen=True)
class SelectorPolicy:
    mode: SelectorMode = SelectorMode.uniform_per_step
    rng_seed: int = 0
    constant: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", SelectorMode(self.mode))
        if self.mode is SelectorMode.constant and self.constant is None:
            raise ConfigError("constant selector needs a value", field="selector_constant")


@dataclass(frozen=True)
class SelectorTable:
    """Selector values for steps ``n = 1..N_t`` (row ``n-1``).

    ``values`` has shape ``(N_t,)`` for per-step modes and ``(N_t, N_x+1)`` for
    ``uniform_per_node``. Immutable once built.
    """

    values: np.ndarray = field(repr=False)
    mode: SelectorMode
    lo: float
    hi: float

    @property
    def per_node(self) -> bool:
        return self.values.ndim == 2

    def at(self, n: int):
        """Coefficient(s) for step ``n >= 1``."""
        return self.values[n - 1]

    def stats(self) -> dict:
        v = self.values
        return {"mode": self.mode.value, "min": float(v.min()), "max": float(v.max()),
                "mean": float(v.mean()), "bounds": [self.lo, self.hi]}


def selector_sample(policy: SelectorPolicy, imap: IntervalMap, grid: GridSpec,
                    path: int = 0) -> SelectorTable:
    """Build the selector table on ``grid`` (steps ``1..N_t``), deterministic in
    ``(policy.rng_seed, path)``."""
    n_t, n_nodes = grid.N_t, grid.N_x + 1
    if imap.kind is MapKind.linear:
        lo, hi = imap.k1, imap.k2
    else:
        tt, xx = np.meshgrid(grid.t[1:], grid.x, indexing="ij")
        lo_a, hi_a = imap.bounds(tt, xx)
        lo, hi = float(np.min(lo_a)), float(np.max(hi_a))
    mode = policy.mode
    per_node = mode is SelectorMode.uniform_per_node
    shape = (n_t, n_nodes) if per_node else (n_t,)

    if mode is SelectorMode.constant:
        c = float(policy.constant)
        if not lo <= c <= hi:
            raise ConfigError(f"constant selector {c} outside [{lo}, {hi}]", field="selector_constant")
        u = None
        values = np.full(shape, c)
    elif mode is SelectorMode.lower_extremal:
        u = np.zeros(shape)
    elif mode is SelectorMode.upper_extremal:
        u = np.ones(shape)
    else:
        u = derive_rng(policy.rng_seed, path).random(shape)

    if u is not None:
        if imap.kind is MapKind.linear:
            values = np.clip(lo + u * (hi - lo), lo, hi)
        else:
            # absolute kind: interpolate between the pointwise bounds at y = 0
            lo_a = np.broadcast_to(lo_a, (n_t, n_nodes))
            hi_a = np.broadcast_to(hi_a, (n_t, n_nodes))
            if not per_node:
                lo_a, hi_a = lo_a.max(axis=1), hi_a.min(axis=1)
                if np.any(lo_a > hi_a):
                    raise ContractError("no common per-step selector value across nodes")
            values = np.clip(lo_a + u * (hi_a - lo_a), lo_a, hi_a)
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return SelectorTable(values=values, mode=mode, lo=float(lo), hi=float(hi))


# }}}


# {{{ Aumann integral


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    abserr: float = 0.0

    def contains(self, v: float, slack: float | None = None) -> bool:
        slack = self.abserr if slack is None else slack
        return self.lo - slack <= v <= self.hi + slack

    def __iter__(self):
        return iter((self.lo, self.hi))


def _quad(f, a, b, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, limit=200, epsabs=1e-12, epsrel=1e-12)
        except integrate.IntegrationWarning as exc:
            raise AccuracyError(f"quadrature of the {what} bound did not converge: {exc}") from exc
    return val, err


def aumann_bounds(lo: Callable, hi: Callable, a: float, b: float) -> Interval:
    """Aumann integral of ``t -> [lo(t), hi(t)]`` over ``[a, b]``: the interval
    ``[int lo, int hi]`` that contains every selector's integral."""
    vlo, elo = _quad(lo, a, b, "lower")
    vhi, ehi = _quad(hi, a, b, "upper")
    if vlo > vhi + elo + ehi:
        raise ContractError("lower bound integrates above the upper bound")
    return Interval(lo=vlo, hi=vhi, abserr=elo + ehi)


# }}}


# {{{ scalar ODE inclusions


class OdeKind(str, enum.Enum):
    exp_type = "exp_type"
    sqrt_type = "sqrt_type"
    reciprocal_type = "reciprocal_type"


def _rhs(kind: OdeKind, f: np.ndarray) -> np.ndarray:
    if kind is OdeKind.exp_type:
        return f
    if kind is OdeKind.sqrt_type:
        return 1.0 / f
    return f * f


def ode_inclusion_solve(kind, g, x_grid, *, allow_boundary: bool = False) -> np.ndarray:
    """Closed-form solution of the inclusion selected by ``g``.

    Parameters
    ----------
    kind : OdeKind or str
        ``exp_type`` gives ``exp(G)``, ``sqrt_type`` gives ``sqrt(1 + 2G)`` and
        ``reciprocal_type`` gives ``1/(1 - G)``, with ``G(x) = int_0^x g``.
    g : callable or array_like
        Selector, evaluated at ``x_grid`` when callable.
    x_grid : array_like
        Increasing nodes starting at 0.
    allow_boundary : bool
        Accept selector values on the closed interval ``[0, 1]``; needed for
        boundary cases such as ``g == 1``.

    Raises
    ------
    BlowUpError
        ``reciprocal_type`` with ``G`` reaching 1; carries the first offending node.
    """
    kind = OdeKind(kind)
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or x[0] != 0.0 or np.any(np.diff(x) <= 0):
        raise ContractError("x_grid must be increasing and start at 0")
    gv = np.asarray(g(x) if callable(g) else g, dtype=float)
    gv = np.broadcast_to(gv, x.shape)
    if allow_boundary:
        ok = (gv >= 0.0) & (gv <= 1.0)
    else:
        ok = (gv > 0.0) & (gv < 1.0)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise ContractError(f"selector value {float(gv[i])!r} at x={float(x[i])!r} "
                            "is outside the admissible interval")
    G = integrate.cumulative_trapezoid(gv, x, initial=0.0)
    if kind is OdeKind.exp_type:
        return np.exp(G)
    if kind is OdeKind.sqrt_type:
        return np.sqrt(1.0 + 2.0 * G)
    bad = np.nonzero(G >= 1.0)[0]
    if bad.size:
        i = int(bad[0])
        raise BlowUpError("integral of the selector reached 1", index=i, x=float(x[i]),
                          diagnostic={"integral": float(G[i])})
    return 1.0 / (1.0 - G)


@dataclass(frozen=True)
class VerifyReport:
    """Per-node check of ``0 < f'(x_i) < rhs(f(x_i)) + tol`` at interior nodes."""

    x: np.ndarray
    derivative: np.ndarray
    rhs: np.ndarray
    lower_ok: np.ndarray
    upper_ok: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lower_ok) and np.all(self.upper_ok))

    def __bool__(self) -> bool:
        return self.passed

    def first_failure(self):
        bad = np.nonzero(~(self.lower_ok & self.upper_ok))[0]
        return None if bad.size == 0 else float(self.x[bad[0]])


def ode_inclusion_verify(kind, x_grid, f, tol: float = 0.0) -> VerifyReport:
    """Central-difference check of a sampled solution against its inclusion."""
    kind = OdeKind(kind)
    x = np.asarray(x_grid, dtype=float)
    fv = np.asarray(f, dtype=float)
    if x.shape != fv.shape or x.size < 3:
        raise ContractError("x and f must be 1-D arrays of equal length >= 3")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise ContractError("verification needs a uniform grid")
    if np.any(fv <= 0):
        raise ContractError("f must be positive")
    deriv = (fv[2:] - fv[:-2]) / (x[2:] - x[:-2])
    rhs = _rhs(kind, fv[1:-1])
    return VerifyReport(x=x[1:-1], derivative=deriv, rhs=rhs,
                        lower_ok=deriv > 0.0, upper_ok=deriv < rhs + tol)


def random_selector(rng: np.random.Generator, lo: float = 0.05, hi: float = 0.95,
                    n_modes: int = 4, scale: float = 1.0) -> Callable:
    """Smooth random function with values in ``[lo, hi]``: a squashed random
    trigonometric sum."""
    amp = rng.normal(size=n_modes) / np.arange(1, n_modes + 1)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
    freq = scale * np.arange(1, n_modes + 1)
    offset = rng.normal()
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def g(t):
        t = np.asarray(t, dtype=float)
        s = offset + np.sum(amp[:, None] * np.sin(np.outer(freq, t.ravel()) + phase[:, None]), axis=0)
        return (mid + half * np.tanh(s)).reshape(t.shape)

    return g


# }}}
