"""Explicit finite-difference stepper on ``[-L/2, L/2]`` with Dirichlet walls.

Two update rules share the same memory sum
``M^n = sum_{j=1}^{min(n-1, m*)} w_j (Y^{n-j} - Y^{n-j-1})``:

``paper_literal``
    ``Y^n = Y^{n-1} + dt (lam Lap Y^{n-1} -/+ k^n Y^{n-1} - M^n) + xi^n``, the
    memory entering as an explicit drift.
``l1_standard``
    the L1 discretization ``sum_{j=1}^{n} w_j (Y^{n-j+1} - Y^{n-j}) = F^{n-1}``
    solved for the newest value, with ``F = lam Lap Y -/+ k Y + xi/dt``.

``xi^n`` is the scaled noise row (see :mod:`fhi.noise`).
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gamma

from fhi.errors import BlowUpError, ConfigError, ContractError
from fhi.fractional_calculus import CaputoWeights, caputo_weights
from fhi.grid import GridSpec
from fhi.inclusion import IntervalMap, SelectorMode, SelectorPolicy, SelectorTable, selector_sample
from fhi.noise import NoiseScaling, white_noise_field
from fhi.report import RunReport

__all__ = [
    "AbsorptionSign",
    "Field",
    "InitialCondition",
    "SchemeParams",
    "SchemeVariant",
    "StabilityReport",
    "initial_row",
    "laplacian_1d",
    "simulate",
    "simulate_paths",
    "stability_check",
    "step",
]


class SchemeVariant(str, enum.Enum):
    paper_literal = "paper_literal"
    l1_standard = "l1_standard"


class AbsorptionSign(str, enum.Enum):
    sink = "sink"      # -k Y
    source = "source"  # +k Y


class InitialCondition(str, enum.Enum):
    discrete_delta = "discrete_delta"
    gaussian = "gaussian"
    zero = "zero"


@dataclass(frozen=True)
class SchemeParams:
    alpha: float = 0.8
    lam: float = 0.1
    sigma: float = 0.5
    k1: float = 0.1
    k2: float = 0.5
    m_star: int = 15
    scheme_variant: SchemeVariant = SchemeVariant.paper_literal
    absorption_sign: AbsorptionSign = AbsorptionSign.sink
    ic: InitialCondition = InitialCondition.discrete_delta
    ic_width: float = 1.0
    noise_scaling: NoiseScaling = NoiseScaling.paper_literal

    def __post_init__(self):
        for name, enum_type in (("scheme_variant", SchemeVariant), ("absorption_sign", AbsorptionSign),
                                ("ic", InitialCondition), ("noise_scaling", NoiseScaling)):
            try:
                object.__setattr__(self, name, enum_type(getattr(self, name)))
            except ValueError:
                choices = ", ".join(e.value for e in enum_type)
                raise ConfigError(f"must be one of {choices}, got {getattr(self, name)!r}", name) from None
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"the grid scheme needs 0 < alpha < 1, got {self.alpha!r}", "alpha")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"must be > 0, got {self.lam!r}", "lam")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError(f"must be >= 0, got {self.sigma!r}", "sigma")
        if not (0.0 <= self.k1 <= self.k2 and math.isfinite(self.k2)):
            raise ConfigError(f"need 0 <= k1 <= k2, got k1={self.k1!r}, k2={self.k2!r}", "k1")
        if int(self.m_star) != self.m_star or self.m_star < 1:
            raise ConfigError(f"must be a positive integer, got {self.m_star!r}", "m_star")
        if self.ic is InitialCondition.gaussian and not self.ic_width > 0:
            raise ConfigError("must be > 0 for a gaussian initial condition", "ic_width")

    def as_dict(self) -> dict:
        return {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in asdict(self).items()}


@dataclass(frozen=True)
class Field:
    """Solution matrix ``Y[n, i]`` for ``n = 0..N_t``, ``i = 0..N_x``."""

    Y: np.ndarray = field(repr=False)
    grid: GridSpec

    def __post_init__(self):
        if self.Y.shape != (self.grid.N_t + 1, self.grid.N_x + 1):
            raise ContractError(f"field shape {self.Y.shape} does not match the grid")

    def at(self, t: float, x: float) -> float:
        return float(self.Y[self.grid.step_index(t), self.grid.node_index(x)])


def laplacian_1d(row, dx: float) -> np.ndarray:
    """Centred second difference along the last axis; end entries are 0."""
    u = np.asarray(row, dtype=float)
    if u.shape[-1] < 3:
        raise ContractError("row must have at least 3 entries")
    out = np.zeros_like(u)
    out[..., 1:-1] = (u[..., 2:] - 2.0 * u[..., 1:-1] + u[..., :-2]) / (dx * dx)
    return out


def initial_row(p: SchemeParams, grid: GridSpec) -> np.ndarray:
    y0 = np.zeros(grid.N_x + 1)
    if p.ic is InitialCondition.discrete_delta:
        if grid.N_x % 2:
            raise ConfigError("discrete_delta needs an even N_x so that x = 0 is a node", "N_x")
        y0[grid.N_x // 2] = 1.0 / grid.dx
    elif p.ic is InitialCondition.gaussian:
        w = p.ic_width
        y0 = np.exp(-0.5 * (grid.x / w) ** 2) / (w * math.sqrt(2.0 * math.pi))
    y0[0] = y0[-1] = 0.0
    return y0


# {{{ stability


@dataclass(frozen=True)
class StabilityReport:
    """Advisory stability diagnostic.

    ``diagonal`` is the weight of ``Y^{n-1}_i`` in the update of ``Y^n_i``;
    when it and the neighbour weights are non-negative the update is a convex
    combination and cannot amplify the previous row.
    """

    r: float
    dt_k2: float
    w1: float
    diagonal: float
    passed: bool
    warnings: tuple = ()
    suggested_dt: float | None = None

    @property
    def margin(self) -> float:
        return self.diagonal


def _diagonal(p: SchemeParams, dt: float, dx: float) -> float:
    k = p.k2 if p.absorption_sign is AbsorptionSign.sink else 0.0
    if p.scheme_variant is SchemeVariant.paper_literal:
        w1 = 1.0 / (gamma(2.0 - p.alpha) * dt**p.alpha)
        return 1.0 - 2.0 * p.lam * dt / dx**2 - dt * k - dt * w1
    tau = gamma(2.0 - p.alpha) * dt**p.alpha
    return 1.0 - (2.0 ** (1.0 - p.alpha) - 1.0) - tau * (2.0 * p.lam / dx**2 + k)


def stability_check(p: SchemeParams, g: GridSpec) -> StabilityReport:
    dt, dx = g.dt, g.dx
    r = p.lam * dt / dx**2
    w1 = 1.0 / (gamma(2.0 - p.alpha) * dt**p.alpha)
    diag = _diagonal(p, dt, dx)
    notes = []
    if r > 0.5:
        notes.append(f"r = lam*dt/dx^2 = {r:.4g} exceeds 0.5")
    if dt * p.k2 > 0.1:
        notes.append(f"dt*k2 = {dt * p.k2:.4g} exceeds 0.1")
    if diag < 0:
        notes.append(f"diagonal update weight {diag:.4g} is negative")
    suggested = None
    if notes:
        def ok(h):
            return (p.lam * h / dx**2 <= 0.5 and h * p.k2 <= 0.1 and _diagonal(p, h, dx) >= 0)
        lo, hi = 0.0, dt
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        # for paper_literal near alpha = 1, dt*w1 stays close to 1 for every dt,
        # so no dt at this dx works and lo stays 0
        suggested = float(lo) if lo > 0 else None
        if suggested is None:
            notes.append("no time step satisfies all conditions at this dx and variant")
    return StabilityReport(r=float(r), dt_k2=float(dt * p.k2), w1=float(w1),
                           diagonal=float(diag), passed=not notes,
                           warnings=tuple(notes), suggested_dt=suggested)


# }}}


# {{{ stepping


def _sign(p: SchemeParams) -> float:
    return -1.0 if p.absorption_sign is AbsorptionSign.sink else 1.0


def _memory(weights: np.ndarray, h: np.ndarray):
    # unoptimized einsum sums over j in order for each output element, so the
    # result does not depend on how paths are batched (BLAS-backed tensordot can)
    if weights.size == 0:
        return 0.0
    return np.einsum("j,j...->...", weights, h)


def step(prev: np.ndarray, history: np.ndarray, w: CaputoWeights, k_n, noise_row,
         p: SchemeParams, dx: float) -> np.ndarray:
    """One update producing ``Y^n`` from ``Y^{n-1}``.

    Parameters
    ----------
    prev : ndarray
        ``Y^{n-1}`` (last axis is space; leading axes are carried through).
    history : ndarray
        Differences ``Y^{n-j} - Y^{n-j-1}`` for ``j = 1..min(n-1, m*)``,
        newest first, shape ``(j_max, *prev.shape)``.
    k_n : float or ndarray
        Absorption coefficient for this step, broadcastable against ``prev``.
    noise_row : ndarray or None
        Scaled noise ``xi^n``; ``None`` for no noise.
    """
    h = np.asarray(history, dtype=float)
    if h.shape[0] > w.m_star:
        raise ContractError(f"history has {h.shape[0]} entries but m_star is {w.m_star}")
    wv = _variant_weights(w, p)
    n_hist = min(h.shape[0], wv.size)
    return _update(prev, _memory(wv[:n_hist], h[:n_hist]), w, k_n, noise_row, p, dx)


def _variant_weights(w: CaputoWeights, p: SchemeParams) -> np.ndarray:
    # weights paired with the stored differences, newest first; for l1_standard
    # the newest increment carries w_1 implicitly, so history j pairs with w_{j+1}
    if p.scheme_variant is SchemeVariant.paper_literal:
        return w.w
    return w.w[1:]


def _update(prev, mem, w: CaputoWeights, k_n, noise_row, p: SchemeParams, dx: float) -> np.ndarray:
    dt = w.dt
    drift = p.lam * laplacian_1d(prev, dx) + _sign(p) * k_n * prev
    if p.scheme_variant is SchemeVariant.paper_literal:
        nxt = prev + dt * (drift - mem)
        if noise_row is not None:
            nxt = nxt + noise_row
    else:
        rhs = drift - mem
        if noise_row is not None:
            rhs = rhs + noise_row / dt
        nxt = prev + rhs / w.w[0]
    nxt = np.array(nxt, dtype=float)
    nxt[..., 0] = 0.0
    nxt[..., -1] = 0.0
    return nxt


def _run(y0: np.ndarray, k: np.ndarray, xi: np.ndarray | None, p: SchemeParams, grid: GridSpec,
         w: CaputoWeights, *, store: bool = True, probe: int | None = None, seeds=None):
    """Step a batch of paths. ``y0``: (B, K); ``k``: (B, N_t) or (B, N_t, K);
    ``xi``: (B, N_t, K) or None. Returns the full (B, N_t+1, K) array when
    ``store`` and otherwise the probe column (B, N_t+1)."""
    B, K = y0.shape
    wv = _variant_weights(w, p)
    M = wv.size
    # circular history: slot (pos - j) % M holds the difference j steps back
    ring = np.zeros((M, B, K))
    aligned = np.zeros(M)
    pos = -1
    n_hist = 0
    prev = y0.copy()
    if store:
        out = np.empty((B, grid.N_t + 1, K))
        out[:, 0] = prev
    else:
        out = np.empty((B, grid.N_t + 1))
        out[:, 0] = prev[:, probe]
    per_node = k.ndim == 3
    for n in range(1, grid.N_t + 1):
        kn = k[:, n - 1] if per_node else k[:, n - 1, None]
        with np.errstate(over="ignore", invalid="ignore"):  # reported below as BlowUpError
            # slots fill in order, so only the first n_hist are live until the ring wraps
            mem = _memory(aligned[:n_hist], ring[:n_hist]) if n_hist else 0.0
            nxt = _update(prev, mem, w, kn, None if xi is None else xi[:, n - 1], p, grid.dx)
        if not np.all(np.isfinite(nxt)):
            bad = np.argwhere(~np.isfinite(nxt))[0]
            b, i = int(bad[0]), int(bad[1])
            loc = {"step": n, "node": i}
            if seeds is not None:
                loc["path"] = seeds[b]
            st = stability_check(p, grid)
            raise BlowUpError("non-finite value in the field", diagnostic={
                "r": st.r, "diagonal": st.diagonal, "dt_k2": st.dt_k2,
                "max_abs_prev": float(np.max(np.abs(prev[b])))}, **loc)
        if M:
            pos = (pos + 1) % M
            ring[pos] = nxt - prev
            n_hist = min(n_hist + 1, M)
            aligned[:] = 0.0
            idx = (pos - np.arange(n_hist)) % M
            aligned[idx] = wv[:n_hist]
        prev = nxt
        if store:
            out[:, n] = prev
        else:
            out[:, n] = prev[:, probe]
    return out


def _inputs(p: SchemeParams, grid: GridSpec, policy: SelectorPolicy, seed: int, path: int):
    if p.k1 == p.k2:
        values = np.full(grid.N_t, p.k1)
        values.setflags(write=False)
        table = SelectorTable(values=values, mode=SelectorMode.constant, lo=p.k1, hi=p.k2)
    else:
        table = selector_sample(policy, IntervalMap.linear(p.k1, p.k2), grid, path=path)
    xi = None
    if p.sigma > 0:
        xi = white_noise_field(grid, seed, p.noise_scaling, path=path).increments(p.sigma)
    return table, xi


def simulate_paths(p: SchemeParams, grid: GridSpec, policy: SelectorPolicy, seed: int, paths,
                   *, probe: int | None = None, store: bool = False) -> np.ndarray:
    """Run several paths together; path ``j`` uses noise stream ``(seed, j)`` and
    selector stream ``(policy.rng_seed, j)``.

    Returns the probe column ``(B, N_t+1)`` (``probe`` is a node index) or, with
    ``store=True``, full fields ``(B, N_t+1, N_x+1)``.
    """
    paths = list(paths)
    if not store and probe is None:
        raise ContractError("give a probe node or store=True")
    w = caputo_weights(p.alpha, grid.dt, p.m_star)
    tables, xis = zip(*(_inputs(p, grid, policy, seed, j) for j in paths))
    k = np.stack([t.values for t in tables])
    xi = None if xis[0] is None else np.stack(xis)
    y0 = np.broadcast_to(initial_row(p, grid), (len(paths), grid.N_x + 1))
    return _run(y0, k, xi, p, grid, w, store=store, probe=probe, seeds=paths)


def simulate(p: SchemeParams, g: GridSpec, policy: SelectorPolicy | None = None, seed: int = 0, *,
             override: bool = False, path: int = 0) -> tuple[Field, RunReport]:
    """Full solution matrix for one path plus its report.

    Raises :class:`ConfigError` when the stability check fails and
    ``override`` is not set.
    """
    t0 = time.perf_counter()
    policy = policy or SelectorPolicy(SelectorMode.uniform_per_step, rng_seed=seed)
    stab = stability_check(p, g)
    if not stab.passed and not override:
        raise ConfigError("stability check failed: " + "; ".join(stab.warnings)
                          + (f" (suggested dt <= {stab.suggested_dt:.4g})" if stab.suggested_dt else ""),
                          "dt")
    w = caputo_weights(p.alpha, g.dt, p.m_star)
    table, xi = _inputs(p, g, policy, seed, path)
    y0 = initial_row(p, g)[None, :]
    k = table.values[None, ...]
    Y = _run(y0, k, None if xi is None else xi[None], p, g, w, store=True, seeds=[path])[0]
    Y.setflags(write=False)
    fld = Field(Y=Y, grid=g)
    max_abs = float(np.max(np.abs(Y)))
    report = RunReport(
        command="simulate",
        config={**p.as_dict(), "L": g.L, "N_x": g.N_x, "T": g.T, "N_t": g.N_t,
                "selector_mode": policy.mode.value, "selector_seed": policy.rng_seed,
                "selector_constant": policy.constant},
        seed=seed,
        diagnostics={
            "stability": {"passed": stab.passed, "r": stab.r, "dt_k2": stab.dt_k2, "w1": stab.w1,
                          "margin": stab.diagonal, "warnings": list(stab.warnings),
                          "override": bool(override and not stab.passed)},
            "selector": table.stats(),
            # linear selectors are unbounded in Y; record the bound this run realized
            "realized_drift_bound": p.k2 * max_abs,
            "max_abs_Y": max_abs,
            "boundary_max_abs": float(max(np.max(np.abs(Y[:, 0])), np.max(np.abs(Y[:, -1])))),
            "noise_scaling": p.noise_scaling.value,
            "memory_truncation_weight": w.first_dropped(),
        },
    ).finish(t0)
    return fld, report


# }}}
