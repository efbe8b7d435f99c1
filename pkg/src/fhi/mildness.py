r"""Second-moment finiteness of the solution as a function of (alpha, d).

Theory: the solution is mild when ``alpha = 1, d = 1`` or ``alpha > 1,
d in {1, 2}``, and not mild when ``alpha < 1`` or ``alpha = 1, d >= 2``.
Numerically, finiteness shows up in the truncated Plancherel integral

.. math::

    V(R) = (2\pi)^d \int_0^t \int_{|y| \le R} \Lambda(s, y)^2 \,dy\,ds
         = \int_0^t \int_{\mathbb{R}^d} h_R(s, \xi)^2 \,d\xi\,ds,

which either saturates as ``R`` grows or keeps climbing. ``V`` is the
physical-space squared-kernel integral, so the stochastic term has variance
``sigma**2 * V / (2*pi)**(2*d)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, roots_legendre

from fhi._parallel import thread_map
from fhi.errors import AccuracyError, BlowUpError, ContractError, DomainError
from fhi.fd_scheme import SchemeParams, simulate_paths
from fhi.grid import GridSpec
from fhi.inclusion import SelectorMode, SelectorPolicy
from fhi.mittag_leffler import mittag_leffler

__all__ = [
    "LadderStep",
    "MildnessCase",
    "MomentEstimate",
    "RefinementStep",
    "Verdict",
    "cutoff_ladder",
    "estimate_second_moment",
    "mildness_verdict",
    "refinement_ladder",
    "variance_integral",
]

#: ladder thresholds: increments below SETTLED count as saturation, above GROWING as growth
SETTLED = 0.01
GROWING = 0.1


class Verdict(str, enum.Enum):
    mild = "mild"
    not_mild = "not_mild"
    unknown_regime = "unknown_regime"


@dataclass(frozen=True)
class MildnessCase:
    alpha: float
    d: int
    verdict: Verdict

    @property
    def reason(self) -> str:
        if self.verdict is Verdict.mild:
            return "finite second moment"
        if self.verdict is Verdict.not_mild:
            return "second moment diverges"
        return "no classification for alpha > 1 and d >= 3"


def mildness_verdict(alpha: float, d: int) -> MildnessCase:
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    if alpha < 1.0 or (alpha == 1.0 and d >= 2):
        v = Verdict.not_mild
    elif alpha == 1.0 or d <= 2:
        v = Verdict.mild
    else:
        v = Verdict.unknown_regime
    return MildnessCase(alpha=float(alpha), d=d, verdict=v)


# {{{ Plancherel quadrature

_GL_X, _GL_W = roots_legendre(24)


def _unit_ball_half_surface(d: int) -> float:
    """Half the surface area of the unit sphere in R^d."""
    return math.pi ** (d / 2) / gamma(d / 2)


def _panel_sum(f, edges: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> float:
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    u = (a + half * (nodes + 1.0)).ravel()
    return float(np.sum(f(u).reshape(a.shape[0], -1) * (half * weights)))


def variance_integral(t: float, alpha: float, lam: float, d: int, R: float, *,
                      rtol: float = 1e-9) -> float:
    r"""Truncated Plancherel integral ``V(R)`` (see module docstring).

    The ``s``- and radial integrals are exchanged, leaving a single integral
    in ``U = lam * s**alpha * |y|**2``:

    .. math::

        V = (2\pi)^d \frac{\omega_d}{2\alpha} \lambda^{-d/2} \kappa^{-e}
            \int_0^{U_t} K_e(U)\, E_{\alpha,\alpha}(-U)^2\, U^{d/2-1}\,dU,

    with ``kappa = lam R^2``, ``U_t = kappa t^alpha``, ``e = 2 - 1/alpha - d/2``
    and ``K_e(U) = (U_t^e - U^e)/e`` (``log(U_t/U)`` when ``e = 0``). The piece
    ``[0, delta]`` is integrated analytically with ``E`` frozen at
    ``1/Gamma(alpha)``; the rest uses Gauss-Legendre on geometric panels,
    checked against a run with panels halved.

    Returns ``inf`` for ``alpha <= 1/2``, where the ``s -> 0`` singularity is
    not integrable for any cutoff.
    """
    if not (t > 0 and R > 0 and lam > 0):
        raise DomainError("need t > 0, R > 0 and lambda > 0")
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    if alpha <= 0.5:
        return math.inf
    kappa = lam * R * R
    u_t = kappa * t**alpha
    e = 2.0 - 1.0 / alpha - 0.5 * d
    h = 0.5 * d
    log_ut = math.log(u_t)

    if abs(e) < 1e-12:
        def kern(u):
            return log_ut - np.log(u)
        scale = 1.0
    else:
        # K_e(U) * kappa**-e without forming kappa**-e * U_t**e separately
        def kern(u):
            return -np.expm1(e * (np.log(u) - log_ut)) * u_t**e / e
        scale = kappa**-e

    def f(u):
        return kern(u) * mittag_leffler(-u, alpha, alpha) ** 2 * u ** (h - 1.0)

    delta = min(1e-12, 1e-12 * u_t)
    a = 1.0 / gamma(alpha)
    if abs(e) < 1e-12:
        head = delta**h / h * (log_ut - math.log(delta) + 1.0 / h)
    else:
        head = (u_t**e * delta**h / h - delta ** (e + h) / (e + h)) / e
    head *= a * a

    def integrate(per_decade: int) -> float:
        n = max(2, int(math.ceil(per_decade * (log_ut - math.log(delta)) / math.log(10.0))))
        edges = np.exp(np.linspace(math.log(delta), log_ut, n + 1))
        return _panel_sum(f, edges, _GL_X, _GL_W)

    coarse = integrate(4)
    fine = integrate(8)
    if abs(fine - coarse) > rtol * abs(fine) + 1e-300:
        raise AccuracyError(
            f"variance quadrature not converged: {coarse!r} vs {fine!r} "
            f"(alpha={alpha}, d={d}, R={R})")
    v_lambda = _unit_ball_half_surface(d) / alpha * lam ** (-h) * scale * (head + fine)
    return float((2.0 * math.pi) ** d * v_lambda)


@dataclass(frozen=True)
class LadderStep:
    R: float
    V: float
    V_double: float

    @property
    def increment(self) -> float:
        """``V(2R)/V(R) - 1``."""
        return self.V_double / self.V - 1.0


def cutoff_ladder(alpha: float, d: int, t: float = 1.0, lam: float = 0.1,
                  radii=(50.0, 100.0, 200.0)) -> list[LadderStep]:
    """``V(R)`` and ``V(2R)`` at each cutoff in ``radii``."""
    cache: dict[float, float] = {}

    def v(r):
        if r not in cache:
            cache[r] = variance_integral(t, alpha, lam, d, r)
        return cache[r]

    return [LadderStep(R=float(r), V=v(r), V_double=v(2 * r)) for r in radii]


# }}}


# {{{ Monte Carlo second moment


@dataclass(frozen=True)
class MomentEstimate:
    """Sample moments of ``Y(t_probe, x_probe)`` over independent paths."""

    mean: float
    second_moment: float
    standard_error: float
    mean_standard_error: float
    n_paths: int
    samples: np.ndarray = field(repr=False, default=None)


def _jackknife_se(values: np.ndarray) -> float:
    n = values.size
    loo = (values.sum() - values) / (n - 1)
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def estimate_second_moment(p, grid, x_probe: float, t_probe: float, n_paths: int, seed: int,
                           policy=None, *, batch: int = 100) -> MomentEstimate:
    """Monte Carlo mean and second moment of the field at one lattice point.

    Path ``j`` uses noise stream ``(seed, j)``; batches of paths are stepped
    together and spread over ``FHI_THREADS`` workers. Results do not depend on
    the batch size or worker count. Standard errors are jackknife estimates.
    """
    if n_paths < 100:
        raise ContractError(f"need at least 100 paths, got {n_paths}")
    policy = policy or SelectorPolicy(SelectorMode.uniform_per_step, rng_seed=seed)
    i = grid.node_index(x_probe)
    n = grid.step_index(t_probe)
    chunks = [range(s, min(s + batch, n_paths)) for s in range(0, n_paths, batch)]

    def run(paths):
        try:
            return simulate_paths(p, grid, policy, seed, paths, probe=i)[:, n]
        except BlowUpError as exc:
            exc.diagnostic["seed"] = seed
            raise

    y = np.concatenate(thread_map(run, chunks))
    y2 = y * y
    return MomentEstimate(mean=float(y.mean()), second_moment=float(y2.mean()),
                          standard_error=_jackknife_se(y2), mean_standard_error=_jackknife_se(y),
                          n_paths=n_paths, samples=y)


@dataclass(frozen=True)
class RefinementStep:
    dx: float
    N_t: int
    estimate: MomentEstimate


def refinement_ladder(alpha: float, dxs=(0.2, 0.1, 0.05), n_paths: int = 200, seed: int = 0, *,
                      lam: float = 0.1, t: float = 1.0, L: float = 10.0, r: float = 0.1,
                      m_star: int | None = None):
    """Monte Carlo ``E[Y(t, 0)^2]`` under spatial refinement.

    Runs the L1 scheme with ``sigma = 1``, no absorption, zero initial data and
    white-noise-consistent scaling at ``dt = r dx^2 / lam``. A second moment
    that keeps growing as ``dx`` shrinks is the grid-level sign of a
    non-mild solution. ``m_star=None`` keeps the full memory; a fixed short
    memory changes the model as ``dt`` shrinks and inflates the growth.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("the grid scheme covers 0 < alpha < 1 only")
    out = []
    for dx in dxs:
        n_x = 2 * max(1, int(round(L / (2 * dx))))  # even, so x = 0 is a node
        n_t = max(1, int(round(t * lam / (r * dx * dx))))
        grid = GridSpec(L=n_x * dx, N_x=n_x, T=t, N_t=n_t)
        p = SchemeParams(alpha=alpha, lam=lam, sigma=1.0, k1=0.0, k2=0.0, m_star=m_star or n_t,
                         scheme_variant="l1_standard", ic="zero", noise_scaling="white_noise_consistent")
        est = estimate_second_moment(p, grid, 0.0, t, n_paths, seed, batch=n_paths)
        out.append(RefinementStep(dx=float(dx), N_t=n_t, estimate=est))
    return out


# }}}
