r"""Caputo derivative: closed forms, discrete memory weights and Laplace-transform
checks.

The discrete operator uses the weights

.. math::

    w_j = \frac{j^{1-\alpha} - (j-1)^{1-\alpha}}{\Gamma(2-\alpha)\,\Delta t^\alpha},
    \qquad j = 1, \dots, m^*,

applied to backward differences of the sampled function, newest first.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.special import gamma, gammainc, gammaincc

from fhi.errors import ContractError, DomainError

__all__ = [
    "CaputoWeights",
    "LaplaceEstimate",
    "caputo_apply",
    "caputo_at",
    "caputo_monomial_exact",
    "caputo_weights",
    "causal_convolution",
    "laplace_horizon",
    "laplace_numeric",
    "laplace_of",
]


def _power_increments(p: float, j: np.ndarray) -> np.ndarray:
    """``j**p - (j-1)**p`` without cancellation for ``j >= 2``."""
    j = np.asarray(j, dtype=float)
    out = np.empty_like(j)
    first = j == 1.0
    out[first] = 1.0
    rest = ~first
    jr = j[rest]
    out[rest] = -(jr**p) * np.expm1(p * np.log1p(-1.0 / jr))
    return out


@dataclass(frozen=True)
class CaputoWeights:
    """Memory weights ``w[j-1]`` for ``j = 1..m_star``."""

    alpha: float
    dt: float
    m_star: int
    w: np.ndarray = field(repr=False)

    def first_dropped(self) -> float:
        """Weight ``w_{m*+1}``, the largest one the truncation throws away."""
        j = np.array([self.m_star + 1.0])
        return float(_power_increments(1.0 - self.alpha, j)[0]
                     / (gamma(2.0 - self.alpha) * self.dt**self.alpha))

    def truncation_error(self, max_difference: float) -> float:
        """Bound on the dropped memory: first dropped weight times the largest history difference."""
        return self.first_dropped() * abs(max_difference)


def caputo_weights(alpha: float, dt: float, m_star: int) -> CaputoWeights:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"discrete Caputo weights need 0 < alpha < 1, got {alpha!r}")
    if not (math.isfinite(dt) and dt > 0):
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if int(m_star) != m_star or m_star < 1:
        raise DomainError(f"m_star must be a positive integer, got {m_star!r}")
    m_star = int(m_star)
    j = np.arange(1, m_star + 1, dtype=float)
    w = _power_increments(1.0 - alpha, j) / (gamma(2.0 - alpha) * dt**alpha)
    w.setflags(write=False)
    return CaputoWeights(alpha=float(alpha), dt=float(dt), m_star=m_star, w=w)


def caputo_apply(history, weights: CaputoWeights):
    """Weighted memory sum ``sum_j w_j * history[j-1]``.

    ``history[j-1]`` holds ``Y^{n-j} - Y^{n-j-1}``, newest first. Trailing axes
    (e.g. spatial nodes) are carried through. Empty history gives 0.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim == 0:
        raise ContractError("history must be a sequence of differences")
    n = h.shape[0]
    if n > weights.m_star:
        raise ContractError(f"history has {n} entries but m_star is {weights.m_star}")
    if n == 0:
        return 0.0 if h.ndim == 1 else np.zeros(h.shape[1:])
    out = np.tensordot(weights.w[:n], h, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def caputo_at(samples, alpha: float, dt: float, n: int | None = None,
              m_star: int | None = None) -> float:
    """Discrete Caputo value at level ``n`` of uniformly sampled ``samples``.

    Uses the stepper's convention: the differences entering level ``n`` are
    ``Y^{n-j} - Y^{n-j-1}`` for ``j = 1..min(n-1, m_star)``, so the newest
    increment is not part of the sum. ``m_star=None`` keeps the full memory.
    """
    y = np.asarray(samples, dtype=float)
    if n is None:
        n = y.size - 1
    if not 1 <= n < y.size:
        raise ContractError(f"level n={n} outside the sample range")
    length = n - 1 if m_star is None else min(n - 1, m_star)
    weights = caputo_weights(alpha, dt, max(1, n - 1 if m_star is None else m_star))
    if length == 0:
        return 0.0
    hist = np.diff(y[:n])[::-1][:length]  # newest first
    return caputo_apply(hist, weights)


def caputo_monomial_exact(alpha: float, x):
    r"""Caputo derivative of ``f(x) = x``: :math:`x^{1-\alpha}/((1-\alpha)\Gamma(1-\alpha))`."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"need 0 < alpha < 1, got {alpha!r}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("x must be >= 0")
    val = xa ** (1.0 - alpha) / ((1.0 - alpha) * gamma(1.0 - alpha))
    return float(val) if val.ndim == 0 else val


# {{{ Laplace transforms


@dataclass(frozen=True)
class LaplaceEstimate:
    """Quadrature estimate of a truncated Laplace integral."""

    value: float
    error: float
    horizon: float
    truncated: bool = False
    message: str = ""

    def __float__(self) -> float:
        return self.value


def laplace_horizon(s: float, fmax: float = 1.0, tail: float = 1e-10) -> float:
    """Horizon ``T`` with ``exp(-s*T) * fmax <= tail`` (and ``s*T >= 20``)."""
    return max(math.log(max(fmax, tail) / tail), 20.0) / s


def _moments(a: float, s: float, t: np.ndarray) -> np.ndarray:
    """``int_{t_k}^{t_{k+1}} u**(a-1) exp(-s u) du`` for consecutive nodes."""
    x = s * t
    lower = gammainc(a, x)
    upper = gammaincc(a, x)
    # differences of whichever tail is small keep the panel values accurate
    d_low = np.diff(lower)
    d_up = -np.diff(upper)
    use_upper = x[:-1] > a
    return gamma(a) * s**-a * np.where(use_upper, d_up, d_low)


def _product_trapezoid(phi: np.ndarray, dt: float, s: float, power: float) -> float:
    t = dt * np.arange(phi.size)
    m0 = _moments(power + 1.0, s, t)
    m1 = _moments(power + 2.0, s, t)
    left = (t[1:] * m0 - m1) / dt
    right = (m1 - t[:-1] * m0) / dt
    return float(np.sum(phi[:-1] * left + phi[1:] * right))


def laplace_numeric(samples, dt: float, s: float, *, weight_power: float = 0.0) -> LaplaceEstimate:
    r"""Estimate :math:`\int_0^T e^{-st} t^{p} \varphi(t)\,dt` from uniform samples.

    Parameters
    ----------
    samples : array_like
        ``phi(k*dt)`` for ``k = 0..N``; ``T = N*dt``.
    dt : float
        Sample spacing.
    s : float
        Transform variable, ``s > 0``.
    weight_power : float
        Exponent ``p > -1`` of an algebraic factor split off the integrand.
        With ``p = 0`` the integrand is ``phi`` itself and composite Simpson is
        used. Otherwise ``t**p * exp(-s t)`` is integrated exactly against the
        piecewise-linear interpolant of ``phi`` (product trapezoid), which keeps
        second-order accuracy for integrands like ``t**(alpha-1) E(-t**alpha)``.

    Returns
    -------
    LaplaceEstimate
        The error field is a Richardson estimate from the same rule on every
        other sample. ``truncated`` is set when ``s*T < 20``.
    """
    phi = np.asarray(samples, dtype=float)
    if phi.ndim != 1 or phi.size < 5:
        raise ContractError("need a 1-D array of at least 5 samples")
    if not s > 0:
        raise DomainError(f"s must be > 0, got {s!r}")
    if not weight_power > -1.0:
        raise DomainError(f"weight_power must exceed -1, got {weight_power!r}")
    if not np.all(np.isfinite(phi)):
        raise ContractError("samples must be finite; split singular factors off via weight_power")
    n = phi.size - 1
    horizon = n * dt
    t = dt * np.arange(n + 1)

    if weight_power == 0.0:
        f = phi * np.exp(-s * t)
        value = float(simpson(f, dx=dt))
        coarse_n = n - (n % 2)
        coarse = float(simpson(f[:coarse_n + 1:2], dx=2 * dt))
        fine_same = float(simpson(f[:coarse_n + 1], dx=dt))
        error = abs(fine_same - coarse) / 15.0
    else:
        value = _product_trapezoid(phi, dt, s, weight_power)
        coarse_n = n - (n % 2)
        coarse = _product_trapezoid(phi[:coarse_n + 1:2], 2 * dt, s, weight_power)
        fine_same = _product_trapezoid(phi[:coarse_n + 1], dt, s, weight_power)
        error = abs(fine_same - coarse) / 3.0

    truncated = s * horizon < 20.0
    message = ""
    if truncated:
        message = f"s*T = {s * horizon:.3g} < 20: truncation tail may dominate"
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    return LaplaceEstimate(value=value, error=error, horizon=horizon,
                           truncated=truncated, message=message)


def laplace_of(func, s: float, *, n: int = 50000, horizon: float | None = None,
               weight_power: float = 0.0, fmax: float = 1.0) -> LaplaceEstimate:
    """Sample ``func`` (the regular factor) on ``[0, T]`` and call :func:`laplace_numeric`."""
    if horizon is None:
        horizon = laplace_horizon(s, fmax)
    t = np.linspace(0.0, horizon, n + 1)
    return laplace_numeric(func(t), horizon / n, s, weight_power=weight_power)


def causal_convolution(f, g, dt: float) -> np.ndarray:
    r"""Trapezoid values of :math:`\int_0^{t_n} f(t_n - r) g(r)\,dr` on the sample grid."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise ContractError("f and g must be 1-D arrays of equal length")
    full = np.convolve(f, g)[: f.size]
    # trapezoid end corrections: half weight on r = 0 and r = t_n
    out = full - 0.5 * (f * g[0] + f[0] * g)
    out[0] = 0.0
    return dt * out


# }}}
