r"""Real-argument Mittag-Leffler functions.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

Two regimes are used, chosen per point by :math:`\rho = |z|^{1/\alpha}`:

* :math:`\rho \le 40`: the power series, evaluated by Horner's rule in
  double-double arithmetic with coefficients :math:`1/\Gamma(\alpha k+\beta)`
  rounded from 40-digit values. The extra ~16 digits absorb the cancellation
  of the alternating series on the negative axis, where the largest term is
  about :math:`e^{\rho}`.
* :math:`\rho > 40` and :math:`0 < \alpha < 2`: the asymptotic expansion

  .. math::

      E_{\alpha,\beta}(z) = \frac{1}{\alpha}\sum_{\zeta} \zeta^{1-\beta} e^{\zeta}
          - \sum_{k\ge1} \frac{z^{-k}}{\Gamma(\beta-\alpha k)},

  where :math:`\zeta` runs over the roots of :math:`\zeta^\alpha = z` with
  :math:`|\arg\zeta| < \pi` that are not exponentially negligible. The
  algebraic tail is cut at its smallest term, which is below ``1e-17`` once
  :math:`\rho > 40`.

Anything else (``alpha >= 2`` with large negative ``z``) falls back to an
mpmath series at a working precision large enough to absorb the cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln

from fhi.errors import AccuracyError, DomainError

__all__ = [
    "MLParams",
    "RHO_SWITCH",
    "kernel_lambda",
    "mittag_leffler",
    "ml_eval",
    "ml_one",
]

#: value of ``|z|**(1/alpha)`` above which the asymptotic branch is used
RHO_SWITCH = 40.0

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker split constant
_HARD_TERM_CAP = 20000


@dataclass(frozen=True)
class MLParams:
    """Parameters of :math:`E_{\\alpha,\\beta}`.

    ``tol`` is the absolute accuracy target and ``max_terms`` caps the number of
    series terms; running out of terms raises :class:`AccuracyError`.
    """

    alpha: float
    beta: float = 1.0
    tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        for name in ("alpha", "beta", "tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms!r}")


# {{{ double-double primitives


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


# }}}


# {{{ coefficients


@lru_cache(maxsize=64)
def _series_coeffs(alpha: float, beta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Double-double split of ``1/Gamma(alpha*k + beta)`` for ``k < n``."""
    hi = np.empty(n)
    lo = np.empty(n)
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        for k in range(n):
            r = mpmath.rgamma(a * k + b)
            h = float(r)
            hi[k] = h
            lo[k] = float(r - h)
    return hi, lo


@lru_cache(maxsize=64)
def _asymptotic_coeffs(alpha: float, beta: float, n: int) -> np.ndarray:
    """``1/Gamma(beta - alpha*k)`` for ``k = 1..n`` (zero at the poles)."""
    out = np.empty(n)
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        for k in range(1, n + 1):
            out[k - 1] = float(mpmath.rgamma(b - a * k))
    return out


def _terms_needed(alpha: float, beta: float, rho_max: float, positive: bool, tol: float) -> int:
    """Smallest K such that every term with index >= K is negligible."""
    if rho_max == 0.0:
        return 1
    log_rho = math.log(rho_max)
    # terms peak near k = rho/alpha and then fall off faster than geometrically
    size = min(_HARD_TERM_CAP + 1, int(3.0 * rho_max / alpha) + 200)
    k = np.arange(size, dtype=float)
    log_terms = alpha * k * log_rho - gammaln(alpha * k + beta)
    threshold = math.log(tol) - 4.0 * math.log(10.0)
    if positive:
        threshold += max(0.0, float(log_terms.max()))
    peak = int(np.argmax(log_terms))
    below = np.nonzero(log_terms[peak:] < threshold)[0]
    if below.size == 0:
        return size if size <= _HARD_TERM_CAP else _HARD_TERM_CAP + 1
    return peak + int(below[0]) + 1


# }}}


# {{{ regimes


def _series(z: np.ndarray, alpha: float, beta: float, n_terms: int) -> np.ndarray:
    hi, lo = _series_coeffs(alpha, beta, n_terms)
    ph = np.full_like(z, hi[-1])
    pl = np.full_like(z, lo[-1])
    for k in range(n_terms - 2, -1, -1):
        p, e = _two_prod(ph, z)
        e = e + pl * z
        ph, pl = _quick_two_sum(p, e)
        s, t = _two_sum(ph, hi[k])
        t = t + (pl + lo[k])
        ph, pl = _quick_two_sum(s, t)
    return ph + pl


def _asymptotic_terms(alpha: float, beta: float, rho_min: float) -> int:
    """Length of the algebraic tail: up to its smallest term at ``rho_min``,
    stopping early once terms drop below 1e-18."""
    k_max = int(min(200, max(1, math.floor(rho_min / alpha))))
    k = np.arange(1, k_max + 1, dtype=float)
    arg = beta - alpha * k
    # 1/Gamma vanishes at (and is tiny next to) the poles, so those terms say
    # nothing about where the tail becomes negligible
    poles = (arg < 0.5) & (np.abs(arg - np.round(arg)) < 1e-6)
    with np.errstate(divide="ignore"):
        log_terms = np.where(poles, -np.inf, -gammaln(arg) - alpha * k * math.log(rho_min))
    small = np.nonzero(log_terms < math.log(1e-18))[0]
    # keep every term up to the first negligible one past the poles at the start
    for i in small:
        if not poles[i]:
            return int(i) + 1
    return k_max


def _asymptotic(z: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    rho = np.abs(z) ** (1.0 / alpha)
    n_alg = _asymptotic_terms(alpha, beta, float(rho.min()))
    c = _asymptotic_coeffs(alpha, beta, n_alg)

    w = 1.0 / z
    acc = np.zeros_like(z)
    for k in range(n_alg - 1, -1, -1):
        acc = (acc + c[k]) * w
    out = -acc

    pos = z > 0
    if np.any(pos):
        r = rho[pos]
        with np.errstate(over="ignore"):
            out[pos] += r ** (1.0 - beta) * np.exp(r) / alpha
    neg = ~pos
    if alpha > 1.0 and np.any(neg):
        # the two conjugate roots rho * exp(+-i pi/alpha)
        r = rho[neg]
        phase = math.pi / alpha
        zeta = r * np.exp(1j * phase)
        contrib = zeta ** (1.0 - beta) * np.exp(zeta)
        out[neg] += 2.0 * contrib.real / alpha
    return out


def _mpmath_series(z: float, alpha: float, beta: float, tol: float) -> float:
    rho = abs(z) ** (1.0 / alpha)
    dps = 30 + int(rho / math.log(10.0)) + int(-math.log10(tol))
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        eps = mpmath.mpf(tol) * mpmath.mpf(10) ** -6
        for k in range(_HARD_TERM_CAP):
            term = power * mpmath.rgamma(a * k + b)
            total += term
            if k > rho / alpha and abs(term) < eps:
                return float(total)
            power *= zz
    raise AccuracyError(f"mpmath series for E_{{{alpha},{beta}}}({z}) did not converge")


# }}}


def mittag_leffler(z, alpha: float, beta: float = 1.0, *, tol: float = 1e-12,
                   max_terms: int | None = None):
    """Vectorized :math:`E_{\\alpha,\\beta}(z)` for real ``z``.

    Parameters
    ----------
    z : float or array_like
        Real arguments.
    alpha, beta : float
        Positive parameters.
    tol : float
        Absolute accuracy target.
    max_terms : int, optional
        Series length cap; when exceeded an :class:`AccuracyError` is raised.
        ``None`` lets the length follow the argument range.

    Returns
    -------
    float or numpy.ndarray
        Same shape as ``z``.
    """
    if not (alpha > 0 and beta > 0 and math.isfinite(alpha) and math.isfinite(beta)):
        raise DomainError(f"need alpha > 0 and beta > 0, got alpha={alpha!r}, beta={beta!r}")
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)
    if not np.all(np.isfinite(zarr)):
        raise DomainError("Mittag-Leffler argument must be finite")
    alpha = float(alpha)
    beta = float(beta)

    flat = zarr.ravel()
    out = np.empty_like(flat)
    rho = np.abs(flat) ** (1.0 / alpha)
    near = rho <= RHO_SWITCH
    far = ~near

    if np.any(near):
        zs = flat[near]
        n_terms = _terms_needed(alpha, beta, float(rho[near].max()), bool(np.any(zs > 0)), tol)
        cap = _HARD_TERM_CAP if max_terms is None else int(max_terms)
        if n_terms > cap:
            raise AccuracyError(
                f"series for E_{{{alpha},{beta}}} needs {n_terms} terms "
                f"(max_terms={cap}) at |z|={float(np.abs(zs).max()):.6g}")
        out[near] = _series(zs, alpha, beta, n_terms)

    if np.any(far):
        zf = flat[far]
        if alpha < 2.0:
            out[far] = _asymptotic(zf, alpha, beta)
        else:
            out[far] = [_mpmath_series(float(v), alpha, beta, tol) for v in zf]

    out = out.reshape(zarr.shape)
    return float(out[0]) if scalar else out


def ml_eval(p: MLParams, z: float) -> float:
    """Two-parameter Mittag-Leffler function at a single real point."""
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z!r}")
    return mittag_leffler(float(z), p.alpha, p.beta, tol=p.tol, max_terms=p.max_terms)


def ml_one(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function :math:`E_\\alpha(z) = E_{\\alpha,1}(z)`."""
    return ml_eval(MLParams(alpha=alpha, beta=1.0), z)


def kernel_lambda(t, y_sq, alpha: float, lam: float):
    r"""Fourier symbol of the fractional heat kernel,
    :math:`\Lambda(t, y) = t^{\alpha-1} E_{\alpha,\alpha}(-\lambda t^\alpha |y|^2)`.

    Broadcasts over ``t`` and ``y_sq``. ``t`` must be strictly positive.
    """
    if not (0 < alpha < 2):
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    t_arr = np.asarray(t, dtype=float)
    ysq = np.asarray(y_sq, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("kernel_lambda needs t > 0 (t**(alpha-1) is singular at 0)")
    if np.any(ysq < 0):
        raise DomainError("y_sq must be >= 0")
    ta = t_arr**alpha
    val = t_arr ** (alpha - 1.0) * mittag_leffler(-lam * ta * ysq, alpha, alpha)
    return float(val) if np.ndim(val) == 0 else val
