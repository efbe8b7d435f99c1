r"""Fourier-side evaluation of the Green's-kernel terms.

With :math:`\Lambda(t, y) = t^{\alpha-1} E_{\alpha,\alpha}(-\lambda t^\alpha |y|^2)`:

.. math::

    I_1(t, x) = (2\pi)^{-d} \int e^{ixy} E_\alpha(-\lambda t^\alpha |y|^2)\,dy, \qquad
    h_0(\tau, \xi) = \int e^{i\xi y} \Lambda(\tau, y)\,dy,

    I_2(t, x) = (2\pi)^{-d} \int_0^t\!\!\int h_0(t-r, x-\zeta)\, g(r, \zeta)\,d\zeta\,dr, \qquad
    I_3(t, x) = (2\pi)^{-d} \sigma \int_0^t\!\!\int h_0(t-r, x-\zeta)\, B(dr, d\zeta).

Integrals over :math:`y` use a symmetric midpoint grid on :math:`[-R, R]^d`.
For :math:`\alpha = 1`, :math:`h_0` is :math:`2\pi` times the Gaussian heat
kernel in one dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rgamma, sici

from fhi._parallel import thread_map
from fhi.errors import ContractError, DomainError
from fhi.mittag_leffler import mittag_leffler
from fhi.noise import NoiseField

__all__ = [
    "FourierGrid",
    "KernelTable",
    "SpectralResult",
    "kernel_h0",
    "term_I1",
    "term_I2",
    "term_I3_sample",
]

#: relative change on grid refinement above which a result is flagged
REFINE_TOL = 5e-3
_IMAG_TOL = 1e-9


def _check_order(alpha: float, lam: float, d: int):
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    if d not in (1, 2):
        raise DomainError(f"only d = 1 and d = 2 are supported, got {d!r}")


@dataclass(frozen=True)
class FourierGrid:
    """Midpoint grid ``y_j = (j + 1/2 - n/2) * dy`` on ``[-R, R]`` per axis."""

    d: int
    y_max: float
    n_modes: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"d must be 1 or 2, got {self.d!r}")
        if not self.y_max > 0:
            raise DomainError("y_max must be > 0")
        if self.n_modes < 2 or self.n_modes % 2:
            raise DomainError(f"n_modes must be even and >= 2, got {self.n_modes!r}")

    @property
    def dy(self) -> float:
        return 2.0 * self.y_max / self.n_modes

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n_modes) + 0.5 - self.n_modes / 2) * self.dy

    @property
    def positive_nodes(self) -> np.ndarray:
        return (np.arange(self.n_modes // 2) + 0.5) * self.dy

    @classmethod
    def default(cls, alpha: float, lam: float, t: float, d: int = 1,
                n_modes: int | None = None) -> FourierGrid:
        """Cutoff ``R = 40 / sqrt(lam * t**alpha)``; 4096 modes in 1-D, 512 per axis in 2-D."""
        if n_modes is None:
            n_modes = 4096 if d == 1 else 512
        return cls(d=d, y_max=40.0 / math.sqrt(lam * t**alpha), n_modes=n_modes)

    def refined(self, r_factor: float = 2.0, n_factor: int = 2) -> FourierGrid:
        return FourierGrid(self.d, self.y_max * r_factor, self.n_modes * n_factor)


@dataclass(frozen=True)
class SpectralResult:
    """Grid value plus diagnostics.

    ``rel_change`` is the largest relative change seen when the grid was
    refined (``n_modes`` doubled at fixed and at doubled ``R``); ``None`` when
    no check was run.
    """

    value: float | np.ndarray
    grid: FourierGrid
    imag_residual: float = 0.0
    rel_change: float | None = None
    warnings: tuple = ()

    @property
    def converged(self) -> bool:
        return not self.warnings

    def __float__(self) -> float:
        return float(self.value)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.value, dtype=dtype)


def _tail_1d(x: np.ndarray, coef: float, R: float) -> np.ndarray:
    """``2 * int_R^inf cos(x y) * coef / y**2 dy``."""
    ax = np.abs(x)
    si, _ = sici(ax * R)
    return 2.0 * coef * (np.cos(ax * R) / R - ax * (0.5 * np.pi - si))


def _transform(x, symbol, fg: FourierGrid, tail_coef: float = 0.0):
    """``int e^{ixy} symbol(|y|^2) dy`` on ``fg`` at positions ``x``.

    ``x`` has shape ``(..., d)`` for ``d = 2`` and ``(...)`` for ``d = 1``.
    ``tail_coef`` adds the analytic contribution of a ``coef/|y|^2`` tail
    beyond ``R`` (1-D only). Returns (real part, max |imag part|).
    """
    y = fg.nodes
    dy = fg.dy
    if fg.d == 1:
        xa = np.asarray(x, dtype=float)
        shape = xa.shape
        xf = xa.reshape(-1)
        s = symbol(y * y)
        phase = np.exp(1j * np.outer(xf, y))
        total = (phase @ s) * dy
        if tail_coef:
            total = total + _tail_1d(xf, tail_coef, fg.y_max)
    else:
        xa = np.asarray(x, dtype=float)
        if xa.shape[-1] != 2:
            raise ContractError("2-D positions need a trailing axis of length 2")
        shape = xa.shape[:-1]
        xf = xa.reshape(-1, 2)
        s = symbol(y[:, None] ** 2 + y[None, :] ** 2)
        a = np.exp(1j * np.outer(xf[:, 0], y))
        b = np.exp(1j * np.outer(xf[:, 1], y))
        total = np.einsum("pj,jk,pk->p", a, s, b) * dy * dy
    imag = float(np.max(np.abs(total.imag))) if total.size else 0.0
    return total.real.reshape(shape), imag


def _evaluate(x, make_symbol, fg: FourierGrid, tail_coef: float, prefactor: float,
              check: bool) -> SpectralResult:
    val, imag = _transform(x, make_symbol, fg, tail_coef)
    val = prefactor * val
    imag *= abs(prefactor)
    notes = []
    scale = max(float(np.max(np.abs(val))), 1e-300)
    if imag > _IMAG_TOL * max(1.0, scale):
        notes.append(f"imaginary residual {imag:.3g} exceeds bound")
    rel = None
    if check:
        rel = 0.0
        for ref in (fg.refined(1.0, 2), fg.refined(2.0, 2)):
            v2, _ = _transform(x, make_symbol, ref, tail_coef)
            diff = np.abs(prefactor * v2 - val)
            # relative to the local value, floored at 1e-6 of the peak
            denom = np.maximum(np.abs(val), 1e-6 * scale)
            rel = max(rel, float(np.max(diff / denom)))
        if rel > REFINE_TOL:
            notes.append(f"grid refinement changed the value by {rel:.3g} (> {REFINE_TOL})")
    out = float(val) if np.ndim(val) == 0 else val
    return SpectralResult(value=out, grid=fg, imag_residual=imag, rel_change=rel,
                          warnings=tuple(notes))


def term_I1(t: float, x, alpha: float, lam: float, fg: FourierGrid | None = None, *,
            d: int = 1, check: bool = True) -> SpectralResult:
    r"""Deterministic term :math:`(2\pi)^{-d}\int e^{ixy}E_\alpha(-\lambda t^\alpha|y|^2)dy`.

    In 1-D with ``alpha != 1`` the algebraic tail
    :math:`E_\alpha(-u) \approx 1/(u\,\Gamma(1-\alpha))` beyond the cutoff is
    added in closed form.
    """
    if fg is not None:
        d = fg.d
    _check_order(alpha, lam, d)
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t!r}")
    fg = fg or FourierGrid.default(alpha, lam, t, d)
    c = lam * t**alpha
    tail = float(rgamma(1.0 - alpha)) / c if d == 1 else 0.0
    return _evaluate(x, lambda ysq: mittag_leffler(-c * ysq, alpha, 1.0), fg, tail,
                     (2.0 * np.pi) ** -d, check)


def kernel_h0(t_lag: float, x_off, alpha: float, lam: float, fg: FourierGrid | None = None, *,
              d: int = 1, check: bool = True) -> SpectralResult:
    r"""Kernel :math:`h_0(\tau, \xi) = \tau^{\alpha-1}\int e^{i\xi y}E_{\alpha,\alpha}(-\lambda\tau^\alpha|y|^2)dy`."""
    if fg is not None:
        d = fg.d
    _check_order(alpha, lam, d)
    if not t_lag > 0:
        raise DomainError(f"t_lag must be > 0, got {t_lag!r}")
    fg = fg or FourierGrid.default(alpha, lam, t_lag, d)
    c = lam * t_lag**alpha
    # leading tail term 1/Gamma(0) vanishes; the next one decays like |y|^-4
    return _evaluate(x_off, lambda ysq: mittag_leffler(-c * ysq, alpha, alpha), fg, 0.0,
                     t_lag ** (alpha - 1.0), check)


# {{{ kernel table


def _lag_integral(a: float, b: float, ysq: np.ndarray, alpha: float, lam: float) -> np.ndarray:
    """``int_a^b s**(alpha-1) E_{alpha,alpha}(-lam s**alpha ysq) ds`` in closed form."""
    def prim(s):
        if s == 0.0:
            return np.zeros_like(ysq)
        sa = s**alpha
        return sa * mittag_leffler(-lam * sa * ysq, alpha, alpha + 1.0)
    return prim(b) - prim(a)


@dataclass(frozen=True)
class KernelTable:
    r"""Cell averages of :math:`h_0` on a (time-lag, space-offset) lattice.

    ``H[q, p]`` (or ``H[q, p1, p2]`` in 2-D) is the mean of :math:`h_0` over
    lags :math:`[q\Delta r, (q+1)\Delta r]` and offsets within half a cell of
    ``p * dzeta`` per axis. The lag integral is done exactly, which absorbs the
    :math:`\tau^{\alpha-1}` singularity at zero lag.

    Space is ``n_cells`` cells of width ``dzeta`` per axis, centred at
    ``zeta_i = -L/2 + (i + 1/2) * dzeta``; time is ``n_lags`` cells of width
    ``dr`` covering ``[0, t]``.
    """

    alpha: float
    lam: float
    d: int
    dr: float
    dzeta: float
    n_lags: int
    n_cells: int
    grid: FourierGrid
    H: np.ndarray = field(repr=False)

    @property
    def L(self) -> float:
        return self.n_cells * self.dzeta

    @property
    def centers(self) -> np.ndarray:
        return -0.5 * self.L + (np.arange(self.n_cells) + 0.5) * self.dzeta

    @classmethod
    def build(cls, alpha: float, lam: float, t: float, n_lags: int, L: float, n_cells: int,
              d: int = 1, fg: FourierGrid | None = None, oversample: float | None = None) -> KernelTable:
        """Tabulate the cell-averaged kernel.

        The default Fourier grid has ``R = oversample * pi / dzeta`` (16 in 1-D,
        4 in 2-D) and spacing ``dy <= pi / (2L)`` so that offsets up to ``L``
        are free of aliasing.
        """
        _check_order(alpha, lam, d)
        if not (t > 0 and L > 0) or n_lags < 1 or n_cells < 1:
            raise DomainError("need t > 0, L > 0, n_lags >= 1, n_cells >= 1")
        dr = t / n_lags
        dz = L / n_cells
        if fg is None:
            over = oversample or (16.0 if d == 1 else 4.0)
            R = over * math.pi / dz
            n = 2 * math.ceil(R / (math.pi / (2.0 * L)))
            fg = FourierGrid(d, R, n)
        yp = fg.positive_nodes
        dy = fg.dy
        sinc = 2.0 * np.sin(0.5 * dz * yp) / yp
        cosm = np.cos(np.outer(yp, dz * np.arange(n_cells)))  # (modes, offsets)
        ysq = yp**2 if d == 1 else yp[:, None] ** 2 + yp[None, :] ** 2

        def row(q):
            li = _lag_integral(q * dr, (q + 1) * dr, ysq, alpha, lam)
            if d == 1:
                return (2.0 * dy * li * sinc) @ cosm / (dr * dz)
            w = (4.0 * dy * dy) * li * np.outer(sinc, sinc)
            return cosm.T @ w @ cosm / (dr * dz * dz)

        H = np.stack(thread_map(row, range(n_lags)))
        H.setflags(write=False)
        return cls(alpha=float(alpha), lam=float(lam), d=d, dr=dr, dzeta=dz,
                   n_lags=n_lags, n_cells=n_cells, grid=fg, H=H)

    def cell_index(self, x) -> tuple[int, ...]:
        """Cell whose centre is ``x`` (a scalar in 1-D, a pair in 2-D)."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if xs.size != self.d:
            raise ContractError(f"position must have {self.d} component(s)")
        idx = []
        for v in xs:
            f = (v + 0.5 * self.L) / self.dzeta - 0.5
            k = int(round(f))
            if abs(f - k) > 1e-9 * max(1.0, abs(f)) or not 0 <= k < self.n_cells:
                raise ContractError(f"x={v!r} is not a cell centre of the kernel table")
            idx.append(k)
        return tuple(idx)

    def n_steps(self, t: float) -> int:
        m = t / self.dr
        k = int(round(m))
        if abs(m - k) > 1e-9 * max(1.0, m) or not 1 <= k <= self.n_lags:
            raise ContractError(f"t={t!r} is not a multiple of dr within the table horizon")
        return k

    def weights(self, t: float, x) -> np.ndarray:
        """``H[lag, offset]`` arranged against source cells: shape ``(m, K[, K])`` where
        row ``mm`` is the source time cell ``[mm*dr, (mm+1)*dr]``."""
        m = self.n_steps(t)
        idx = self.cell_index(x)
        lags = np.arange(m - 1, -1, -1)
        offs = [np.abs(i0 - np.arange(self.n_cells)) for i0 in idx]
        if self.d == 1:
            return self.H[lags][:, offs[0]]
        return self.H[lags][:, offs[0]][:, :, offs[1]]

    def i3_variance(self, t: float, x, sigma: float = 1.0) -> float:
        """Exact variance of the discrete stochastic convolution at ``(t, x)``."""
        w = self.weights(t, x)
        cell = self.dr * self.dzeta**self.d
        return float(sigma**2 * (2.0 * np.pi) ** (-2 * self.d) * np.sum(w * w) * cell)


def term_I2(t: float, x, g, kt: KernelTable) -> float:
    """Discrete :math:`I_2` with selector values ``g`` on the table's cells.

    ``g`` is either a callable ``g(r, zeta)`` (evaluated at cell centres,
    ``zeta`` of shape ``(K,)`` or ``(K, K, 2)``) or an array of shape
    ``(m, K[, K])`` with ``m = t / dr``.
    """
    w = kt.weights(t, x)
    m = w.shape[0]
    if callable(g):
        r = (np.arange(m) + 0.5) * kt.dr
        z = kt.centers
        if kt.d == 1:
            gv = np.stack([np.broadcast_to(g(ri, z), z.shape) for ri in r])
        else:
            zz = np.stack(np.meshgrid(z, z, indexing="ij"), axis=-1)
            gv = np.stack([np.broadcast_to(g(ri, zz), zz.shape[:-1]) for ri in r])
    else:
        gv = np.asarray(g, dtype=float)
        if gv.shape[0] >= m and gv.shape[1:] == w.shape[1:]:
            gv = gv[:m]
    gv = np.asarray(gv, dtype=float)
    if gv.shape != w.shape:
        raise ContractError(f"selector values have shape {gv.shape}, expected {w.shape}")
    if not np.all(np.isfinite(gv)):
        raise ContractError("selector must be bounded (finite) on the truncated domain")
    cell = kt.dr * kt.dzeta**kt.d
    return float((2.0 * np.pi) ** -kt.d * np.sum(w * gv) * cell)


def term_I3_sample(t: float, x, sigma: float, kt: KernelTable, noise) -> float:
    """Discrete stochastic convolution for one noise realization.

    ``noise`` is a :class:`~fhi.noise.NoiseField` or an array of standard
    normals with one row per time cell (at least ``t/dr`` rows) and one entry
    per spatial cell.
    """
    eta = noise.eta if isinstance(noise, NoiseField) else np.asarray(noise, dtype=float)
    w = kt.weights(t, x)
    m = w.shape[0]
    if eta.shape[0] < m or eta.shape[1:] != w.shape[1:]:
        raise ContractError(f"noise of shape {eta.shape} does not cover the table cells {w.shape}")
    cell = kt.dr * kt.dzeta**kt.d
    return float((2.0 * np.pi) ** -kt.d * sigma * math.sqrt(cell) * np.sum(w * eta[:m]))


# }}}
