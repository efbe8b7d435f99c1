"""Uniform space-time lattice shared by the stepper, the noise generator and
the selector tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fhi.errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    """Lattice ``x_i = -L/2 + i*dx`` (``i = 0..N_x``), ``t_n = n*dt`` (``n = 0..N_t``)."""

    L: float
    N_x: int
    T: float
    N_t: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"must be > 0, got {self.L!r}", "L")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"must be > 0, got {self.T!r}", "T")
        for name in ("N_x", "N_t"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"must be a positive integer, got {v!r}", name)
        if self.N_x < 2:
            raise ConfigError("need at least one interior node", "N_x")

    @property
    def dx(self) -> float:
        return self.L / self.N_x

    @property
    def dt(self) -> float:
        return self.T / self.N_t

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N_x + 1)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.N_t + 1)

    def node_index(self, x: float, *, rtol: float = 1e-9) -> int:
        """Index of the node at position ``x``; raises if ``x`` is off the lattice."""
        i = (x + 0.5 * self.L) / self.dx
        k = int(round(i))
        if abs(i - k) > rtol * max(1.0, abs(i)) or not 0 <= k <= self.N_x:
            raise ConfigError(f"position {x!r} is not a grid node", "x")
        return k

    def step_index(self, t: float, *, rtol: float = 1e-9) -> int:
        """Index of the time level at ``t``; raises if ``t`` is off the lattice."""
        n = t / self.dt
        k = int(round(n))
        if abs(n - k) > rtol * max(1.0, abs(n)) or not 0 <= k <= self.N_t:
            raise ConfigError(f"time {t!r} is not a grid level", "t")
        return k
