"""Discrete space-time white noise on the simulation lattice.

Entry ``eta[n-1, i]`` drives step ``n`` at node ``i``. Each path draws from a
Philox stream keyed by ``(seed, path)``; entry ``(m, i)`` consumes raw 64-bit
words ``2k`` and ``2k+1`` with ``k = m*(N_x+1) + i`` and maps them to a normal
by the cosine branch of Box-Muller. The mapping uses only the raw integer
stream, so values do not depend on numpy's distribution code or on the order
in which paths are generated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from fhi.errors import ConfigError, ContractError
from fhi.grid import GridSpec

__all__ = [
    "NoiseField",
    "NoiseScaling",
    "raw_normals",
    "sheet_value",
    "white_noise_field",
]

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 2.0**-53


class NoiseScaling(str, enum.Enum):
    paper_literal = "paper_literal"                    # sigma * sqrt(dt)
    white_noise_consistent = "white_noise_consistent"  # sigma * sqrt(dt / dx)


def _philox(seed: int, path: int) -> np.random.Philox:
    if int(seed) < 0 or int(path) < 0:
        raise ConfigError("seed and path index must be non-negative", field="seed")
    return np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(path),)))


def _uniform(words: np.ndarray) -> np.ndarray:
    # top 53 bits, centred in their cell: strictly inside (0, 1)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def raw_normals(seed: int, path: int, count: int) -> np.ndarray:
    """First ``count`` standard normals of the ``(seed, path)`` stream."""
    words = _philox(seed, path).random_raw(2 * count)
    u1 = _uniform(words[0::2])
    u2 = _uniform(words[1::2])
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


@dataclass(frozen=True)
class NoiseField:
    """Standard normals ``eta`` of shape ``(N_t, N_x+1)`` plus their scaling rule."""

    eta: np.ndarray = field(repr=False)
    dt: float
    dx: float
    scaling: NoiseScaling = NoiseScaling.paper_literal
    seed: int = 0
    path: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scaling", NoiseScaling(self.scaling))

    @property
    def scale(self) -> float:
        """Increment multiplier per unit ``sigma``."""
        if self.scaling is NoiseScaling.paper_literal:
            return float(np.sqrt(self.dt))
        return float(np.sqrt(self.dt / self.dx))

    def increments(self, sigma: float) -> np.ndarray:
        """Scaled additive noise ``sigma * scale * eta`` for every step."""
        if sigma < 0:
            raise ConfigError("sigma must be >= 0", field="sigma")
        return (sigma * self.scale) * self.eta


def white_noise_field(grid: GridSpec, seed: int, scaling=NoiseScaling.paper_literal,
                      path: int = 0) -> NoiseField:
    shape = (grid.N_t, grid.N_x + 1)
    eta = raw_normals(seed, path, shape[0] * shape[1]).reshape(shape)
    eta.setflags(write=False)
    return NoiseField(eta=eta, dt=grid.dt, dx=grid.dx, scaling=NoiseScaling(scaling),
                      seed=int(seed), path=int(path))


def sheet_value(t: float, x: float, grid: GridSpec, noise: NoiseField) -> float:
    """Brownian sheet ``B(t, x)`` built from the unit-intensity cell increments
    ``sqrt(dt*dx) * eta``, anchored at ``t = 0`` and at the left edge.

    ``(t, x)`` must be a lattice point; no interpolation is done.
    """
    if noise.eta.shape != (grid.N_t, grid.N_x + 1):
        raise ContractError("noise field does not match the grid")
    n = grid.step_index(t)
    i = grid.node_index(x)
    return float(np.sqrt(grid.dt * grid.dx) * noise.eta[:n, :i].sum())
