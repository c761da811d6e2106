"""Uniform time grids.

Every run owns exactly one (step, horizon) grid and all modules share
it; cross-grid interpolation is deliberately unsupported.  Grids are
always built from an integer step count so that h = T/steps holds
exactly and restrictions to a shorter horizon reuse the same sample
times bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Hard cap so a bad config fails fast instead of thrashing memory.
MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class TimeGrid:
    T: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"horizon must be positive and finite, got {self.T}")
        if not (2 <= self.steps <= MAX_STEPS):
            raise ConfigError(f"step count {self.steps} outside [2, {MAX_STEPS}]")

    @property
    def h(self) -> float:
        return self.T / self.steps

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)

    def __len__(self) -> int:
        return self.steps + 1

    def restrict(self, steps: int) -> "TimeGrid":
        """Sub-grid [0, steps*h] with identical step size.

        steps*h is recomputed as a product, not a fresh division, so the
        restricted grid's h equals self.h exactly.
        """
        if not (2 <= steps <= self.steps):
            raise ConfigError(f"cannot restrict {self.steps}-step grid to {steps}")
        return TimeGrid(steps * self.h, steps)

    def extend(self, factor: int = 2) -> "TimeGrid":
        """Longer grid with the same step size (factor times the steps)."""
        if factor < 1:
            raise ConfigError("extension factor must be >= 1")
        return TimeGrid(self.T * factor, self.steps * factor)


def make_grid(T: float, h: float) -> TimeGrid:
    """Grid on [0, T] whose step is the closest achievable to h."""
    if not (h > 0):
        raise ConfigError(f"step must be positive, got {h}")
    return TimeGrid(T, max(2, round(T / h)))


def auto_step(T: float, beta_max: float) -> float:
    """Default step rule: at least 1000 points per horizon and at least
    ~30 points per period of the fastest retained oscillation."""
    return min(T / 1000.0, 0.2 / max(float(beta_max), 1.0))


def trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    w = np.full(grid.steps + 1, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w
