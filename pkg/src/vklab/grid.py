"""Uniform time grids."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * T / steps``, ``k = 0..steps``."""

    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1, dtype=float)

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.steps * factor)
