"""Time grids and solved trajectories, shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import StateField
from .errors import ArgumentError


@dataclass(frozen=True)
class TimeGrid:
    """Partition of [0, T] with the incremental-problem tolerance alpha.

    instants must start at 0 and strictly increase; alpha >= 0 is the
    per-unit-time slack allowed when terminating each incremental solve.
    """

    instants: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.instants, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ArgumentError("a time grid needs at least two instants")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ArgumentError("instants must start at 0 and strictly increase")
        if self.alpha < 0.0:
            raise ArgumentError("alpha must be nonnegative")
        object.__setattr__(self, "instants", t)

    @classmethod
    def uniform(cls, t_end: float, steps: int, alpha: float = 0.0) -> "TimeGrid":
        if t_end <= 0.0 or steps < 1:
            raise ArgumentError("need t_end > 0 and steps >= 1")
        return cls(instants=np.linspace(0.0, t_end, steps + 1), alpha=alpha)

    @property
    def tau(self) -> float:
        """Largest step size."""
        return float(np.max(np.diff(self.instants)))


@dataclass
class Trajectory:
    """States and energetic bookkeeping along a time grid.

    diss_increments[i] is the dissipation of step i (between instants i and
    i+1); energies[i] the total energy at instant i; work[i] the per-step
    integral of minus the load rate paired with the displacement (trapezoid
    in the stored states). stability_residuals is filled by the diagnostics
    pass (most negative violation over the test dictionary, clamped at 0).
    """

    instants: np.ndarray
    states: list[StateField]
    diss_increments: np.ndarray
    energies: np.ndarray
    work: np.ndarray
    eps: float | None = None
    alpha: float = 0.0
    stability_residuals: np.ndarray | None = None
    sweep_counts: np.ndarray | None = None
    newton_counts: np.ndarray | None = None

    def dissipation_totals(self) -> np.ndarray:
        """Accumulated dissipation at every instant (zero at t = 0)."""
        return np.concatenate([[0.0], np.cumsum(self.diss_increments)])

    def balance_gaps(self) -> np.ndarray:
        """Energy-balance defect at every instant.

        energies[i] + Diss[0, t_i] - energies[0] - sum of work increments;
        exactly zero at t = 0 and small along any well-solved trajectory.
        """
        diss = self.dissipation_totals()
        work_tot = np.concatenate([[0.0], np.cumsum(self.work)])
        return self.energies + diss - self.energies[0] - work_tot
