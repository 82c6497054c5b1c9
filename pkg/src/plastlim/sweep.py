"""Strain-scale sweep: finite-strain runs down an eps ladder against the
small-strain baseline, with per-instant convergence metrics.

All runs share one mesh, one time grid, and one load program, so the only
thing that varies along the ladder is the strain scale itself. A failing
ladder entry is recorded and skipped rather than aborting the sweep.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .domain import (
    LoadProgram,
    Mesh,
    StateField,
    elastic_strain_tensors,
    element_gradients,
    finite_energy_parts,
)
from .errors import (
    ArgumentError,
    BarrierError,
    DegenerateFit,
    DomainError,
    GridMismatch,
    InvariantError,
    NonConvergence,
)
from .finite import diagnostics, solve_trajectory
from .linearized import StiffnessCache, _deviatoric_sym_gradient, solve_trajectory0
from .material import MaterialParams
from .storage import write_metrics_csv
from .trajectory import TimeGrid, Trajectory

_ERROR_METRICS = ("err_u_H1", "err_z_L2", "A_field_err", "energy_gap", "diss_gap")

_SOLVER_ERRORS = (NonConvergence, BarrierError, DomainError, InvariantError)


@dataclass(frozen=True)
class ErrorTable:
    """Per-instant distance of one finite-strain run from the baseline."""

    instants: np.ndarray
    err_u_H1: np.ndarray
    err_z_L2: np.ndarray
    A_field_err: np.ndarray
    energy_gap: np.ndarray
    diss_gap: np.ndarray

    def column(self, name: str) -> np.ndarray:
        if name not in _ERROR_METRICS:
            raise ArgumentError(f"unknown metric {name!r}")
        return getattr(self, name)


def _weighted_l2(mesh: Mesh, field_sq: np.ndarray) -> float:
    return float(np.sqrt(mesh.areas @ field_sq))


def _linear_stored(state: StateField, mesh: Mesh, p: MaterialParams) -> float:
    g = element_gradients(mesh, state.u)
    g_sym = 0.5 * (g + np.transpose(g, (0, 2, 1)))
    diff = g_sym - 0.5 * (state.z + np.transpose(state.z, (0, 2, 1)))
    tr = np.trace(g, axis1=1, axis2=2) - np.trace(state.z, axis1=1, axis2=2)
    dens = (
        p.mu * np.sum(diff * diff, axis=(1, 2))
        + 0.5 * p.lam * tr * tr
        + p.h * np.sum(state.z * state.z, axis=(1, 2))
    )
    return float(mesh.areas @ dens)


def compute_errors(
    traj_eps: Trajectory,
    traj_0: Trajectory,
    eps: float,
    mesh: Mesh,
    p: MaterialParams,
) -> ErrorTable:
    """Per-instant convergence metrics of a finite-strain trajectory.

    err_u_H1: element-gradient seminorm of the displacement difference.
    err_z_L2: area-weighted norm of the plastic-strain difference.
    A_field_err: distance of the rescaled elastic strain from grad u0 - z0.
    energy_gap: |stored finite-strain energy - stored quadratic energy|.
    diss_gap: |difference of the cumulative dissipations|.

    GridMismatch if the trajectories do not share their instants.
    """
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    if traj_eps.instants.shape != traj_0.instants.shape or np.any(
        traj_eps.instants != traj_0.instants
    ):
        raise GridMismatch("trajectories live on different time grids")
    n = traj_eps.instants.size
    eye = np.eye(2)
    err_u = np.zeros(n)
    err_z = np.zeros(n)
    err_a = np.zeros(n)
    e_gap = np.zeros(n)
    d_gap = np.zeros(n)
    cum_eps = traj_eps.dissipation_totals()
    cum_0 = traj_0.dissipation_totals()
    for i in range(n):
        s_eps = traj_eps.states[i]
        s_0 = traj_0.states[i]
        dg = element_gradients(mesh, s_eps.u - s_0.u)
        err_u[i] = _weighted_l2(mesh, np.sum(dg * dg, axis=(1, 2)))
        dz = s_eps.z - s_0.z
        err_z[i] = _weighted_l2(mesh, np.sum(dz * dz, axis=(1, 2)))
        a_field = (elastic_strain_tensors(s_eps, eps, mesh) - eye[None, :, :]) / eps
        target = element_gradients(mesh, s_0.u) - s_0.z
        da = a_field - target
        err_a[i] = _weighted_l2(mesh, np.sum(da * da, axis=(1, 2)))
        elastic, hardening = finite_energy_parts(s_eps, eps, mesh, p)
        stored_eps = float(mesh.areas @ (elastic + hardening))
        e_gap[i] = abs(stored_eps - _linear_stored(s_0, mesh, p))
        d_gap[i] = abs(cum_eps[i] - cum_0[i])
    return ErrorTable(
        instants=traj_eps.instants.copy(),
        err_u_H1=err_u,
        err_z_L2=err_z,
        A_field_err=err_a,
        energy_gap=e_gap,
        diss_gap=d_gap,
    )


def fit_order(eps_values, metric_values) -> float:
    """Least-squares slope of log(metric) against log(eps).

    Needs at least three ladder points with positive eps. DegenerateFit if
    any metric value is zero: the metric has converged exactly and a
    log-log slope is meaningless.
    """
    eps_arr = np.asarray(eps_values, dtype=float)
    met = np.asarray(metric_values, dtype=float)
    if eps_arr.shape != met.shape or eps_arr.size < 3:
        raise ArgumentError("order fit needs >= 3 matching ladder points")
    if np.any(eps_arr <= 0.0):
        raise ArgumentError("eps values must be positive")
    if np.any(met < 0.0):
        raise ArgumentError("metric values must be nonnegative")
    if np.any(met == 0.0):
        raise DegenerateFit("metric hit zero: exact convergence, no finite order")
    slope, _ = np.polyfit(np.log(eps_arr), np.log(met), 1)
    return float(slope)


@dataclass(frozen=True)
class MetricRow:
    """One CSV row of the sweep report."""

    eps: float
    t: float
    err_u_H1: float
    err_z_L2: float
    A_field_err: float
    energy_gap: float
    diss_gap: float
    stability_residual: float
    balance_gap: float

    def astuple(self) -> tuple:
        return (
            self.eps,
            self.t,
            self.err_u_H1,
            self.err_z_L2,
            self.A_field_err,
            self.energy_gap,
            self.diss_gap,
            self.stability_residual,
            self.balance_gap,
        )


@dataclass
class SweepReport:
    """Everything a sweep produced: rows, failures, fitted orders."""

    eps_ladder: tuple[float, ...]
    instants: np.ndarray
    rows: list[MetricRow]
    failures: dict[float, str]
    orders: dict[str, float]
    csv_path: str | None = None
    baseline: Trajectory | None = None
    trajectories: dict[float, Trajectory] | None = None

    @property
    def completed(self) -> tuple[float, ...]:
        return tuple(e for e in self.eps_ladder if e not in self.failures)

    def column(self, eps: float, name: str) -> np.ndarray:
        """Per-instant values of one metric for one ladder entry."""
        values = [getattr(row, name) for row in self.rows if row.eps == eps]
        if not values:
            raise ArgumentError(f"no rows for eps = {eps}")
        return np.array(values)

    def sup_over_time(self, name: str) -> dict[float, float]:
        return {e: float(np.max(self.column(e, name))) for e in self.completed}


def run_sweep(config: RunConfig, csv_path: str | None = None) -> SweepReport:
    """Run the ladder against the baseline and write the metrics CSV.

    The baseline (small-strain) run must succeed; a failing ladder entry is
    recorded in report.failures and simply has no rows. Fitted orders are
    computed from the sup-over-time of each metric whenever at least three
    ladder entries completed; a metric that is exactly zero somewhere gets
    order inf (exact convergence).
    """
    mesh = config.make_mesh()
    load = config.make_load(mesh)
    p = config.material
    grid0 = config.make_grid(alpha=0.0)
    traj_0 = solve_trajectory0(grid0, mesh, load, p)
    rows: list[MetricRow] = []
    failures: dict[float, str] = {}
    trajectories: dict[float, Trajectory] = {}
    for eps in config.eps_ladder:
        grid = config.make_grid(alpha=config.alpha0 * eps)
        try:
            traj = solve_trajectory(grid, eps, mesh, load, p, tol=config.tol)
            report = diagnostics(traj, mesh, load, p)
            table = compute_errors(traj, traj_0, eps, mesh, p)
        except _SOLVER_ERRORS as exc:
            failures[eps] = f"{type(exc).__name__}: {exc}"
            continue
        trajectories[eps] = traj
        for i, t in enumerate(table.instants):
            rows.append(
                MetricRow(
                    eps=eps,
                    t=float(t),
                    err_u_H1=float(table.err_u_H1[i]),
                    err_z_L2=float(table.err_z_L2[i]),
                    A_field_err=float(table.A_field_err[i]),
                    energy_gap=float(table.energy_gap[i]),
                    diss_gap=float(table.diss_gap[i]),
                    stability_residual=float(report.stability_residuals[i]),
                    balance_gap=float(report.balance_gaps[i]),
                )
            )
    report = SweepReport(
        eps_ladder=config.eps_ladder,
        instants=grid0.instants.copy(),
        rows=rows,
        failures=failures,
        orders={},
        baseline=traj_0,
        trajectories=trajectories,
    )
    if len(report.completed) >= 3:
        eps_ok = np.array(report.completed)
        for name in _ERROR_METRICS:
            sups = np.array([report.sup_over_time(name)[e] for e in report.completed])
            try:
                report.orders[name] = fit_order(eps_ok, sups)
            except DegenerateFit:
                report.orders[name] = float("inf")
    if csv_path is None:
        os.makedirs(config.output_dir, exist_ok=True)
        csv_path = os.path.join(config.output_dir, "metrics.csv")
    write_metrics_csv(csv_path, (row.astuple() for row in rows))
    report.csv_path = csv_path
    return report


def yield_fraction_at_peak(
    mesh: Mesh,
    grid: TimeGrid,
    load: LoadProgram,
    p: MaterialParams,
) -> float:
    """Fraction of elements with nonzero plastic strain at the instant of
    largest |profile|, along the small-strain incremental trajectory."""
    profile = np.array([load.profile(float(t)) for t in grid.instants])
    i_peak = int(np.argmax(np.abs(profile)))
    if i_peak == 0:
        raise ArgumentError("the load profile never leaves zero")
    sub = TimeGrid(instants=grid.instants[: i_peak + 1])
    traj = solve_trajectory0(sub, mesh, load, p)
    z_norm = np.linalg.norm(traj.states[-1].z, axis=(1, 2))
    return float(np.mean(z_norm > 1e-12))


def calibrate_yield_stress(
    mesh: Mesh,
    grid: TimeGrid,
    load: LoadProgram,
    p: MaterialParams,
    target: float = 0.30,
    window: float = 0.15,
    max_iter: int = 40,
) -> float:
    """Yield stress making the peak-load yield fraction land in
    [target, target + window], found by bisection.

    The starting bracket comes from the elastic trial stresses at peak
    load: their quantiles bound the fraction from both sides because the
    fraction is nonincreasing in sigma_y.
    """
    if not 0.0 < target < 1.0:
        raise ArgumentError("target fraction must lie in (0, 1)")
    profile = np.array([load.profile(float(t)) for t in grid.instants])
    i_peak = int(np.argmax(np.abs(profile)))
    if i_peak == 0:
        raise ArgumentError("the load profile never leaves zero")
    cache = StiffnessCache(mesh, p)
    u_el = cache.solve_u(np.zeros((mesh.n_elements, 2, 2)),
                         float(grid.instants[i_peak]), load)
    trial = 2.0 * p.mu * np.linalg.norm(
        _deviatoric_sym_gradient(mesh, u_el), axis=(1, 2)
    )
    hi = float(np.max(trial)) * 1.5
    lo = float(np.quantile(trial, 0.05))

    def fraction(sig: float) -> float:
        return yield_fraction_at_peak(mesh, grid, load, replace(p, sigma_y=sig))

    if fraction(hi) >= target:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        frac = fraction(mid)
        if target <= frac <= target + window:
            return mid
        if frac < target:
            hi = mid
        else:
            lo = mid
    raise NonConvergence("yield-stress calibration did not land in the window")
