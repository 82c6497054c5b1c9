"""Finite-strain elastoplastic solver at a fixed eps > 0.

Each time step approximately minimizes the incremental functional

    E(t, u, z) + (sigma_y / eps) * sum_e area_e * ||zeta_e||_F

where the new plastic state of element e is exp(zeta_e) (I + eps z_prev_e)
for a symmetric trace-free increment zeta_e, so the flow cost is evaluated
exactly along the exponential path and det(I + eps z) = 1 is preserved by
construction. The minimization alternates a Newton solve in the nodal
displacements with an elementwise polar search over zeta and stops once a
full sweep decreases the value by less than the step's slack allowance.

The polar search exploits two closed forms: for zeta = r (cos th E1 +
sin th E2) in the orthonormal deviatoric basis, exp(zeta) = cosh(r/sqrt2) I
+ (sqrt2 sinh(r/sqrt2)) (cos th E1 + sin th E2), and det of the elastic
strain is independent of the candidate (det exp(-zeta) = 1), so the element
objective reduces to a few scalar operations per candidate and whole
candidate grids are evaluated at once across elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    LoadProgram,
    Mesh,
    StateField,
    _inv22,
    element_gradients,
    finite_energy,
    finite_energy_parts,
    finite_hessian_u,
    finite_residual_u,
    linear_energy,
)
from .errors import (
    ArgumentError,
    BarrierError,
    DomainError,
    InvariantError,
    NonConvergence,
)
from .material import MaterialParams
from .tensors import mat_exp
from .trajectory import TimeGrid, Trajectory

_SQRT2 = np.sqrt(2.0)
_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0

# radial candidate grid: explicit kink at 0 plus a geometric ladder; entries
# beyond the admissible ball are masked to +inf by the objective itself
_R_GRID = np.concatenate([[0.0], np.geomspace(1e-7, 0.9, 15)])

_THETA_ITERS = 32
_R_ITERS_COARSE = 34
_R_ITERS_INNER = 30
_R_ITERS_FINAL = 48

# energy-balance upper estimate per unit (tau + alpha); calibrated on the
# default scenario, see diagnostics()
_BALANCE_COEFF = 0.01


@dataclass(frozen=True)
class SolverTol:
    """Termination knobs for the incremental solver."""

    newton_abs: float = 1e-10
    newton_max: int = 50
    sweep_max: int = 200
    r_tol: float = 1e-10
    tie_tol: float = 1e-12
    theta_samples: int = 16


@dataclass(frozen=True)
class StepInfo:
    """Bookkeeping from one incremental step."""

    sweeps: int
    newton_iters: int
    diss_increment: float
    value: float


def _descent_direction(hff: np.ndarray, rf: np.ndarray) -> np.ndarray:
    """Newton direction, ridge-regularized until it points downhill."""
    n = hff.shape[0]
    base = max(abs(float(np.trace(hff))) / n, 1.0)
    ridge = 0.0
    for _ in range(12):
        try:
            step = np.linalg.solve(hff + ridge * np.eye(n), -rf)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and float(step @ rf) < 0.0:
            return step
        ridge = 1e-8 * base if ridge == 0.0 else ridge * 100.0
    raise NonConvergence("could not produce a descent direction")


def minimize_u(
    z: np.ndarray,
    t: float,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    u0: np.ndarray | None = None,
    tol: SolverTol = SolverTol(),
) -> tuple[np.ndarray, int]:
    """Newton minimization of the finite-strain energy at fixed plastic field.

    Backtracking (halving) line search; trial steps with non-finite energy
    are rejected, which is the orientation barrier. A non-finite starting
    point falls back to zero displacements (always admissible). Returns
    (u, iterations). NonConvergence if the residual does not reach
    tol.newton_abs within tol.newton_max iterations; BarrierError if no
    finite-energy step exists along a Newton direction.
    """
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    start = np.zeros((mesh.n_nodes, 2)) if u0 is None else u0
    state = StateField.make(mesh, start, z)
    energy = finite_energy(state, t, eps, mesh, load, p)
    if not np.isfinite(energy):
        state = StateField.make(mesh, np.zeros((mesh.n_nodes, 2)), z)
        energy = finite_energy(state, t, eps, mesh, load, p)
    free = np.repeat(mesh.free_mask, 2)
    for iters in range(tol.newton_max + 1):
        res = finite_residual_u(state, t, eps, mesh, load, p)
        if float(np.linalg.norm(res)) <= tol.newton_abs:
            return state.u, iters
        if iters == tol.newton_max:
            break
        hess = finite_hessian_u(state, eps, mesh, p)
        rf = res.reshape(-1)[free]
        step = _descent_direction(hess[np.ix_(free, free)], rf)
        slope = float(step @ rf)
        full = np.zeros(2 * mesh.n_nodes)
        full[free] = step
        direction = full.reshape(-1, 2)
        s = 1.0
        accepted = False
        saw_finite = False
        for _ in range(60):
            trial = StateField.make(mesh, state.u + s * direction, state.z)
            e_try = finite_energy(trial, t, eps, mesh, load, p)
            if np.isfinite(e_try):
                saw_finite = True
                # absolute slack keeps roundoff from stalling the accept
                # test once the decrease is below machine resolution
                cut = energy + 1e-4 * s * slope + 1e-13 * (1.0 + abs(energy))
                if e_try <= cut:
                    state, energy = trial, e_try
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            if not saw_finite:
                raise BarrierError(
                    "no orientation-preserving step along the Newton direction"
                )
            raise NonConvergence("line search failed to decrease the energy")
    raise NonConvergence("Newton budget exhausted in the displacement solve")


class _ZetaProblem:
    """Reduced per-element objective for the multiplicative plastic search.

    Stores only scalars per element; value() accepts polar candidate arrays
    (leading axis = element, arbitrary trailing candidate axes) and returns
    the incremental energy density plus flow cost, +inf outside the
    admissible ball.
    """

    def __init__(self, f_tr, p_anchor, eps, p: MaterialParams):
        g = np.einsum("kji,kjl->kil", f_tr, f_tr)
        det = f_tr[:, 0, 0] * f_tr[:, 1, 1] - f_tr[:, 0, 1] * f_tr[:, 1, 0]
        if np.any(det <= 0.0):
            raise DomainError("trial elastic strain not orientation-preserving")
        self.fsq = g[:, 0, 0] + g[:, 1, 1]
        self.a = (g[:, 0, 0] - g[:, 1, 1]) / _SQRT2
        self.b = _SQRT2 * g[:, 0, 1]
        self.ldet = np.log(det)
        self.p00 = p_anchor[:, 0, 0]
        self.p01 = p_anchor[:, 0, 1]
        self.p10 = p_anchor[:, 1, 0]
        self.p11 = p_anchor[:, 1, 1]
        self.eps = eps
        self.p = p

    @property
    def size(self) -> int:
        return self.fsq.size

    def value(self, r, th):
        r = np.asarray(r, dtype=float)
        th = np.asarray(th, dtype=float)
        nd = max(r.ndim, th.ndim)
        shape = (-1,) + (1,) * (nd - 1)

        def bc(arr):
            return arr.reshape(shape)

        p = self.p
        ct = np.cos(th)
        st = np.sin(th)
        s = _SQRT2 * r
        frob = np.cosh(s) * bc(self.fsq) - _SQRT2 * np.sinh(s) * (
            bc(self.a) * ct + bc(self.b) * st
        )
        ldet = bc(self.ldet)
        elastic = 0.5 * p.mu * (frob - 2.0) - p.mu * ldet + 0.5 * p.lam * ldet * ldet
        rho = r / _SQRT2
        ch = np.cosh(rho)
        sh = np.sinh(rho)
        e00 = ch + sh * ct
        e11 = ch - sh * ct
        e01 = sh * st
        p00, p01 = bc(self.p00), bc(self.p01)
        p10, p11 = bc(self.p10), bc(self.p11)
        m00 = e00 * p00 + e01 * p10 - 1.0
        m01 = e00 * p01 + e01 * p11
        m10 = e01 * p00 + e11 * p10
        m11 = e01 * p01 + e11 * p11 - 1.0
        msq = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
        val = (elastic + p.h * msq) / (self.eps * self.eps)
        val = val + p.sigma_y * r / self.eps
        return np.where(msq <= p.rho_k * p.rho_k, val, np.inf)


def _apply_increment(r, th, p_anchor, eps):
    """(exp(zeta) P - I)/eps for polar zeta, batched over elements."""
    rho = r / _SQRT2
    ch = np.cosh(rho)
    sh = np.sinh(rho)
    e = np.empty_like(p_anchor)
    e[:, 0, 0] = ch + sh * np.cos(th)
    e[:, 0, 1] = sh * np.sin(th)
    e[:, 1, 0] = e[:, 0, 1]
    e[:, 1, 1] = ch - sh * np.cos(th)
    return (e @ p_anchor - np.eye(2)) / eps


def _radial_line(prob: _ZetaProblem, th, tol: SolverTol, iters: int):
    """Minimize over r >= 0 at fixed angles; the kink at r = 0 is explicit.

    th may carry extra trailing candidate axes. Coarse geometric grid, then
    golden-section refinement inside the winning bracket, then an explicit
    comparison against r = 0 which wins ties. Returns (r, value) shaped
    like th.
    """
    th = np.asarray(th, dtype=float)
    r_b = _R_GRID.reshape((1,) * th.ndim + (-1,))
    v_grid = prob.value(r_b, th[..., None])
    j = np.argmin(v_grid, axis=-1)
    r_best = _R_GRID[j]
    v_best = np.take_along_axis(v_grid, j[..., None], axis=-1)[..., 0]
    last = _R_GRID.size - 1
    lo = np.where(j > 0, _R_GRID[np.maximum(j - 1, 0)], 0.0)
    hi = np.where(j < last, _R_GRID[np.minimum(j + 1, last)], _R_GRID[last] * 1.6)
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1 = prob.value(x1, th)
    f2 = prob.value(x2, th)
    for _ in range(iters):
        pick = f1 < f2
        hi = np.where(pick, x2, hi)
        lo = np.where(pick, lo, x1)
        x_keep = np.where(pick, x1, x2)
        f_keep = np.where(pick, f1, f2)
        width = hi - lo
        x_new = np.where(pick, hi - _INV_PHI * width, lo + _INV_PHI * width)
        f_new = prob.value(x_new, th)
        x1 = np.where(pick, x_new, x_keep)
        f1 = np.where(pick, f_new, f_keep)
        x2 = np.where(pick, x_keep, x_new)
        f2 = np.where(pick, f_keep, f_new)
    r_in = np.where(f1 < f2, x1, x2)
    v_in = np.minimum(f1, f2)
    take = v_in < v_best
    r_best = np.where(take, r_in, r_best)
    v_best = np.where(take, v_in, v_best)
    v_zero = prob.value(np.zeros_like(th), th)
    zero = v_zero <= v_best + tol.tie_tol
    return np.where(zero, 0.0, r_best), np.where(zero, v_zero, v_best)


def _search_zeta(prob: _ZetaProblem, r_cur, th_cur, tol: SolverTol):
    """Polar search: coarse angular grid (plus each element's trial angle),
    golden-section in theta nested over the radial line search, then the
    current iterate and zero compared last. Returns (r, th, value)."""
    k = prob.size
    rows = np.arange(k)
    uniform = np.linspace(0.0, 2.0 * np.pi, tol.theta_samples, endpoint=False)
    th_grid = np.concatenate(
        [
            np.arctan2(prob.b, prob.a)[:, None],
            np.broadcast_to(uniform, (k, tol.theta_samples)),
        ],
        axis=1,
    )
    r_c, v_c = _radial_line(prob, th_grid, tol, _R_ITERS_COARSE)
    j = np.argmin(v_c, axis=1)
    th_best = th_grid[rows, j]
    r_best = r_c[rows, j]
    v_best = v_c[rows, j]
    spacing = 2.0 * np.pi / tol.theta_samples
    lo = th_best - spacing
    hi = th_best + spacing
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1 = _radial_line(prob, x1, tol, _R_ITERS_INNER)[1]
    f2 = _radial_line(prob, x2, tol, _R_ITERS_INNER)[1]
    for _ in range(_THETA_ITERS):
        pick = f1 < f2
        hi = np.where(pick, x2, hi)
        lo = np.where(pick, lo, x1)
        x_keep = np.where(pick, x1, x2)
        f_keep = np.where(pick, f1, f2)
        width = hi - lo
        x_new = np.where(pick, hi - _INV_PHI * width, lo + _INV_PHI * width)
        f_new = _radial_line(prob, x_new, tol, _R_ITERS_INNER)[1]
        x1 = np.where(pick, x_new, x_keep)
        f1 = np.where(pick, f_new, f_keep)
        x2 = np.where(pick, x_keep, x_new)
        f2 = np.where(pick, f_keep, f_new)
    th_g = np.where(f1 < f2, x1, x2)
    r_g, v_g = _radial_line(prob, th_g, tol, _R_ITERS_FINAL)
    take = v_g < v_best
    th_best = np.where(take, th_g, th_best)
    r_best = np.where(take, r_g, r_best)
    v_best = np.where(take, v_g, v_best)
    v_cur = prob.value(r_cur, th_cur)
    keep = v_cur < v_best
    th_best = np.where(keep, th_cur, th_best)
    r_best = np.where(keep, r_cur, r_best)
    v_best = np.where(keep, v_cur, v_best)
    v_zero = prob.value(np.zeros(k), np.zeros(k))
    zero = v_zero <= v_best + tol.tie_tol
    return (
        np.where(zero, 0.0, r_best),
        np.where(zero, 0.0, th_best),
        np.where(zero, v_zero, v_best),
    )


def update_z_local(
    element: int,
    u: np.ndarray,
    z_prev_e: np.ndarray,
    eps: float,
    mesh: Mesh,
    p: MaterialParams,
    tol: SolverTol = SolverTol(),
) -> np.ndarray:
    """One element's plastic update at fixed displacements.

    Minimizes the element's share of the incremental functional over
    multiplicative symmetric trace-free increments of the previous plastic
    state. Always feasible: the result falls back to z_prev_e itself when
    no flow lowers the value (and on ties, preferring no flow).
    """
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    g = element_gradients(mesh, np.asarray(u, dtype=float))[int(element)]
    p_anchor = (np.eye(2) + eps * np.asarray(z_prev_e, dtype=float))[None]
    f_tr = (np.eye(2) + eps * g)[None] @ _inv22(p_anchor)
    prob = _ZetaProblem(f_tr, p_anchor, eps, p)
    r, th, _ = _search_zeta(prob, np.zeros(1), np.zeros(1), tol)
    if r[0] == 0.0:
        return np.asarray(z_prev_e, dtype=float).copy()
    return _apply_increment(r, th, p_anchor, eps)[0]


def _solve_step(
    prev: StateField,
    t: float,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    tol: SolverTol,
    slack: float,
) -> tuple[StateField, StepInfo]:
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    elastic, hardening = finite_energy_parts(prev, eps, mesh, p)
    if not np.all(np.isfinite(elastic + hardening)):
        raise ArgumentError("previous state has infinite energy")
    eye = np.eye(2)
    p_anchor = eye[None, :, :] + eps * prev.z
    p_inv = _inv22(p_anchor)
    p_norm = np.linalg.norm(p_anchor, axis=(1, 2))
    p_dist = eps * np.linalg.norm(prev.z, axis=(1, 2))
    m = mesh.n_elements
    r = np.zeros(m)
    th = np.zeros(m)
    z = prev.z.copy()
    u = prev.u
    value = np.inf
    newton_total = 0
    sweeps = 0
    for sweeps in range(1, tol.sweep_max + 1):
        u, its = minimize_u(z, t, eps, mesh, load, p, u0=u, tol=tol)
        newton_total += its
        f_tr = (eye[None, :, :] + eps * element_gradients(mesh, u)) @ p_inv
        prob = _ZetaProblem(f_tr, p_anchor, eps, p)
        # an element still at zero flow stays there when the kink slope
        # beats twice the bound on the smooth slope at r = 0 (elastic skip)
        smooth = (
            p.mu * np.hypot(prob.a, prob.b) + 2.0 * p.h * p_dist * p_norm
        ) / (eps * eps)
        active = ~((r == 0.0) & (p.sigma_y / eps >= 2.0 * smooth))
        if np.any(active):
            idx = np.flatnonzero(active)
            sub = _ZetaProblem(f_tr[idx], p_anchor[idx], eps, p)
            r_new, th_new, _ = _search_zeta(sub, r[idx], th[idx], tol)
            r[idx] = r_new
            th[idx] = th_new
            # untouched elements keep the previous plastic strain bit-exactly
            moved = r > 0.0
            z = prev.z.copy()
            z[moved] = _apply_increment(
                r[moved], th[moved], p_anchor[moved], eps
            )
        state = StateField.make(mesh, u, z)
        new_value = finite_energy(state, t, eps, mesh, load, p) + (
            p.sigma_y / eps
        ) * float(mesh.areas @ r)
        if new_value > value + 1e-11 * (1.0 + abs(value)):
            raise InvariantError("incremental value increased across a sweep")
        decrease = value - new_value
        value = new_value
        if decrease < max(slack, 1e-13 * (1.0 + abs(value))):
            break
    else:
        raise NonConvergence("sweep budget exhausted in the incremental step")
    # final half-sweep so the displacements match the final plastic state
    u, its = minimize_u(z, t, eps, mesh, load, p, u0=u, tol=tol)
    newton_total += its
    state = StateField.make(mesh, u, z)
    diss = (p.sigma_y / eps) * float(mesh.areas @ r)
    value = finite_energy(state, t, eps, mesh, load, p) + diss
    return state, StepInfo(
        sweeps=sweeps,
        newton_iters=newton_total,
        diss_increment=diss,
        value=value,
    )


def solve_step(
    prev: StateField,
    t: float,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    tol: SolverTol = SolverTol(),
    slack: float = 0.0,
) -> StateField:
    """One incremental step of the finite-strain model.

    Alternates the Newton displacement solve with the elementwise
    multiplicative plastic search until a full sweep decreases the
    incremental functional by less than slack (the step length times the
    run's per-unit-time tolerance), then re-minimizes the displacements so
    the returned state is block-consistent. The value never increases
    across sweeps.
    """
    state, _ = _solve_step(prev, t, eps, mesh, load, p, tol, slack)
    return state


def solve_trajectory(
    grid: TimeGrid,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    tol: SolverTol = SolverTol(),
) -> Trajectory:
    """Incremental trajectory of the finite-strain model from the zero state.

    The per-step slack is (t_i - t_{i-1}) * grid.alpha. Dissipation
    increments come from the polar increments directly, so they are exact
    for the exponential path the solver takes.
    """
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    if abs(load.profile(float(grid.instants[0]))) > 0.0:
        raise ArgumentError("the load profile must vanish at t = 0")
    states = [StateField.zero(mesh)]
    n_steps = grid.instants.size - 1
    diss = np.zeros(n_steps)
    work = np.zeros(n_steps)
    sweep_counts = np.zeros(n_steps, dtype=int)
    newton_counts = np.zeros(n_steps, dtype=int)
    energies = np.zeros(n_steps + 1)
    energies[0] = finite_energy(states[0], 0.0, eps, mesh, load, p)
    for i in range(1, n_steps + 1):
        t = float(grid.instants[i])
        dt = t - float(grid.instants[i - 1])
        state, info = _solve_step(
            states[-1], t, eps, mesh, load, p, tol, dt * grid.alpha
        )
        diss[i - 1] = info.diss_increment
        d_profile = load.profile(t) - load.profile(float(grid.instants[i - 1]))
        mean_u = 0.5 * (states[-1].u + state.u)
        work[i - 1] = -d_profile * float(np.sum(load.spatial * mean_u))
        sweep_counts[i - 1] = info.sweeps
        newton_counts[i - 1] = info.newton_iters
        energies[i] = finite_energy(state, t, eps, mesh, load, p)
        states.append(state)
    return Trajectory(
        instants=grid.instants.copy(),
        states=states,
        diss_increments=diss,
        energies=energies,
        work=work,
        eps=eps,
        alpha=grid.alpha,
        sweep_counts=sweep_counts,
        newton_counts=newton_counts,
    )


def perturbation_dictionary(
    mesh: Mesh, amplitudes: tuple[float, ...] = (1e-3, 1e-2)
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fixed test perturbations (u-field, constant dev-sym direction).

    Entry 0 is the zero perturbation. Displacement entries are bump-shaped
    nodal fields vanishing on the clamped edge (three centers, both
    coordinate directions, both signs, each amplitude); plastic entries are
    the two deviatoric basis directions, both signs, each amplitude.
    """
    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    lx = float(np.max(x))
    ly = float(np.max(y))
    width = 0.3 * max(lx, ly)
    centers = [(0.3, 0.5), (0.6, 0.3), (0.8, 0.7)]
    e1 = np.array([[1.0, 0.0], [0.0, -1.0]]) / _SQRT2
    e2 = np.array([[0.0, 1.0], [1.0, 0.0]]) / _SQRT2
    entries = [(np.zeros((mesh.n_nodes, 2)), np.zeros((2, 2)))]
    for cx, cy in centers:
        d2 = (x - cx * lx) ** 2 + (y - cy * ly) ** 2
        bump = (x / lx) * np.exp(-d2 / (width * width))
        for direction in range(2):
            field = np.zeros((mesh.n_nodes, 2))
            field[:, direction] = bump
            for amp in amplitudes:
                for sign in (1.0, -1.0):
                    entries.append((sign * amp * field, np.zeros((2, 2))))
    for basis in (e1, e2):
        for amp in amplitudes:
            for sign in (1.0, -1.0):
                entries.append((np.zeros((mesh.n_nodes, 2)), sign * amp * basis))
    return entries


def stability_residual(
    state: StateField,
    t: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    dictionary: list[tuple[np.ndarray, np.ndarray]],
    eps: float | None = None,
) -> float:
    """Worst energy gain over the test dictionary at one instant.

    For each entry, compares the perturbed state's energy plus the exact
    flow cost of reaching it against the current energy; returns the
    minimum (0 at a stable state, negative if some test lowers the total).
    Plastic perturbations are applied multiplicatively through the
    exponential when eps is given, additively in the small-strain model.
    """
    if eps is None:
        base = linear_energy(state, t, mesh, load, p)
    else:
        base = finite_energy(state, t, eps, mesh, load, p)
    total_area = float(np.sum(mesh.areas))
    worst = np.inf
    for du, ztilde in dictionary:
        flow = float(np.linalg.norm(ztilde))
        if flow > 0.0:
            if eps is None:
                z_hat = state.z + ztilde[None, :, :]
            else:
                q = mat_exp(eps * ztilde)
                pz = np.eye(2)[None, :, :] + eps * state.z
                z_hat = (q[None, :, :] @ pz - np.eye(2)[None, :, :]) / eps
            cost = p.sigma_y * flow * total_area
        else:
            z_hat = state.z
            cost = 0.0
        trial = StateField.make(mesh, state.u + du, z_hat)
        if eps is None:
            e_hat = linear_energy(trial, t, mesh, load, p)
        else:
            e_hat = finite_energy(trial, t, eps, mesh, load, p)
        worst = min(worst, e_hat + cost - base)
    return float(worst)


def coercivity_ratio(traj: Trajectory, mesh: Mesh, p: MaterialParams) -> float:
    """Largest (|grad u|^2 + |z|^2 + |eps z|_inf^2) / (1 + stored energy)
    along a finite-strain trajectory."""
    if traj.eps is None:
        raise ArgumentError("coercivity ratio needs a finite-strain trajectory")
    worst = 0.0
    for state in traj.states:
        g = element_gradients(mesh, state.u)
        grad_sq = float(mesh.areas @ np.sum(g * g, axis=(1, 2)))
        z_sq = float(mesh.areas @ np.sum(state.z * state.z, axis=(1, 2)))
        z_inf = traj.eps * float(np.max(np.linalg.norm(state.z, axis=(1, 2))))
        elastic, hardening = finite_energy_parts(state, traj.eps, mesh, p)
        stored = float(mesh.areas @ (elastic + hardening))
        worst = max(worst, (grad_sq + z_sq + z_inf * z_inf) / (1.0 + stored))
    return worst


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-instant stability and energy-balance check results."""

    instants: np.ndarray
    stability_residuals: np.ndarray
    balance_gaps: np.ndarray
    balance_upper: float
    coercivity: float | None
    violations: tuple[str, ...]


def diagnostics(
    traj: Trajectory,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
    stability_tol: float = 1e-6,
    balance_tol: float = 1e-8,
    balance_coeff: float = _BALANCE_COEFF,
    amplitudes: tuple[float, ...] = (1e-3, 1e-2),
) -> DiagnosticsReport:
    """Stability residuals over the test dictionary and two-sided energy
    balance along a trajectory.

    The balance gap must lie in [-balance_tol, balance_coeff * (tau +
    alpha)]: only the upper estimate is guaranteed by incremental
    minimization, the lower one holds up to time discretization. Fills
    traj.stability_residuals as a side effect and flags violations rather
    than raising.
    """
    dictionary = perturbation_dictionary(mesh, amplitudes)
    n = traj.instants.size
    stability = np.zeros(n)
    for i in range(n):
        stability[i] = stability_residual(
            traj.states[i],
            float(traj.instants[i]),
            mesh,
            load,
            p,
            dictionary,
            eps=traj.eps,
        )
    traj.stability_residuals = stability
    gaps = traj.balance_gaps()
    tau = float(np.max(np.diff(traj.instants)))
    upper = balance_coeff * (tau + traj.alpha)
    violations = []
    for i in range(n):
        if stability[i] < -stability_tol:
            violations.append(
                f"stability residual {stability[i]:.3e} at t={traj.instants[i]:g}"
            )
        if gaps[i] < -balance_tol or gaps[i] > upper:
            violations.append(
                f"balance gap {gaps[i]:.3e} outside bounds at t={traj.instants[i]:g}"
            )
    coercivity = None
    if traj.eps is not None:
        coercivity = coercivity_ratio(traj, mesh, p)
    return DiagnosticsReport(
        instants=traj.instants.copy(),
        stability_residuals=stability,
        balance_gaps=gaps,
        balance_upper=upper,
        coercivity=coercivity,
        violations=tuple(violations),
    )
