"""Acceptance suite: one test per contract-level guarantee.

Each test pins the tolerance of one end-to-end guarantee the package makes
— kernel exactness, the sampled model assumptions, oracle equivalence of
both solvers, the energetic certificates, and the convergence of the
finite-strain model to its small-strain limit along the default ladder.
The per-module suites own the finer-grained behavior; nothing here relaxes
a bound they establish.
"""

import dataclasses
import time

import numpy as np
import pytest

import plastlim as pl

from conftest import hat_breakpoints


def devsym(a, b):
    return np.array([[a, b], [b, -a]]) / np.sqrt(2.0)


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@pytest.fixture(scope="session")
def default_scenario():
    config = pl.default_config()
    mesh = config.make_mesh()
    return config, mesh, config.make_load(mesh)


@pytest.fixture(scope="session")
def default_sweep(tmp_path_factory):
    """One full-ladder sweep of the default scenario, with its wall time."""
    config = dataclasses.replace(
        pl.default_config(),
        output_dir=str(tmp_path_factory.mktemp("accept_sweep")),
    )
    start = time.monotonic()
    report = pl.run_sweep(config)
    return config, report, time.monotonic() - start


def test_tensor_kernels_are_exact_to_tolerance():
    """Roundtrip, unimodularity, and rotation invariance of the kernels."""
    rng = np.random.default_rng(0)
    worst_roundtrip = 0.0
    worst_det = 0.0
    worst_invariance = 0.0
    for _ in range(500):
        # entries bounded by 0.25 keep exp(a) inside the principal-log ball
        a = rng.uniform(-0.25, 0.25, size=(2, 2))
        worst_roundtrip = max(
            worst_roundtrip, pl.frobenius(pl.mat_log(pl.mat_exp(a)) - a)
        )
        q = pl.mat_exp(devsym(*rng.uniform(-0.55, 0.55, size=2)))
        worst_roundtrip = max(
            worst_roundtrip, pl.frobenius(pl.mat_exp(pl.mat_log(q)) - q)
        )
        zeta = rng.uniform(-2.0, 2.0, size=(2, 2))
        zeta[1, 1] = -zeta[0, 0]
        worst_det = max(worst_det, abs(np.linalg.det(pl.mat_exp(zeta)) - 1.0))
        f = rng.standard_normal((2, 2))
        turned = rotation(rng.uniform(-np.pi, np.pi)) @ f
        worst_invariance = max(
            worst_invariance,
            abs(pl.rotation_distance(f) - pl.rotation_distance(turned)),
        )
    assert worst_roundtrip <= 1e-11
    assert worst_det <= 1e-11
    assert worst_invariance <= 1e-12


def test_assumption_suite_certifies_model_and_rejects_planted_defects():
    """Sampled structural checks pass on the shipped densities, with the
    growth constants finite, and reject planted counterexamples."""
    p = pl.default_config().material
    start = time.monotonic()
    rep = pl.check_energy_assumptions(p, samples=1000, seed=0)
    c7, c8, gamma = pl.check_mult_estimate(p, samples=1000, seed=0)

    def anisotropic(f, params):
        d = np.asarray(f) - np.eye(2)
        return float(params.mu * np.sum(d * d))

    def residual_stress(f, params):
        det = float(np.linalg.det(f))
        if det <= 0.0:
            return float("inf")
        frob_sq = float(np.sum(np.asarray(f) ** 2))
        ld = np.log(det)
        return (
            0.5 * params.mu * (frob_sq - 2.0)
            + params.mu * ld
            + 0.5 * params.lam * ld * ld
        )

    with pytest.raises(pl.ViolationError):
        pl.check_energy_assumptions(p, samples=300, density=anisotropic)
    with pytest.raises(pl.ViolationError):
        pl.check_energy_assumptions(p, samples=300, density=residual_stress)
    elapsed = time.monotonic() - start

    assert rep.frame_max <= 1e-10
    assert rep.c1_est > 0.0
    assert np.isfinite(rep.c2_est) and rep.c2_est > 0.0
    assert np.isfinite(c7) and c7 > 0.0
    assert c8 == 1.0
    assert gamma > 0.0
    assert elapsed < 30.0


def test_quadratic_expansion_holds_inside_verified_radius():
    """The rescaled elastic density matches its quadratic seminorm to 10%
    relative accuracy on fresh samples inside the certified radius."""
    p = pl.default_config().material
    radius = pl.expansion_radius("el", 0.1, p, seed=0)
    assert radius > 0.0
    tensor = pl.IsotropicTensor.elastic(p.mu, p.lam)
    rng = np.random.default_rng(1)
    eps = 0.05
    for _ in range(400):
        m = rng.standard_normal((2, 2))
        a = 0.5 * (m + m.T)
        # rescale so that ||eps a|| lands uniformly inside the radius
        a *= rng.uniform(0.0, 1.0) * radius / (eps * pl.frobenius(a))
        q = tensor.seminorm_sq(a)
        w = pl.rescaled_density(eps, a, "el", p)
        # the 1e-9 allowance covers evaluation roundoff of the density,
        # which is absolute while both sides vanish quadratically at zero
        assert abs(w - q) <= 0.1 * q + 1e-9


def test_rescaled_dissipation_recovers_flow_cost_at_first_order():
    """Along exponential recovery pairs the rescaled distance reproduces
    the flow cost, with the state error first order in the strain scale."""
    p = pl.default_config().material
    table = pl.check_dissipation_limit(p, samples=120, seed=0)
    assert table.samples >= 100
    assert table.eps_ladder == (1e-1, 1e-2, 1e-3, 1e-4)
    assert max(table.value_err) <= 1e-7
    assert table.order >= 1.0
    assert np.isfinite(table.c_est) and table.c_est > 0.0
    for eps, err in zip(table.eps_ladder, table.state_err):
        assert err <= table.c_est * eps * (1.0 + 1e-12)


def test_small_strain_solver_matches_independent_minimizations(
    local_oracle, convex_oracle, two_mesh
):
    """The local update matches a dense two-dof minimization and the
    coupled step matches a convex whole-system program, step by step."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        mu = rng.uniform(0.5, 3.0)
        h = rng.uniform(0.1, 2.0)
        sy = rng.uniform(0.05, 1.0)
        e = devsym(*rng.normal(scale=0.5, size=2))
        zp = devsym(*rng.normal(scale=0.3, size=2))
        z_oracle = local_oracle(e, zp, mu, h, sy)
        z_solver = pl.return_map(
            pl.ReturnMapInputs(e_dev=e, z_prev=zp, mu=mu, h=h, sigma_y=sy)
        )
        worst = max(worst, float(np.linalg.norm(z_solver - z_oracle)))
    assert worst <= 1e-8

    p = pl.MaterialParams(mu=1.0, lam=1.0, h=0.5, sigma_y=0.1)
    load = pl.LoadProgram.from_body_force(two_mesh, (0.0, -0.5), hat_breakpoints())
    grid = pl.TimeGrid.uniform(1.0, 10)
    cache = pl.StiffnessCache(two_mesh, p)
    state = pl.StateField.zero(two_mesh)
    z_ref = np.zeros_like(state.z)
    flowed = False
    for i in range(1, 11):
        t = float(grid.instants[i])
        state = pl.solve_step0(state, t, two_mesh, load, p, cache=cache)
        u_ref, z_new = convex_oracle(two_mesh, load, p, z_ref, t)
        assert np.max(np.abs(state.u - u_ref)) <= 1e-7
        assert np.max(np.abs(state.z - z_new)) <= 1e-7
        z_ref = z_new
        flowed = flowed or np.linalg.norm(z_ref) > 1e-3
    assert flowed  # the scenario must actually exercise the flow branch


def test_finite_strain_step_matches_nested_brute_force(
    tri_mesh, step_oracle, incremental_value
):
    """On a one-element mesh the coupled step reaches the same incremental
    value as a brute-force search over all dofs, at two strain scales."""
    p = pl.MaterialParams(mu=1.0, lam=1.0, h=0.5, sigma_y=0.05)
    load = pl.LoadProgram.from_body_force(
        tri_mesh, (0.0, -0.6), ((0.0, 0.0), (1.0, 1.0))
    )
    for eps in (0.2, 0.05):
        prev = pl.StateField.zero(tri_mesh)
        for t in (0.5, 1.0):
            state = pl.solve_step(prev, t, eps, tri_mesh, load, p)
            v_solver = incremental_value(state, prev.z, t, eps, tri_mesh, load, p)
            v_oracle = step_oracle(
                tri_mesh, load, p, prev.z, t, eps, n_theta=48, n_r=24
            )
            assert abs(v_solver - v_oracle) <= 1e-6
            prev = state
        assert np.linalg.norm(prev.z) > 1e-3  # both scales must flow


def test_energetic_certificates_hold_and_balance_bound_halves_with_step(
    default_scenario,
):
    """Stability residuals stay above -1e-6 over the test dictionary and
    the two-sided balance bound holds, its upper estimate halving when the
    time step halves."""
    config, mesh, load = default_scenario
    p = config.material
    eps = 0.1
    uppers = {}
    for steps in (config.steps, 2 * config.steps):
        grid = dataclasses.replace(config, steps=steps).make_grid(
            alpha=eps * config.alpha0
        )
        traj = pl.solve_trajectory(grid, eps, mesh, load, p)
        rep = pl.diagnostics(traj, mesh, load, p)
        assert rep.violations == ()
        assert float(rep.stability_residuals.min()) >= -1e-6
        assert float(rep.balance_gaps.min()) >= -1e-8
        assert float(rep.balance_gaps.max()) <= rep.balance_upper
        uppers[steps] = rep.balance_upper
    ratio = uppers[2 * config.steps] / uppers[config.steps]
    assert 0.4 <= ratio <= 0.6


def test_error_metrics_converge_along_default_ladder(default_sweep):
    """Both field errors strictly decrease along the ladder and at least
    halve end to end; both energy gaps shrink at every instant."""
    config, report, elapsed = default_sweep
    assert report.failures == {}
    assert report.completed == config.eps_ladder == (0.2, 0.1, 0.05, 0.025)
    for name in ("err_z_L2", "err_u_H1"):
        sups = report.sup_over_time(name)
        values = [sups[e] for e in config.eps_ladder]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] <= 0.5 * values[0]
    for name in ("energy_gap", "diss_gap"):
        for coarse, fine in zip(config.eps_ladder, config.eps_ladder[1:]):
            gap_coarse = report.column(coarse, name)
            gap_fine = report.column(fine, name)
            # during the shared elastic phase both gaps are exactly zero;
            # everywhere else the finer scale must be strictly closer
            tied_at_zero = (gap_coarse == 0.0) & (gap_fine == 0.0)
            assert np.all((gap_fine < gap_coarse) | tied_at_zero)
    assert elapsed < 300.0


def test_repeated_sweep_produces_bit_identical_csv(default_sweep, tmp_path):
    config, report, _ = default_sweep
    rerun = pl.run_sweep(dataclasses.replace(config, output_dir=str(tmp_path)))
    with open(report.csv_path, "rb") as first:
        with open(rerun.csv_path, "rb") as second:
            assert first.read() == second.read()
