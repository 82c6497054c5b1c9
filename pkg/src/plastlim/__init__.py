"""Quasi-static elastoplasticity at finite strain, its small-strain limit,
and a strain-scale sweep harness measuring the convergence between them."""

from .checks import (
    AssumptionReport,
    DissipationLimitTable,
    check_dissipation_limit,
    check_energy_assumptions,
    check_mult_estimate,
)
from .config import (
    RunConfig,
    default_config,
    parse_config,
    parse_config_text,
    reference_text,
    serialize_config,
)
from .domain import (
    LoadProgram,
    Mesh,
    StateField,
    build_mesh,
    elastic_strain_tensors,
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
    DegenerateFit,
    DomainError,
    GridMismatch,
    InvariantError,
    NonConvergence,
    ParseError,
    PlastlimError,
    SamplingError,
    ValidationError,
    ViolationError,
)
from .finite import (
    DiagnosticsReport,
    SolverTol,
    StepInfo,
    coercivity_ratio,
    diagnostics,
    minimize_u,
    perturbation_dictionary,
    solve_step,
    solve_trajectory,
    stability_residual,
    update_z_local,
)
from .linearized import (
    ReturnMapInputs,
    StiffnessCache,
    optimality_residual0,
    return_map,
    solve_step0,
    solve_trajectory0,
)
from .material import (
    IsotropicTensor,
    MaterialParams,
    dissipation_distance,
    dissipation_potential,
    elastic_density,
    elastic_density_grad,
    expansion_radius,
    hardening_density,
    rescaled_density,
)
from .storage import (
    METRIC_COLUMNS,
    dump_trajectory,
    load_trajectory,
    read_metrics_csv,
    write_diagnostics_jsonl,
    write_metrics_csv,
)
from .sweep import (
    ErrorTable,
    MetricRow,
    SweepReport,
    calibrate_yield_stress,
    compute_errors,
    fit_order,
    run_sweep,
    yield_fraction_at_peak,
)
from .tensors import (
    Decomposition,
    decompose,
    frobenius,
    mat_exp,
    mat_log,
    rotation_distance,
)
from .trajectory import TimeGrid, Trajectory

__all__ = [name for name in dir() if not name.startswith("_")]
