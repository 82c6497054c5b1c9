"""Command line driver: assumption checks, single runs, and the sweep.

Exit codes: 0 success, 1 configuration or model error, 2 solver
non-convergence. Every error is also written as structured text to stderr.
The input config file is never modified; each run archives the fully
explicit configuration it used into the output directory, next to a
generated reference listing all defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .checks import (
    check_dissipation_limit,
    check_energy_assumptions,
    check_mult_estimate,
)
from .config import (
    RunConfig,
    default_config,
    parse_config,
    reference_text,
    serialize_config,
)
from .errors import (
    BarrierError,
    NonConvergence,
    PlastlimError,
    ValidationError,
)
from .finite import diagnostics, solve_trajectory
from .linearized import solve_trajectory0
from .storage import dump_trajectory, write_diagnostics_jsonl
from .sweep import run_sweep


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plastlim",
        description="quasi-static elastoplasticity: finite-strain runs,"
        " small-strain baseline, and the strain-scale convergence sweep",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="configuration file (defaults apply)")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument(
            "--seed", type=int, help="sampling seed (overrides config)"
        )

    sp = sub.add_parser("check", help="run the model assumption checks")
    common(sp)
    sp = sub.add_parser("run-finite", help="one finite-strain trajectory")
    common(sp)
    sp.add_argument("--eps", type=float, required=True, help="strain scale > 0")
    sp.add_argument(
        "--diagnostics",
        action="store_true",
        help="also write per-instant diagnostics as JSON lines",
    )
    sp = sub.add_parser("run-linearized", help="the small-strain trajectory")
    common(sp)
    sp.add_argument(
        "--diagnostics",
        action="store_true",
        help="also write per-instant diagnostics as JSON lines",
    )
    sp = sub.add_parser("sweep", help="ladder sweep against the baseline")
    common(sp)
    return parser


def _load_config(args) -> RunConfig:
    config = parse_config(args.config) if args.config else default_config()
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _prepare_out(config: RunConfig) -> str:
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config_used.ini"), "w", encoding="utf-8") as fh:
        fh.write(serialize_config(config))
    with open(
        os.path.join(out, "config_reference.ini"), "w", encoding="utf-8"
    ) as fh:
        fh.write(reference_text())
    if config.defaulted:
        print(f"defaults applied for: {', '.join(config.defaulted)}")
    return out


def _cmd_check(config: RunConfig) -> int:
    report = check_energy_assumptions(config.material, seed=config.seed)
    c7, c8, gamma = check_mult_estimate(config.material, seed=config.seed)
    table = check_dissipation_limit(config.material, seed=config.seed)
    text = "\n\n".join(
        [
            report.text(),
            f"multiplicative control: c7_est {repr(c7)} at c8 {repr(c8)},"
            f" gamma {repr(gamma)}",
            table.text(),
        ]
    )
    print(text)
    out = _prepare_out(config)
    with open(os.path.join(out, "assumptions.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return 0


def _write_run(config, out, traj, mesh, label, want_jsonl) -> None:
    dump_trajectory(os.path.join(out, f"trajectory_{label}.txt"), mesh, traj)
    if want_jsonl:
        write_diagnostics_jsonl(
            os.path.join(out, f"diagnostics_{label}.jsonl"), traj
        )


def _cmd_run_finite(config: RunConfig, eps: float, want_jsonl: bool) -> int:
    if eps is None or eps <= 0.0:
        raise ValidationError(
            "eps must be positive; use run-linearized for the small-strain model"
        )
    out = _prepare_out(config)
    mesh = config.make_mesh()
    load = config.make_load(mesh)
    grid = config.make_grid(alpha=config.alpha0 * eps)
    traj = solve_trajectory(grid, eps, mesh, load, config.material, tol=config.tol)
    report = diagnostics(traj, mesh, load, config.material)
    label = f"eps{eps!r}"
    _write_run(config, out, traj, mesh, label, want_jsonl)
    print(f"finite-strain run at eps = {eps!r}: {traj.instants.size} instants")
    print(f"final energy {float(traj.energies[-1])!r}, total dissipation "
          f"{float(traj.diss_increments.sum())!r}")
    for line in report.violations:
        print(f"diagnostics violation: {line}")
    return 0


def _cmd_run_linearized(config: RunConfig, want_jsonl: bool) -> int:
    out = _prepare_out(config)
    mesh = config.make_mesh()
    load = config.make_load(mesh)
    traj = solve_trajectory0(config.make_grid(), mesh, load, config.material)
    diagnostics(traj, mesh, load, config.material)
    _write_run(config, out, traj, mesh, "linearized", want_jsonl)
    print(f"small-strain run: {traj.instants.size} instants")
    print(f"final energy {float(traj.energies[-1])!r}, total dissipation "
          f"{float(traj.diss_increments.sum())!r}")
    return 0


def _cmd_sweep(config: RunConfig) -> int:
    _prepare_out(config)
    report = run_sweep(config)
    for eps in report.eps_ladder:
        if eps in report.failures:
            print(f"eps {eps!r}: FAILED ({report.failures[eps]})")
        else:
            sup_z = report.sup_over_time("err_z_L2")[eps]
            print(f"eps {eps!r}: sup_t err_z_L2 = {sup_z!r}")
    for name, order in sorted(report.orders.items()):
        print(f"fitted order, {name}: {order!r}")
    print(f"metrics written to {report.csv_path}")
    return 2 if report.failures else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "check":
            return _cmd_check(config)
        if args.command == "run-finite":
            return _cmd_run_finite(config, args.eps, args.diagnostics)
        if args.command == "run-linearized":
            return _cmd_run_linearized(config, args.diagnostics)
        return _cmd_sweep(config)
    except (NonConvergence, BarrierError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except PlastlimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
