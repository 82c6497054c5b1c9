"""File formats: trajectory dumps, metrics CSV, diagnostics JSON lines.

All floats are serialized with repr, i.e. shortest round-trip decimal, so
reading a file back reproduces every value bit-exactly and repeated runs
with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .domain import Mesh, StateField
from .errors import ParseError
from .trajectory import Trajectory

METRIC_COLUMNS = (
    "eps",
    "t",
    "err_u_H1",
    "err_z_L2",
    "A_field_err",
    "energy_gap",
    "diss_gap",
    "stability_residual",
    "balance_gap",
)

_DUMP_HEADER = "plastlim-trajectory 1"


def _line(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _int_line(values) -> str:
    return " ".join(str(int(v)) for v in values)


def dump_trajectory(path: str, mesh: Mesh, traj: Trajectory) -> None:
    """Write mesh and trajectory as versioned structured text."""
    out = [_DUMP_HEADER]
    out.append(f"nodes {mesh.n_nodes}")
    for row in mesh.nodes:
        out.append(_line(row))
    out.append(f"triangles {mesh.n_elements}")
    for row in mesh.triangles:
        out.append(_int_line(row))
    out.append(f"gamma {mesh.gamma_nodes.size}")
    out.append(_int_line(mesh.gamma_nodes))
    out.append("eps none" if traj.eps is None else f"eps {repr(float(traj.eps))}")
    out.append(f"alpha {repr(float(traj.alpha))}")
    n_t = traj.instants.size
    out.append(f"instants {n_t}")
    out.append(_line(traj.instants))
    out.append(f"energies {n_t}")
    out.append(_line(traj.energies))
    out.append(f"diss {n_t - 1}")
    out.append(_line(traj.diss_increments))
    out.append(f"work {n_t - 1}")
    out.append(_line(traj.work))
    if traj.stability_residuals is not None:
        out.append(f"stability {n_t}")
        out.append(_line(traj.stability_residuals))
    if traj.sweep_counts is not None:
        out.append(f"sweeps {n_t - 1}")
        out.append(_int_line(traj.sweep_counts))
    if traj.newton_counts is not None:
        out.append(f"newtons {n_t - 1}")
        out.append(_int_line(traj.newton_counts))
    for i, state in enumerate(traj.states):
        out.append(f"state {i}")
        out.append(f"u {mesh.n_nodes}")
        for row in state.u:
            out.append(_line(row))
        out.append(f"z {mesh.n_elements}")
        for zmat in state.z:
            out.append(_line(zmat.reshape(-1)))
    out.append("end")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(out) + "\n")


class _Reader:
    def __init__(self, path: str, lines: list[str]):
        self.path = path
        self.lines = lines
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise ParseError(f"{self.path}: unexpected end of file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def peek(self) -> str:
        if self.pos >= len(self.lines):
            raise ParseError(f"{self.path}: unexpected end of file")
        return self.lines[self.pos]

    def keyword(self, name: str) -> list[str]:
        parts = self.next().split()
        if not parts or parts[0] != name:
            raise ParseError(f"{self.path}: expected '{name}' block at line {self.pos}")
        return parts[1:]

    def count_block(self, name: str) -> int:
        rest = self.keyword(name)
        if len(rest) != 1:
            raise ParseError(f"{self.path}: '{name}' needs a count")
        return int(rest[0])

    def float_rows(self, count: int, width: int) -> np.ndarray:
        rows = np.empty((count, width))
        for i in range(count):
            parts = self.next().split()
            if len(parts) != width:
                raise ParseError(
                    f"{self.path}: expected {width} numbers at line {self.pos}"
                )
            rows[i] = [float(p) for p in parts]
        return rows

    def float_row(self, count: int) -> np.ndarray:
        parts = self.next().split()
        if len(parts) != count:
            raise ParseError(f"{self.path}: expected {count} numbers at line {self.pos}")
        return np.array([float(p) for p in parts])

    def int_rows(self, count: int, width: int) -> np.ndarray:
        return self.float_rows(count, width).astype(int)

    def int_row(self, count: int) -> np.ndarray:
        return self.float_row(count).astype(int)


def load_trajectory(path: str) -> tuple[Mesh, Trajectory]:
    """Read a dump written by dump_trajectory; inverse up to bit identity."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    r = _Reader(path, lines)
    if r.next() != _DUMP_HEADER:
        raise ParseError(f"{path}: not a version-1 trajectory dump")
    n_nodes = r.count_block("nodes")
    nodes = r.float_rows(n_nodes, 2)
    n_el = r.count_block("triangles")
    triangles = r.int_rows(n_el, 3)
    n_gamma = r.count_block("gamma")
    gamma = r.int_row(n_gamma)
    mesh = Mesh(nodes=nodes, triangles=triangles, gamma_nodes=gamma)
    rest = r.keyword("eps")
    eps = None if rest == ["none"] else float(rest[0])
    alpha = float(r.keyword("alpha")[0])
    n_t = r.count_block("instants")
    instants = r.float_row(n_t)
    energies = r.float_row(r.count_block("energies"))
    diss = r.float_row(r.count_block("diss"))
    work = r.float_row(r.count_block("work"))
    stability = None
    sweeps = None
    newtons = None
    while True:
        parts = r.peek().split()
        head = parts[0] if parts else ""
        if head == "stability":
            stability = r.float_row(r.count_block("stability"))
        elif head == "sweeps":
            sweeps = r.int_row(r.count_block("sweeps"))
        elif head == "newtons":
            newtons = r.int_row(r.count_block("newtons"))
        else:
            break
    states = []
    for i in range(n_t):
        rest = r.keyword("state")
        if rest != [str(i)]:
            raise ParseError(f"{path}: state blocks out of order at line {r.pos}")
        u = r.float_rows(r.count_block("u"), 2)
        z = r.float_rows(r.count_block("z"), 4).reshape(-1, 2, 2)
        states.append(StateField(u=u, z=z))
    r.keyword("end")
    return mesh, Trajectory(
        instants=instants,
        states=states,
        diss_increments=diss,
        energies=energies,
        work=work,
        eps=eps,
        alpha=alpha,
        stability_residuals=stability,
        sweep_counts=sweeps,
        newton_counts=newtons,
    )


def write_metrics_csv(path: str, rows) -> None:
    """Write metric rows (iterables matching METRIC_COLUMNS) as CSV."""
    out = [",".join(METRIC_COLUMNS)]
    for row in rows:
        values = list(row)
        if len(values) != len(METRIC_COLUMNS):
            raise ParseError(
                f"metric row has {len(values)} fields, needs {len(METRIC_COLUMNS)}"
            )
        out.append(",".join(repr(float(v)) for v in values))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(out) + "\n")


def read_metrics_csv(path: str) -> list[dict]:
    """Read a metrics CSV back as one dict per row; validates the header."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != METRIC_COLUMNS:
        raise ParseError(f"{path}: header does not match the metrics schema")
    rows = []
    for idx, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(METRIC_COLUMNS):
            raise ParseError(f"{path}: wrong field count on line {idx}")
        rows.append(
            {name: float(part) for name, part in zip(METRIC_COLUMNS, parts)}
        )
    return rows


def write_diagnostics_jsonl(path: str, traj: Trajectory) -> None:
    """One JSON object per instant: energy, dissipation increment, solver
    effort, stability residual, and balance gap."""
    gaps = traj.balance_gaps()
    records = []
    for i, t in enumerate(traj.instants):
        record = {
            "instant": float(t),
            "energy": float(traj.energies[i]),
            "diss_increment": float(traj.diss_increments[i - 1]) if i else 0.0,
            "balance_gap": float(gaps[i]),
        }
        if traj.stability_residuals is not None:
            record["stability_residual"] = float(traj.stability_residuals[i])
        if traj.sweep_counts is not None:
            record["sweeps"] = int(traj.sweep_counts[i - 1]) if i else 0
        if traj.newton_counts is not None:
            record["newton_iters"] = int(traj.newton_counts[i - 1]) if i else 0
        records.append(json.dumps(record, sort_keys=True))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(records) + "\n")
