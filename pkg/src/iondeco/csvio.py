"""Delimited output. Every float is written with ``%.17g`` so a parsed file
re-emits byte for byte."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import ComparisonRun, DecoherenceEstimate
from .core import Trajectory
from .stochastic import EnsembleResult

TRAJECTORY_COLUMNS = (
    "t", "re_rho00", "im_rho00", "re_rho01", "im_rho01", "re_rho10", "im_rho10",
    "re_rho11", "im_rho11", "trace_defect", "herm_defect", "purity",
)
ENSEMBLE_COLUMNS = TRAJECTORY_COLUMNS + ("stderr_re_rho01", "stderr_im_rho01")
COMPARE_COLUMNS = ("t", "re_rho01_sb", "im_rho01_sb", "re_rho01_noise", "im_rho01_noise", "delta_r")
SWEEP_COLUMNS = ("rate", "max_abs_delta_r", "time_mean_abs_delta_r")
TAU_COLUMNS = ("rate", "omega", "gamma0", "n_bar", "lambda_dB", "delta_x", "gamma_rate", "tau_D")


def fmt(x: float) -> str:
    return "%.17g" % x


class Table:
    """Header plus rows of floats, and optional trailing ``#`` comment lines."""

    def __init__(self, columns: Sequence[str], rows: np.ndarray, comments: Iterable[str] = ()):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(columns):
            raise ValueError(f"rows of shape {rows.shape} do not fit {len(columns)} columns")
        self.columns = tuple(columns)
        self.rows = rows
        self.comments = list(comments)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
        for c in self.comments:
            buf.write(f"# {c}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.render())


def parse(text: str) -> Table:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty table")
    columns = lines[0].split(",")
    rows, comments = [], []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return Table(columns, data, comments)


def read(path) -> Table:
    return parse(Path(path).read_text())


def _trajectory_block(traj: Trajectory) -> np.ndarray:
    e = traj.elements
    return np.column_stack([
        traj.times,
        e[:, 0].real, e[:, 0].imag, e[:, 1].real, e[:, 1].imag,
        e[:, 2].real, e[:, 2].imag, e[:, 3].real, e[:, 3].imag,
        traj.trace_defect, traj.herm_defect, traj.purity,
    ])


def trajectory_table(traj: Trajectory, comments=()) -> Table:
    return Table(TRAJECTORY_COLUMNS, _trajectory_block(traj), comments)


def ensemble_table(result: EnsembleResult) -> Table:
    rows = np.column_stack([_trajectory_block(result.mean_trajectory),
                            result.stderr_re_rho01, result.stderr_im_rho01])
    return Table(ENSEMBLE_COLUMNS, rows)


def compare_table(run: ComparisonRun) -> Table:
    sb, nz = run.spin_boson.rho01, run.noise.rho01
    rows = np.column_stack([run.spin_boson.times, sb.real, sb.imag, nz.real, nz.imag,
                            run.delta_r.values])
    return Table(COMPARE_COLUMNS, rows)


def sweep_table(runs: Sequence[ComparisonRun]) -> Table:
    rows = np.array([[r.rate, r.max_abs, r.time_mean_abs] for r in runs], dtype=float)
    return Table(SWEEP_COLUMNS, rows.reshape(len(runs), 3))


def tau_table(estimates: Sequence[DecoherenceEstimate], rates: Sequence[float]) -> Table:
    rows = [[rate, e.omega, e.gamma0, e.n_bar, e.lambda_dB, e.delta_x, e.gamma_rate, e.tau_D]
            for rate, e in zip(rates, estimates)]
    return Table(TAU_COLUMNS, np.array(rows, dtype=float).reshape(len(rows), len(TAU_COLUMNS)))
